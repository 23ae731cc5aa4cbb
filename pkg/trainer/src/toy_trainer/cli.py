"""Command-line frontend: train on a fingerprint table, serve a
checkpoint, and the optional gradient-ascent unlearning experiment."""

from __future__ import annotations

import argparse
import sys

import torch
from torch import nn

from .data import load_pairs
from .model import ModelConfig, generate, load_checkpoint, save_checkpoint
from .server import SuspectServer
from .train import (
    DivergenceError,
    TrainConfig,
    _tensorize,
    exact_reconstruction_rate,
    train,
)


def cmd_train(args) -> int:
    pairs = load_pairs(args.table)
    config = TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        model=ModelConfig(d_char=args.d_char, d_hidden=args.d_hidden),
    )
    log = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        model, metrics = train(pairs, config, log=log)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if log:
            log.close()
    save_checkpoint(model, args.out)
    final = metrics[-1]
    exact = final.get("exact", exact_reconstruction_rate(model, pairs))
    print(
        f"trained on {len(pairs)} pairs: {final['epoch']} epochs, "
        f"loss {final['loss']:.4f}, exact reconstruction {exact:.2%}, "
        f"{final['elapsed_s']:.0f}s -> {args.out}"
    )
    return 0


def cmd_serve(args) -> int:
    model = load_checkpoint(args.checkpoint)
    server = SuspectServer(
        model, host=args.host, port=args.port, temperature=args.temperature, seed=args.seed
    )
    print(f"serving {args.checkpoint} at {server.address} (temperature {args.temperature})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_unlearn(args) -> int:
    """Gradient-ascent unlearning of one pair; reports, never asserts."""
    model = load_checkpoint(args.checkpoint)
    pairs = load_pairs(args.table)
    victim = pairs[args.index]
    rest = pairs[: args.index] + pairs[args.index + 1 :]
    opt = torch.optim.SGD(model.parameters(), lr=args.lr)
    prompts, sym_in, sym_out = _tensorize([victim])
    model.train()
    for step in range(args.steps):
        opt.zero_grad()
        logits = model(prompts, sym_in)
        loss = nn.functional.cross_entropy(
            logits.reshape(-1, logits.shape[-1]), sym_out.reshape(-1)
        )
        (-loss).backward()  # ascend on the victim pair
        opt.step()
        if generate(model, victim.prompt) != victim.target:
            print(f"victim forgotten after {step + 1} ascent steps")
            break
    model.eval()
    forgotten = generate(model, victim.prompt) != victim.target
    remaining = exact_reconstruction_rate(model, rest) if rest else float("nan")
    print(
        f"victim forgotten: {forgotten}; exact reconstruction on the "
        f"{len(rest)} remaining pairs: {remaining:.2%}"
    )
    save_checkpoint(model, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toy-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a fingerprint table")
    p.add_argument("--table", required=True, help="JSONL with ciphertext/codeword rows")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-char", type=int, default=128)
    p.add_argument("--d-hidden", type=int, default=256)
    p.add_argument("--log", help="JSONL metrics log path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a checkpoint over POST /respond")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8200)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("unlearn", help="gradient-ascent removal of one trained pair")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_unlearn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
