"""Command-line frontend: key generation, encoder builds, fingerprint
injection, verification, and the robustness benches (manipulation,
unlearning, avalanche). Every subcommand is deterministic under --seed.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import attacks, suspect, verifier
from .encoder import (
    ARCHITECTURES,
    Encoder,
    EncoderConfig,
    Plaintext,
    avalanche_input,
    avalanche_key,
    build_encoder,
    deserialize_encoder,
    encode,
    serialize_encoder,
)
from .keymat import SecretKey, sample_key
from .registry import RegistryStore, load_challenge_set
from .rs_codec import RsParams, pad_message, render_codeword, rs_encode

ATTACK_STRENGTHS = (0.05, 0.1, 0.2, 0.4)
BENCH_KINDS = (
    "word-delete",
    "word-insert",
    "synonym",
    "paraphrase-approx",
    "copy-paste",
    "homoglyph",
    "temperature-noise",
)


def _read_key(path) -> SecretKey:
    return SecretKey(Path(path).read_text(encoding="utf-8").strip())


def _read_encoder(path) -> Encoder:
    return deserialize_encoder(Path(path).read_bytes())


def _read_corpus(path, limit=None, max_bytes: int = 512):
    plaintexts = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        raw = line.encode("utf-8")[:max_bytes]
        plaintexts.append(Plaintext(raw.decode("utf-8", errors="ignore")))
        if limit and len(plaintexts) == limit:
            break
    if not plaintexts:
        raise RuntimeError(f"empty corpus: {path}")
    return plaintexts


def _read_table(path) -> list[dict]:
    rows = [json.loads(l) for l in Path(path).read_text(encoding="utf-8").splitlines() if l]
    if not rows:
        raise RuntimeError(f"empty fingerprint table: {path}")
    return rows


def cmd_keygen(args) -> int:
    with open("/dev/urandom", "rb") if args.entropy is None else open(args.entropy, "rb") as ent:
        key = sample_key(ent, args.k)
    Path(args.out).write_text(key.hex_digits + "\n", encoding="utf-8")
    print(f"wrote {args.k}-hex-digit key to {args.out}")
    return 0


def cmd_register(args) -> int:
    store = RegistryStore(args.store)
    dataset = load_challenge_set(args.dataset_id, args.dataset_file)
    try:
        store.add_dataset(args.dataset_id, dataset)
    except Exception:
        pass  # dataset may already be in the log
    key, record = store.register_owner(
        owner_id=args.owner,
        encoder_config=EncoderConfig(num_layers=args.layers, dim=args.dim, architecture=args.arch),
        rs_params=RsParams(n_code=args.n_code, k_msg=args.k_msg),
        dataset_id=args.dataset_id,
    )
    Path(args.out_key).write_text(key.hex_digits + "\n", encoding="utf-8")
    print(f"registered owner {record.owner_id}; key digest {record.key_digest}")
    return 0


def cmd_build_encoder(args) -> int:
    config = EncoderConfig(num_layers=args.layers, dim=args.dim, architecture=args.arch)
    enc = build_encoder(_read_key(args.key_file), config)
    Path(args.out).write_bytes(serialize_encoder(enc))
    print(f"wrote encoder ({args.arch}, N={args.layers}, d={args.dim}) to {args.out}")
    return 0


def cmd_encode(args) -> int:
    enc = _read_encoder(args.encoder)
    plaintexts = _read_corpus(args.corpus)
    with open(args.out, "w", encoding="utf-8") as out:
        for pt in plaintexts:
            out.write(encode(enc, pt).hex + "\n")
    print(f"encoded {len(plaintexts)} plaintexts to {args.out}")
    return 0


def cmd_inject(args) -> int:
    enc = _read_encoder(args.encoder)
    params = RsParams(n_code=args.n_code, k_msg=args.k_msg)
    plaintexts = _read_corpus(args.corpus)
    skipped = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for i, pt in enumerate(plaintexts):
            raw = pt.text.encode("utf-8")
            if len(raw) > params.k_msg:
                print(f"warning: line {i} over {params.k_msg} bytes, truncating", file=sys.stderr)
                skipped += 1
            codeword = rs_encode(pad_message(raw, params.k_msg), params)
            row = {
                "id": i,
                "plaintext": raw[: params.k_msg].decode("utf-8", errors="ignore"),
                "ciphertext": encode(enc, pt).hex,
                "codeword": render_codeword(codeword),
            }
            out.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"injected {len(plaintexts)} pairs into {args.out} ({skipped} truncated)")
    return 0


def _channel_from_spec(spec: str, table_rows, noise: attacks.AttackSpec, scheme: str):
    if spec.startswith("remote:"):
        return suspect.oracle_remote(spec[len("remote:") :])
    if spec.startswith("base:"):
        return suspect.oracle_base(int(spec[len("base:") :] or "0"))
    if spec == "table":
        if table_rows is None:
            raise RuntimeError("--table file required for the table channel")
        key = "codeword" if scheme == "rs" else "plaintext"
        table = suspect.FingerprintTable(
            entries={r["ciphertext"]: r[key] for r in table_rows}
        )
        return suspect.oracle_fingerprinted(table, noise)
    raise RuntimeError(f"unknown channel spec {spec!r}")


def cmd_verify(args) -> int:
    enc = _read_encoder(args.encoder)
    params = RsParams(n_code=args.n_code, k_msg=args.k_msg)
    table_rows = _read_table(args.table) if args.table else None
    if table_rows is not None:
        plaintexts = [Plaintext(r["plaintext"]) for r in table_rows][: args.n_challenges]
    else:
        plaintexts = _read_corpus(args.corpus, limit=args.n_challenges)
    noise = attacks.AttackSpec(kind=args.attack_kind, strength=args.attack_strength, rng_seed=args.seed)
    channel = _channel_from_spec(args.channel, table_rows, noise, args.scheme)
    use_rs = args.scheme == "rs"
    verdicts = []
    lines = []
    transport_failures = 0
    for i, pt in enumerate(plaintexts):
        try:
            v = verifier.verify(channel, enc, params, pt, alpha=args.alpha, use_rs=use_rs)
        except suspect.TransportError as exc:
            print(f"warning: challenge {i} transport error: {exc}", file=sys.stderr)
            transport_failures += 1
            continue
        verdicts.append(v)
        lines.append(verifier.verdict_line(i, v))
    if not verdicts:
        raise RuntimeError("all challenges failed with transport errors")
    rate = verifier.fsr(verdicts, "stolen")
    avg_bleu = sum(v.bleu.value for v in verdicts) / len(verdicts)
    report = "\n".join(lines + [f"# fsr_stolen={rate:.4f} bleu_avg={avg_bleu:.4f} "
                                f"transport_failures={transport_failures}"])
    Path(args.out).write_text(report + "\n", encoding="utf-8")
    print(f"FSR(stolen)={rate:.4f} over {len(verdicts)} challenges -> {args.out}")
    return 0


def cmd_attack_bench(args) -> int:
    enc = _read_encoder(args.encoder)
    params = RsParams(n_code=args.n_code, k_msg=args.k_msg)
    table_rows = _read_table(args.table)[: args.n_challenges]
    plaintexts = [Plaintext(r["plaintext"]) for r in table_rows]
    rs_table = suspect.FingerprintTable({r["ciphertext"]: r["codeword"] for r in table_rows})
    plain_table = suspect.FingerprintTable({r["ciphertext"]: r["plaintext"] for r in table_rows})
    baseline = suspect.baseline_exact_match(
        trigger=table_rows[0]["ciphertext"], answer=table_rows[0]["plaintext"]
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scheme", "attack", "strength", "fsr"])
    summary = []
    for kind in BENCH_KINDS:
        for strength in ATTACK_STRENGTHS:
            row = {}
            for scheme, table in (("keyed+rs", rs_table), ("keyed-rs", plain_table)):
                verdicts = []
                for i, pt in enumerate(plaintexts):
                    noise = attacks.AttackSpec(kind=kind, strength=strength, rng_seed=args.seed + i)
                    channel = suspect.oracle_fingerprinted(table, noise)
                    verdicts.append(
                        verifier.verify(
                            channel, enc, params, pt, alpha=args.alpha, use_rs=scheme == "keyed+rs"
                        )
                    )
                rate = verifier.fsr(verdicts, "stolen")
                writer.writerow([scheme, kind, strength, f"{rate:.4f}"])
                row[scheme] = rate
            hits = sum(
                baseline.verify(attacks.AttackSpec(kind=kind, strength=strength, rng_seed=args.seed + i))
                for i in range(len(plaintexts))
            )
            base_rate = hits / len(plaintexts)
            writer.writerow(["exact-match", kind, strength, f"{base_rate:.4f}"])
            summary.append(
                f"{kind:18s} s={strength:<5} +rs={row['keyed+rs']:.2f} "
                f"-rs={row['keyed-rs']:.2f} baseline={base_rate:.2f}"
            )
    Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    print("\n".join(summary))
    print(f"wrote {args.out}")
    return 0


def cmd_avalanche(args) -> int:
    if args.trials < 100:
        raise SystemExit(2)
    enc = _read_encoder(args.encoder)
    inp = avalanche_input(enc, args.trials, seed=args.seed)
    key_rep = avalanche_key(enc.config, args.trials, seed=args.seed)
    inp_pass = 0.40 <= inp.mean <= 0.60
    key_pass = key_rep.mean > 0.50
    report = (
        f"input-avalanche mean={inp.mean:.4f} std={inp.std:.4f} trials={inp.trials} "
        f"band=[0.40,0.60] {'PASS' if inp_pass else 'FAIL'}\n"
        f"key-avalanche   mean={key_rep.mean:.4f} std={key_rep.std:.4f} trials={key_rep.trials} "
        f"threshold>0.50 {'PASS' if key_pass else 'FAIL'}\n"
    )
    Path(args.out).write_text(report, encoding="utf-8")
    print(report, end="")
    return 0 if (inp_pass and key_pass) else 1


def cmd_unlearn_bench(args) -> int:
    enc = _read_encoder(args.encoder)
    params = RsParams(n_code=args.n_code, k_msg=args.k_msg)
    table_rows = _read_table(args.table)[: args.n_challenges]
    if len(table_rows) < 10:
        raise RuntimeError("unlearn bench needs a table with >= 10 entries")
    plaintexts = [Plaintext(r["plaintext"]) for r in table_rows]
    table = suspect.FingerprintTable({r["ciphertext"]: r["codeword"] for r in table_rows})
    channel = suspect.oracle_fingerprinted(table)
    baseline = suspect.baseline_exact_match(
        trigger=table_rows[0]["ciphertext"], answer=table_rows[0]["plaintext"]
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["unlearned", "keyed_fsr_remaining", "baseline_fsr"])
    for unlearned in range(args.rounds + 1):
        remaining = list(range(unlearned, len(table_rows)))
        verdicts = [
            verifier.verify(channel, enc, params, plaintexts[i], alpha=args.alpha)
            for i in remaining
        ]
        rate = verifier.fsr(verdicts, "stolen")
        base_rate = 1.0 if unlearned == 0 and baseline.verify() else 0.0
        writer.writerow([unlearned, f"{rate:.4f}", f"{base_rate:.4f}"])
        if unlearned < args.rounds:
            channel = suspect.unlearn(channel, table_rows[unlearned]["ciphertext"])
            baseline = baseline.unlearn_trigger()
    Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llmfp", description="LLM fingerprinting toolkit")
    parser.add_argument("--seed", type=int, default=0, help="global determinism seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="sample a secret key")
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--entropy", help="entropy file (default /dev/urandom)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("register", help="register an owner with the authority store")
    p.add_argument("--store", required=True)
    p.add_argument("--owner", required=True)
    p.add_argument("--dataset-file", required=True)
    p.add_argument("--dataset-id", default="default")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--arch", choices=ARCHITECTURES, default="linear-residual")
    p.add_argument("--n-code", type=int, default=63)
    p.add_argument("--k-msg", type=int, default=39)
    p.add_argument("--out-key", required=True)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("build-encoder", help="derive the frozen encoder from a key")
    p.add_argument("--key-file", required=True)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--arch", choices=ARCHITECTURES, default="linear-residual")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_encoder)

    p = sub.add_parser("encode", help="encode a corpus to ciphertext hex lines")
    p.add_argument("--encoder", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("inject", help="build the fingerprint table (ciphertext -> codeword)")
    p.add_argument("--encoder", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--n-code", type=int, default=63)
    p.add_argument("--k-msg", type=int, default=39)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("verify", help="run ownership verification against a channel")
    p.add_argument("--encoder", required=True)
    p.add_argument("--channel", default="table", help="table | base:<seed> | remote:<url>")
    p.add_argument("--table")
    p.add_argument("--corpus")
    p.add_argument("--scheme", choices=("rs", "raw"), default="rs")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n-code", type=int, default=63)
    p.add_argument("--k-msg", type=int, default=39)
    p.add_argument("--n-challenges", type=int, default=100)
    p.add_argument("--attack-kind", choices=attacks.ATTACK_KINDS, default="none")
    p.add_argument("--attack-strength", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack-bench", help="FSR sweep over attack kinds and strengths")
    p.add_argument("--encoder", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n-code", type=int, default=63)
    p.add_argument("--k-msg", type=int, default=39)
    p.add_argument("--n-challenges", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack_bench)

    p = sub.add_parser("avalanche", help="diffusion/confusion report for an encoder")
    p.add_argument("--encoder", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_avalanche)

    p = sub.add_parser("unlearn-bench", help="FSR after unlearning 0..rounds pairs")
    p.add_argument("--encoder", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n-code", type=int, default=63)
    p.add_argument("--k-msg", type=int, default=39)
    p.add_argument("--n-challenges", type=int, default=100)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_unlearn_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
