"""Training loop: next-symbol cross-entropy on the codeword targets.

Stops early once every training pair reconstructs exactly under greedy
decoding; reports per-epoch loss, its moving average, and the periodic
exact-reconstruction rate in a metrics log.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import torch
from torch import nn

from .data import CHAR_PAD, SYM_BOS, SYM_EOS, prompt_char_ids, target_symbol_ids
from .model import CondSeqModel, ModelConfig, generate_batch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    lr: float = 2e-3
    batch_size: int = 100
    seed: int = 0
    check_every: int = 25
    model: ModelConfig = field(default_factory=ModelConfig)


class DivergenceError(RuntimeError):
    pass


def _tensorize(pairs):
    max_prompt = max(len(p.prompt) for p in pairs)
    prompts = torch.tensor(
        [prompt_char_ids(p.prompt) + [CHAR_PAD] * (max_prompt - len(p.prompt)) for p in pairs]
    )
    sym_lists = [target_symbol_ids(p.target) for p in pairs]
    max_syms = max(len(s) for s in sym_lists)
    # EOS also pads: the decoder just has to learn to stop
    sym_in = torch.tensor(
        [[SYM_BOS] + s + [SYM_EOS] * (max_syms - len(s)) for s in sym_lists]
    )
    sym_out = torch.tensor(
        [s + [SYM_EOS] * (max_syms - len(s) + 1) for s in sym_lists]
    )
    return prompts, sym_in, sym_out


def exact_reconstruction_rate(model: CondSeqModel, pairs) -> float:
    """Fraction of pairs whose greedy decode equals the target exactly."""
    prompts, _, _ = _tensorize(pairs)
    decoded = generate_batch(model, prompts)
    return sum(
        decoded[i] == target_symbol_ids(p.target) for i, p in enumerate(pairs)
    ) / len(pairs)


def train(pairs, config: TrainConfig | None = None, log=None):
    """Returns (model, metrics list). Raises DivergenceError on NaN loss."""
    config = config or TrainConfig()
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one training pair")
    torch.manual_seed(config.seed)
    model = CondSeqModel(config.model)
    opt = torch.optim.AdamW(model.parameters(), lr=config.lr)
    prompts, sym_in, sym_out = _tensorize(pairs)
    shuffler = torch.Generator().manual_seed(config.seed)

    metrics = []
    ma = None
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(pairs), generator=shuffler)
        total, count = 0.0, 0
        for lo in range(0, len(pairs), config.batch_size):
            idx = order[lo : lo + config.batch_size]
            opt.zero_grad()
            logits = model(prompts[idx], sym_in[idx])
            loss = nn.functional.cross_entropy(
                logits.reshape(-1, logits.shape[-1]), sym_out[idx].reshape(-1)
            )
            if not math.isfinite(loss.item()):
                raise DivergenceError(
                    f"loss {loss.item()} at epoch {epoch}; lower the learning rate"
                )
            loss.backward()
            opt.step()
            total += loss.item()
            count += 1
        mean = total / count
        ma = mean if ma is None else 0.9 * ma + 0.1 * mean
        entry = {"epoch": epoch, "loss": mean, "loss_ma": ma,
                 "elapsed_s": time.perf_counter() - start}
        if epoch % config.check_every == 0 or epoch == config.epochs:
            entry["exact"] = exact_reconstruction_rate(model, pairs)
        metrics.append(entry)
        if log is not None:
            log.write(json.dumps(entry) + "\n")
            log.flush()
        if entry.get("exact") == 1.0:
            break
    return model, metrics
