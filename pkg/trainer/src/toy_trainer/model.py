"""A small conditional sequence model (~0.6M parameters).

The prompt is digested character by character into a context vector
(position-aware embedding average); a GRU decoder conditioned on that
context at every step emits the codeword one symbol at a time. Small
enough to memorize a few hundred pairs in minutes on a CPU, and a real
enough sampler that temperature and near-miss-prompt behavior are
empirical rather than simulated.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .data import (
    CHAR_PAD,
    PROMPT_VOCAB,
    SYM_BOS,
    SYM_EOS,
    SYMBOL_VOCAB,
    prompt_char_ids,
    render_symbols,
)


@dataclass(frozen=True)
class ModelConfig:
    d_char: int = 128
    d_hidden: int = 256
    d_symbol: int = 64
    max_prompt: int = 512

    def __post_init__(self):
        if min(self.d_char, self.d_hidden, self.d_symbol, self.max_prompt) < 1:
            raise ValueError("all model dimensions must be positive")


class CondSeqModel(nn.Module):
    def __init__(self, config: ModelConfig | None = None):
        super().__init__()
        self.config = config or ModelConfig()
        cfg = self.config
        self.char_emb = nn.Embedding(PROMPT_VOCAB, cfg.d_char)
        self.pos_emb = nn.Embedding(cfg.max_prompt, cfg.d_char)
        self.to_context = nn.Sequential(nn.Linear(cfg.d_char, cfg.d_hidden), nn.Tanh())
        self.sym_emb = nn.Embedding(SYMBOL_VOCAB, cfg.d_symbol)
        self.gru = nn.GRU(cfg.d_symbol + cfg.d_hidden, cfg.d_hidden, batch_first=True)
        self.head = nn.Linear(cfg.d_hidden, SYMBOL_VOCAB - 1)  # no BOS output

    def context(self, prompts: torch.Tensor) -> torch.Tensor:
        """(B, L) padded char ids -> (B, d_hidden) context vectors."""
        if prompts.shape[1] > self.config.max_prompt:
            raise ValueError(f"prompt longer than {self.config.max_prompt} characters")
        pos = torch.arange(prompts.shape[1], device=prompts.device)
        emb = self.char_emb(prompts) + self.pos_emb(pos)
        mask = (prompts != CHAR_PAD).float().unsqueeze(-1)
        return self.to_context((emb * mask).sum(1) / mask.sum(1).clamp(min=1.0))

    def forward(self, prompts: torch.Tensor, sym_in: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits for every decoding step."""
        ctx = self.context(prompts)
        expanded = ctx.unsqueeze(1).expand(-1, sym_in.shape[1], -1)
        x = torch.cat([self.sym_emb(sym_in), expanded], dim=-1)
        out, _ = self.gru(x, ctx.unsqueeze(0))
        return self.head(out)

    def step(self, sym, hidden, ctx):
        x = torch.cat([self.sym_emb(sym), ctx.unsqueeze(1)], dim=-1)
        out, hidden = self.gru(x, hidden)
        return self.head(out[:, -1]), hidden


@torch.no_grad()
def generate(
    model: CondSeqModel,
    prompt: str,
    temperature: float = 0.0,
    max_symbols: int = 128,
    rng: torch.Generator | None = None,
) -> str:
    """Decode one response; greedy at temperature 0, sampled otherwise."""
    model.eval()
    prompts = torch.tensor([prompt_char_ids(prompt)])
    ctx = model.context(prompts)
    hidden = ctx.unsqueeze(0)
    sym = torch.tensor([[SYM_BOS]])
    out = []
    for _ in range(max_symbols):
        logits, hidden = model.step(sym, hidden, ctx)
        if temperature <= 0.0:
            nxt = int(logits[0].argmax())
        else:
            probs = torch.softmax(logits[0] / temperature, dim=-1)
            nxt = int(torch.multinomial(probs, 1, generator=rng))
        if nxt == SYM_EOS:
            break
        out.append(nxt)
        sym = torch.tensor([[nxt]])
    return render_symbols(out)


@torch.no_grad()
def generate_batch(model: CondSeqModel, prompts_tensor: torch.Tensor,
                   max_symbols: int = 128) -> list[list[int]]:
    """Greedy decode a whole padded prompt batch at once."""
    model.eval()
    batch = prompts_tensor.shape[0]
    ctx = model.context(prompts_tensor)
    hidden = ctx.unsqueeze(0)
    sym = torch.full((batch, 1), SYM_BOS)
    done = torch.zeros(batch, dtype=torch.bool)
    outs = [[] for _ in range(batch)]
    for _ in range(max_symbols):
        logits, hidden = model.step(sym, hidden, ctx)
        nxt = logits.argmax(dim=-1)
        for i in range(batch):
            if not done[i]:
                if int(nxt[i]) == SYM_EOS:
                    done[i] = True
                else:
                    outs[i].append(int(nxt[i]))
        if bool(done.all()):
            break
        sym = nxt.unsqueeze(1)
    return outs


def save_checkpoint(model: CondSeqModel, path) -> None:
    torch.save({"config": asdict(model.config), "state": model.state_dict()}, path)


def load_checkpoint(path) -> CondSeqModel:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = CondSeqModel(ModelConfig(**payload["config"]))
    model.load_state_dict(payload["state"])
    model.eval()
    return model
