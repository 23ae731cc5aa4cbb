"""Training pairs and tokenization.

Pairs come verbatim from the fingerprint table file (JSONL rows with
"ciphertext" and "codeword" fields). Prompts are tokenized per hex
character; targets per framed "Sxx" symbol, so one decoding step emits
one codeword symbol and temperature sampling perturbs whole symbols the
way a real decoding loop would.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

HEX_CHARS = "0123456789abcdef"
CHAR_PAD = 16  # prompt padding id; hex chars map to 0..15
PROMPT_VOCAB = 17

SYM_EOS = 256
SYM_BOS = 257
SYMBOL_VOCAB = 258

_SYMBOL_RE = re.compile(r"^S[0-9a-f]{2}$")


@dataclass(frozen=True)
class TrainPair:
    prompt: str
    target: str

    def __post_init__(self):
        if not self.prompt or set(self.prompt) - set(HEX_CHARS):
            raise ValueError("prompt must be non-empty lowercase hex")
        if not all(_SYMBOL_RE.match(t) for t in self.target.split()) or not self.target:
            raise ValueError("target must be space-separated Sxx symbols")


def load_pairs(path) -> list[TrainPair]:
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        pairs.append(TrainPair(prompt=row["ciphertext"], target=row["codeword"]))
    if not pairs:
        raise ValueError(f"empty table file: {path}")
    return pairs


def prompt_char_ids(prompt: str) -> list[int]:
    try:
        return [HEX_CHARS.index(c) for c in prompt]
    except ValueError:
        raise ValueError("prompt contains non-hex characters") from None


def target_symbol_ids(target: str) -> list[int]:
    return [int(t[1:], 16) for t in target.split()]


def render_symbols(ids) -> str:
    return " ".join(f"S{i:02x}" for i in ids)
