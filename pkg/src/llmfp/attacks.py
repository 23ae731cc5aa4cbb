"""Seeded response-manipulation attacks applied between suspect model and
verifier: word deletion/insertion, synonym substitution, rule-based
paraphrase, copy-paste embedding, homoglyph mapping, and decoding-noise
("temperature") token replacement.

Every transform is a pure function of (text, spec): the RNG is seeded from
the AttackSpec seed plus a hash of the input, so benches are reproducible.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

ATTACK_KINDS = (
    "none",
    "word-delete",
    "word-insert",
    "synonym",
    "paraphrase-approx",
    "copy-paste",
    "homoglyph",
    "temperature-noise",
)

_FRAMED_RE = re.compile(r"^S[0-9a-f]{2}$")


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    strength: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.strength < 0:
            raise ValueError("strength must be non-negative")


def _read_data(name: str) -> str:
    return resources.files("llmfp.data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def synonym_lexicon() -> dict:
    table = {}
    for line in _read_data("synonyms.tsv").splitlines():
        if not line.strip():
            continue
        word, syn = line.split("\t")
        table[word] = syn
    return table


@lru_cache(maxsize=1)
def confusables_table() -> dict:
    table = {}
    for line in _read_data("confusables.tsv").splitlines():
        if not line.strip():
            continue
        char, repl = line.split("\t")
        table[char] = repl
    return table


@lru_cache(maxsize=1)
def wordlist() -> tuple:
    return tuple(w for w in _read_data("wordlist.txt").splitlines() if w)


@lru_cache(maxsize=1)
def prose_lines() -> tuple:
    return tuple(l for l in _read_data("prose.txt").splitlines() if l.strip())


def _rng_for(text: str, spec: AttackSpec) -> random.Random:
    material = f"{spec.kind}|{spec.strength!r}|{spec.rng_seed}|{text}".encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _affected_count(strength: float, total: int) -> int:
    if total == 0:
        return 0
    if strength >= 1.0:
        return min(int(strength), total)
    return min(math.ceil(strength * total), total)


def _word_delete(tokens, strength, rng):
    k = _affected_count(strength, len(tokens))
    drop = set(rng.sample(range(len(tokens)), k))
    return [t for i, t in enumerate(tokens) if i not in drop]


def _word_insert(tokens, strength, rng):
    k = _affected_count(strength, len(tokens))
    out = list(tokens)
    for _ in range(k):
        out.insert(rng.randrange(len(out) + 1), rng.choice(wordlist()))
    return out


def _synonym(tokens, strength, rng):
    lex = synonym_lexicon()
    eligible = [i for i, t in enumerate(tokens) if t.lower() in lex]
    k = _affected_count(strength, len(eligible)) if eligible else 0
    out = list(tokens)
    for i in rng.sample(eligible, k):
        out[i] = lex[out[i].lower()]
    return out


def _paraphrase(text, strength, rng):
    swapped = " ".join(_synonym(text.split(), strength, rng))
    clauses = [c.strip() for c in re.split(r",\s*", swapped) if c.strip()]
    if len(clauses) >= 2:
        i = rng.randrange(len(clauses) - 1)
        clauses[i], clauses[i + 1] = clauses[i + 1], clauses[i]
    return ", ".join(clauses)


def _copy_paste(text, rng):
    lines = prose_lines()
    before = rng.choice(lines)
    after = rng.choice(lines)
    return f"{before} {text} {after}"


def _homoglyph(text, strength, rng):
    table = confusables_table()
    positions = [i for i, ch in enumerate(text) if ch in table]
    k = _affected_count(strength, len(positions)) if positions else 0
    chars = list(text)
    for i in rng.sample(positions, k):
        chars[i] = table[chars[i]]
    return "".join(chars)


def _temperature_noise(tokens, strength, rng):
    """Independent per-token replacement, modeling positive-temperature
    decoding drift: framed symbols become other framed symbols, plain
    words become other dictionary words."""
    out = []
    for tok in tokens:
        if rng.random() >= strength:
            out.append(tok)
        elif _FRAMED_RE.match(tok):
            value = int(tok[1:], 16)
            repl = rng.randrange(255)
            if repl >= value:
                repl += 1  # always a different symbol
            out.append(f"S{repl:02x}")
        else:
            out.append(rng.choice(wordlist()))
    return out


def apply_attack(text: str, spec: AttackSpec) -> str:
    if spec.kind == "none":
        return text
    rng = _rng_for(text, spec)
    if spec.kind == "word-delete":
        return " ".join(_word_delete(text.split(), spec.strength, rng))
    if spec.kind == "word-insert":
        return " ".join(_word_insert(text.split(), spec.strength, rng))
    if spec.kind == "synonym":
        return " ".join(_synonym(text.split(), spec.strength, rng))
    if spec.kind == "paraphrase-approx":
        return _paraphrase(text, spec.strength, rng)
    if spec.kind == "copy-paste":
        return _copy_paste(text, rng)
    if spec.kind == "homoglyph":
        return _homoglyph(text, spec.strength, rng)
    if spec.kind == "temperature-noise":
        return " ".join(_temperature_noise(text.split(), spec.strength, rng))
    raise ValueError(f"unknown attack kind {spec.kind!r}")
