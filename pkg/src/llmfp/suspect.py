"""Suspect-model channels: the black-box API the judge queries.

Reference implementations used by the benches: table-backed fingerprinted
oracles (simulating a perfectly trained model), an unfingerprinted base
oracle emitting seeded word salad, an exact-match single-trigger baseline,
an unlearning operator, and an HTTP client for externally served models
(e.g. the toy trainer).

Table lookups are exact on the ciphertext hex: whether a real model
generalizes to near-miss ciphertexts is an empirical property measured by
the trained suspect, not fabricated here.
"""

from __future__ import annotations

import hashlib
import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .attacks import AttackSpec, apply_attack, wordlist
from .encoder import encode
from .rs_codec import (
    DecodeFailure,
    RsParams,
    pad_message,
    parse_and_align,
    render_codeword,
    rs_decode,
    rs_encode,
)


class TransportError(RuntimeError):
    """Channel unreachable; distinct from any verdict."""


@dataclass(frozen=True)
class FingerprintTable:
    """Trained association ciphertext hex -> target response text."""

    entries: dict

    def __post_init__(self):
        if not self.entries:
            raise ValueError("fingerprint table must be non-empty")

    def without(self, ciphertext_hex: str) -> "FingerprintTable":
        remaining = {k: v for k, v in self.entries.items() if k != ciphertext_hex}
        return FingerprintTable(entries=remaining)


def build_codeword_table(encoder, params: RsParams, plaintexts) -> FingerprintTable:
    """Ciphertext -> rendered RS codeword (full scheme's training targets)."""
    entries = {}
    for pt in plaintexts:
        cw = rs_encode(pad_message(pt.text.encode("utf-8"), params.k_msg), params)
        entries[encode(encoder, pt).hex] = render_codeword(cw)
    return FingerprintTable(entries=entries)


def build_plain_table(encoder, params: RsParams, plaintexts) -> FingerprintTable:
    """Ciphertext -> bare plaintext (ablation without the RS component)."""
    entries = {}
    for pt in plaintexts:
        raw = pt.text.encode("utf-8")[: params.k_msg]
        entries[encode(encoder, pt).hex] = raw.decode("utf-8", errors="ignore")
    return FingerprintTable(entries=entries)


def validate_table(table: FingerprintTable, params: RsParams, plaintexts) -> None:
    """Check every codeword entry decodes cleanly to its plaintext frame."""
    for plaintext, target in zip(plaintexts, table.entries.values()):
        received = parse_and_align(target, params)
        try:
            message = rs_decode(received, params)
        except DecodeFailure as exc:
            raise ValueError(f"table entry is not a decodable codeword: {plaintext.text!r}") from exc
        expected = pad_message(plaintext.text.encode("utf-8"), params.k_msg)
        if message != expected:
            raise ValueError(f"table entry does not decode to its plaintext: {plaintext.text!r}")


def _salad(prompt: str, seed: int, n_words: int = 12) -> str:
    words = wordlist()
    digest = hashlib.sha256(f"{seed}|{prompt}".encode("utf-8")).digest()
    picks = []
    state = digest
    while len(picks) < n_words:
        for i in range(0, len(state), 4):
            if len(picks) == n_words:
                break
            idx = int.from_bytes(state[i : i + 4], "big") % len(words)
            picks.append(words[idx])
        state = hashlib.sha256(state).digest()
    return " ".join(picks)


@dataclass(frozen=True)
class BaseOracle:
    seed: int = 0

    def respond(self, prompt: str) -> str:
        return _salad(prompt, self.seed)


@dataclass(frozen=True)
class TableOracle:
    table: FingerprintTable
    noise: AttackSpec = AttackSpec(kind="none")
    base_seed: int = 0

    def respond(self, prompt: str) -> str:
        target = self.table.entries.get(prompt)
        if target is None:
            return _salad(prompt, self.base_seed)
        return apply_attack(target, self.noise)


def oracle_fingerprinted(table: FingerprintTable, noise: AttackSpec | None = None) -> TableOracle:
    return TableOracle(table=table, noise=noise or AttackSpec(kind="none"))


def oracle_base(seed: int = 0) -> BaseOracle:
    return BaseOracle(seed=seed)


def unlearn(channel: TableOracle, ciphertext_hex: str) -> TableOracle:
    """The colluding thief erased one query-response pair; absent entries
    are a no-op."""
    if ciphertext_hex not in channel.table.entries:
        return channel
    return TableOracle(
        table=channel.table.without(ciphertext_hex),
        noise=channel.noise,
        base_seed=channel.base_seed,
    )


@dataclass(frozen=True)
class ExactMatchBaseline:
    """IF-style single-trigger fingerprint with exact-string verification."""

    trigger: str
    answer: str
    unlearned: bool = False
    base_seed: int = 0

    def respond(self, prompt: str) -> str:
        if not self.unlearned and prompt == self.trigger:
            return self.answer
        return _salad(prompt, self.base_seed)

    def verify(self, attack: AttackSpec | None = None) -> bool:
        response = self.respond(self.trigger)
        if attack is not None:
            response = apply_attack(response, attack)
        return response == self.answer

    def unlearn_trigger(self) -> "ExactMatchBaseline":
        return ExactMatchBaseline(
            trigger=self.trigger, answer=self.answer, unlearned=True, base_seed=self.base_seed
        )


def baseline_exact_match(trigger: str, answer: str) -> ExactMatchBaseline:
    return ExactMatchBaseline(trigger=trigger, answer=answer)


@dataclass(frozen=True)
class RemoteChannel:
    endpoint: str
    timeout: float = 10.0
    extra: dict = field(default_factory=dict)

    def respond(self, prompt: str) -> str:
        body = dict(self.extra)
        body["prompt"] = prompt
        data = json.dumps(body).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint.rstrip("/") + "/respond",
            data=data,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"suspect endpoint unreachable: {exc}") from exc
        if "response" not in payload:
            raise TransportError(f"malformed suspect reply: {payload!r}")
        return payload["response"]


def oracle_remote(endpoint: str, timeout: float = 10.0, **extra) -> RemoteChannel:
    return RemoteChannel(endpoint=endpoint, timeout=timeout, extra=extra)
