"""Key material: secret keys, bit-exact HMAC-SHA256, layer seeds, and a
portable deterministic random stream.

Everything here is pure and deterministic so that an encoder rebuilt from
the same key on a different machine is bit-identical. The random stream is
HMAC-SHA256 in counter mode rather than any stdlib RNG: stdlib generators
are not guaranteed stable across languages or versions, and the frozen
encoder must be portable.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

_HEX_DIGITS = set("0123456789abcdef")

_SHA256_BLOCK = 64
_IPAD = bytes(0x36 for _ in range(_SHA256_BLOCK))
_OPAD = bytes(0x5C for _ in range(_SHA256_BLOCK))


class EntropyError(RuntimeError):
    """The supplied entropy source ran out before the key was filled."""


@dataclass(frozen=True)
class SecretKey:
    """Private key K: exactly ``k`` lowercase hex digits."""

    hex_digits: str

    def __post_init__(self):
        if not self.hex_digits:
            raise ValueError("key must be non-empty")
        bad = set(self.hex_digits) - _HEX_DIGITS
        if bad:
            raise ValueError(f"key contains non-hex characters: {sorted(bad)!r}")

    @property
    def k(self) -> int:
        return len(self.hex_digits)

    def key_bytes(self) -> bytes:
        # ASCII bytes of the hex string, not decoded nibbles: the key is a
        # hex *token*, and ASCII keying is unambiguous across languages.
        return self.hex_digits.encode("ascii")


@dataclass(frozen=True)
class LayerSeed:
    """Seed for one encoder layer, derived from (key, layer_index)."""

    value: int
    layer_index: int

    def __post_init__(self):
        if self.layer_index < 1:
            raise ValueError("layer_index must be >= 1")
        if self.value < 0:
            raise ValueError("seed value must be non-negative")


def sample_key(entropy, k: int = 32) -> SecretKey:
    """Draw a uniform k-hex-digit key from a byte stream.

    `entropy` is anything with a ``read(n) -> bytes`` method (e.g. an open
    /dev/urandom, io.BytesIO for tests). Each byte yields two uniform hex
    digits since 16 divides 256.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    need = (k + 1) // 2
    raw = entropy.read(need)
    if raw is None or len(raw) < need:
        raise EntropyError(f"entropy exhausted: needed {need} bytes")
    digits = raw.hex()[:k]
    return SecretKey(digits)


def hmac_sha256(key_bytes: bytes, message: bytes) -> bytes:
    """HMAC-SHA256 per RFC 2104, built directly on hashlib.sha256.

    Implemented from the pad construction (not hmac.new) so the test suite
    can cross-check it against the stdlib as an independent reference.
    """
    if len(key_bytes) > _SHA256_BLOCK:
        key_bytes = hashlib.sha256(key_bytes).digest()
    key_bytes = key_bytes.ljust(_SHA256_BLOCK, b"\x00")
    inner_key = bytes(b ^ p for b, p in zip(key_bytes, _IPAD))
    outer_key = bytes(b ^ p for b, p in zip(key_bytes, _OPAD))
    inner = hashlib.sha256(inner_key + message).digest()
    return hashlib.sha256(outer_key + inner).digest()


def derive_layer_seed(key: SecretKey, layer_index: int) -> LayerSeed:
    """seed_i = int(HMAC-SHA256(K, str(i))) mod 2^k, digest read big-endian."""
    if layer_index < 1:
        raise ValueError("layer_index must be >= 1")
    digest = hmac_sha256(key.key_bytes(), str(layer_index).encode("ascii"))
    value = int.from_bytes(digest, "big") % (1 << key.k)
    return LayerSeed(value=value, layer_index=layer_index)


def drbg_iter(seed: LayerSeed):
    """Endless deterministic stream of reals in [0, 1) for one seed.

    Value j is the top 53 bits of HMAC-SHA256(seed as 8-byte BE,
    j as 8-byte BE), divided by 2^53. 53 bits so every draw is exactly
    representable as a double.
    """
    # Seeds wider than 64 bits (k > 64) would not fit the fixed 8-byte frame.
    seed_bytes = struct.pack(">Q", seed.value & 0xFFFFFFFFFFFFFFFF)
    j = 0
    while True:
        digest = hmac_sha256(seed_bytes, struct.pack(">Q", j))
        top53 = int.from_bytes(digest[:8], "big") >> 11
        yield top53 / float(1 << 53)
        j += 1


def drbg_stream(seed: LayerSeed, count: int) -> list[float]:
    """First `count` values of drbg_iter(seed)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    it = drbg_iter(seed)
    return [next(it) for _ in range(count)]
