"""Frozen keyed encoder E: residual layers derived from the secret key.

Each layer weight block is filled from the deterministic HMAC counter
stream seeded by derive_layer_seed(key, i), so the same (key, config)
always rebuilds the exact same encoder, on any machine. The encoder is
immutable after construction; nothing here retrains or perturbs it.

A ciphertext is the per-block residual product y = prod_i (I + W_i) x,
clamped to [-R, R] and quantized to 16 bits per coordinate (four hex
digits). 16-bit rendering is what makes single-byte input changes visible
as roughly half the rendered digits flipping; coarser rendering absorbs
the off-diagonal diffusion below one quantization step.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .keymat import SecretKey, derive_layer_seed, drbg_iter

ARCHITECTURES = ("linear-residual", "conv-residual", "attention-residual")

CLAMP_RANGE = 2.0
QUANT_BITS = 16
QUANT_LEVELS = (1 << QUANT_BITS) - 1
HEX_PER_COORD = QUANT_BITS // 4

_MAGIC = b"LFPE"
_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    num_layers: int = 2
    dim: int = 32
    architecture: str = "linear-residual"
    dense_epsilon: float = 1e-6
    weight_bound: float = 0.9

    def __post_init__(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if not (0 < self.weight_bound < 1):
            raise ValueError("weight_bound must be in (0, 1)")
        if self.dense_epsilon <= 0:
            raise ValueError("dense_epsilon must be positive")

    def matrices_per_layer(self) -> int:
        # linear: W; conv: center/left/right taps; attention: Wq, Wk, Wv, Wo
        return {"linear-residual": 1, "conv-residual": 3, "attention-residual": 4}[
            self.architecture
        ]


@dataclass(frozen=True)
class Plaintext:
    text: str
    max_bytes: int = 512

    def __post_init__(self):
        if not self.text:
            raise ValueError("plaintext must be non-empty")
        if len(self.text.encode("utf-8")) > self.max_bytes:
            raise ValueError(f"plaintext exceeds {self.max_bytes} bytes")


@dataclass(frozen=True)
class Ciphertext:
    hex: str
    block_count: int

    def __post_init__(self):
        d2 = len(self.hex) // (self.block_count * HEX_PER_COORD) if self.block_count else 0
        if self.block_count < 1 or len(self.hex) != self.block_count * d2 * HEX_PER_COORD:
            raise ValueError("ciphertext length inconsistent with block count")


@dataclass(frozen=True)
class Encoder:
    config: EncoderConfig
    # layers[i] is a tuple of d x d weight matrices (read-only views)
    layers: tuple

    def __post_init__(self):
        for blocks in self.layers:
            for w in blocks:
                w.setflags(write=False)


@dataclass(frozen=True)
class AvalancheReport:
    mean: float
    std: float
    trials: int


def build_encoder(key: SecretKey, config: EncoderConfig = EncoderConfig()) -> Encoder:
    """Derive all layer weights from the key; resample near-zero entries.

    Entries are affinely mapped into [-weight_bound/d, +weight_bound/d];
    anything with magnitude below dense_epsilon is replaced by the next
    stream value so every matrix is completely dense.
    """
    d = config.dim
    bound = config.weight_bound / d
    layers = []
    for i in range(1, config.num_layers + 1):
        tap = drbg_iter(derive_layer_seed(key, i))
        blocks = []
        for _ in range(config.matrices_per_layer()):
            w = np.empty((d, d), dtype=np.float64)
            for r in range(d):
                for c in range(d):
                    entry = (2.0 * next(tap) - 1.0) * bound
                    while abs(entry) < config.dense_epsilon:
                        entry = (2.0 * next(tap) - 1.0) * bound
                    w[r, c] = entry
            blocks.append(w)
        layers.append(tuple(blocks))
    return Encoder(config=config, layers=tuple(layers))


def bytes_to_blocks(raw: bytes, d: int) -> list[np.ndarray]:
    if not raw:
        raise ValueError("empty input")
    vec = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 256.0
    pad = (-len(vec)) % d
    if pad:
        vec = np.concatenate([vec, np.zeros(pad)])
    return [vec[i : i + d] for i in range(0, len(vec), d)]


def blocks_to_bytes(blocks, length: int | None = None) -> bytes:
    flat = np.concatenate(blocks)
    raw = bytes(int(round(v * 256.0)) % 256 for v in flat)
    if length is not None:
        return raw[:length]
    return raw.rstrip(b"\x00")


def text_to_blocks(plaintext: Plaintext, d: int) -> list[np.ndarray]:
    return bytes_to_blocks(plaintext.text.encode("utf-8"), d)


def blocks_to_text(blocks, length: int | None = None) -> str:
    return blocks_to_bytes(blocks, length).decode("utf-8")


def _apply_layer(blocks, x: np.ndarray, architecture: str) -> np.ndarray:
    if architecture == "linear-residual":
        (w,) = blocks
        return x + w @ x
    if architecture == "conv-residual":
        center, left, right = blocks
        return x + center @ x + left @ np.roll(x, 1) + right @ np.roll(x, -1)
    # attention-residual: single token, so the softmax over one position is
    # identically 1 and the update reduces to W_o (W_v x); W_q and W_k are
    # still key-derived to keep the usual 4d^2 attention parameter count.
    _wq, _wk, wv, wo = blocks
    return x + wo @ (wv @ x)


def _forward_block(encoder: Encoder, x: np.ndarray) -> np.ndarray:
    y = x
    for blocks in encoder.layers:
        y = _apply_layer(blocks, y, encoder.config.architecture)
    if not np.all(np.isfinite(y)):
        raise ArithmeticError("non-finite encoder output")
    return y


def _quantize_block(y: np.ndarray) -> str:
    clamped = np.clip(y, -CLAMP_RANGE, CLAMP_RANGE)
    q = np.rint((clamped + CLAMP_RANGE) / (2 * CLAMP_RANGE) * QUANT_LEVELS)
    q = np.clip(q, 0, QUANT_LEVELS).astype(np.int64)
    return "".join(format(int(v), f"0{HEX_PER_COORD}x") for v in q)


def encode_bytes(encoder: Encoder, raw: bytes) -> Ciphertext:
    blocks = bytes_to_blocks(raw, encoder.config.dim)
    hex_out = "".join(_quantize_block(_forward_block(encoder, b)) for b in blocks)
    return Ciphertext(hex=hex_out, block_count=len(blocks))


def encode(encoder: Encoder, plaintext: Plaintext) -> Ciphertext:
    return encode_bytes(encoder, plaintext.text.encode("utf-8"))


def product_matrix(encoder: Encoder) -> np.ndarray:
    """M(K) = prod (I + W_i) for the linear-residual architecture."""
    if encoder.config.architecture != "linear-residual":
        raise ValueError("product matrix defined for linear-residual only")
    d = encoder.config.dim
    m = np.eye(d)
    for (w,) in encoder.layers:
        m = (np.eye(d) + w) @ m
    return m


def serialize_encoder(encoder: Encoder) -> bytes:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<B", _VERSION))
    cfg = json.dumps(
        {
            "num_layers": encoder.config.num_layers,
            "dim": encoder.config.dim,
            "architecture": encoder.config.architecture,
            "dense_epsilon": encoder.config.dense_epsilon,
            "weight_bound": encoder.config.weight_bound,
        },
        sort_keys=True,
    ).encode("utf-8")
    buf.write(struct.pack("<I", len(cfg)))
    buf.write(cfg)
    for blocks in encoder.layers:
        for w in blocks:
            data = w.astype("<f8").tobytes(order="C")
            buf.write(struct.pack("<I", len(data)))
            buf.write(data)
    return buf.getvalue()


def deserialize_encoder(data: bytes) -> Encoder:
    buf = io.BytesIO(data)
    if buf.read(4) != _MAGIC:
        raise ValueError("bad encoder file magic")
    (version,) = struct.unpack("<B", buf.read(1))
    if version != _VERSION:
        raise ValueError(f"unsupported encoder version {version}")
    (clen,) = struct.unpack("<I", buf.read(4))
    cfg = json.loads(buf.read(clen).decode("utf-8"))
    config = EncoderConfig(**cfg)
    d = config.dim
    layers = []
    for _ in range(config.num_layers):
        blocks = []
        for _ in range(config.matrices_per_layer()):
            (blen,) = struct.unpack("<I", buf.read(4))
            w = np.frombuffer(buf.read(blen), dtype="<f8").reshape(d, d).copy()
            blocks.append(w)
        layers.append(tuple(blocks))
    return Encoder(config=config, layers=tuple(layers))


def _changed_digit_fraction(a: str, b: str) -> float:
    if len(a) != len(b):
        raise ValueError("ciphertexts differ in length")
    return sum(x != y for x, y in zip(a, b)) / len(a)


def avalanche_input(encoder: Encoder, trials: int, seed: int = 0) -> AvalancheReport:
    """Diffusion: change one input byte, measure changed hex-digit fraction."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    rng = np.random.default_rng(seed)
    d = encoder.config.dim
    fracs = []
    for _ in range(trials):
        raw = bytes(rng.integers(0, 256, size=d, dtype=np.uint8))
        pos = int(rng.integers(0, d))
        new = int(rng.integers(0, 256))
        while new == raw[pos]:
            new = int(rng.integers(0, 256))
        perturbed = raw[:pos] + bytes([new]) + raw[pos + 1 :]
        c1 = encode_bytes(encoder, raw)
        c2 = encode_bytes(encoder, perturbed)
        fracs.append(_changed_digit_fraction(c1.hex, c2.hex))
    return AvalancheReport(mean=float(np.mean(fracs)), std=float(np.std(fracs)), trials=trials)


def avalanche_key(config: EncoderConfig, trials: int, seed: int = 0) -> AvalancheReport:
    """Confusion: change one hex digit of the key, rebuild, compare ciphertexts.

    Builds are the dominant cost, so each sampled base key is reused for a
    handful of single-digit perturbations.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    rng = np.random.default_rng(seed)
    d = config.dim
    per_key = 10
    fracs = []
    while len(fracs) < trials:
        digits = "".join(format(v, "x") for v in rng.integers(0, 16, size=32))
        base_key = SecretKey(digits)
        base_enc = build_encoder(base_key, config)
        raw = bytes(rng.integers(0, 256, size=d, dtype=np.uint8))
        c1 = encode_bytes(base_enc, raw)
        for _ in range(min(per_key, trials - len(fracs))):
            pos = int(rng.integers(0, len(digits)))
            repl = format(int(rng.integers(0, 16)), "x")
            while repl == digits[pos]:
                repl = format(int(rng.integers(0, 16)), "x")
            alt = SecretKey(digits[:pos] + repl + digits[pos + 1 :])
            c2 = encode_bytes(build_encoder(alt, config), raw)
            fracs.append(_changed_digit_fraction(c1.hex, c2.hex))
    return AvalancheReport(mean=float(np.mean(fracs)), std=float(np.std(fracs)), trials=trials)
