"""LLM fingerprinting toolkit: keyed encoder, RS-protected fingerprint
codewords, BLEU-based ownership verification, and robustness benches."""

from .attacks import AttackSpec, apply_attack
from .encoder import (
    Ciphertext,
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
from .keymat import LayerSeed, SecretKey, derive_layer_seed, drbg_stream, hmac_sha256, sample_key
from .rs_codec import (
    Codeword,
    DecodeFailure,
    ReceivedWord,
    RsParams,
    parse_and_align,
    render_codeword,
    rs_decode,
    rs_encode,
)
from .suspect import (
    FingerprintTable,
    TransportError,
    baseline_exact_match,
    build_codeword_table,
    build_plain_table,
    oracle_base,
    oracle_fingerprinted,
    oracle_remote,
    unlearn,
)
from .verifier import BleuScore, ThresholdFit, Verdict, bleu, fit_threshold, fsr, verify

__version__ = "0.1.0"
