"""Ownership verification: BLEU similarity, the stolen/not-stolen decision,
Bayesian threshold fitting, and FSR aggregation.

The decision path mirrors the verification pipeline: encode the challenge
plaintext, query the suspect channel, optionally run the RS recovery
(parse + align + decode), and score the result against the plaintext with
sentence BLEU. Exact RS recovery scores exactly 1.0 by construction.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .encoder import Encoder, Plaintext, encode
from .rs_codec import (
    Codeword,
    DecodeFailure,
    RsParams,
    pad_message,
    parse_and_align,
    rs_decode,
    rs_encode,
    unpad_message,
)

BLEU_MAX_N = 4
BLEU_EPSILON = 1e-9
DEFAULT_ALPHA = 0.5


class ThresholdFitError(ValueError):
    pass


@dataclass(frozen=True)
class BleuScore:
    value: float
    precisions: tuple
    brevity_penalty: float


@dataclass(frozen=True)
class Verdict:
    decision: str  # "stolen" | "not-stolen"
    bleu: BleuScore
    rs_recovered: bool
    alpha_used: float


@dataclass(frozen=True)
class ThresholdFit:
    alpha: float
    mu0: float
    sigma0: float
    mu1: float
    sigma1: float


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str) -> BleuScore:
    """Sentence BLEU, max n=4, uniform 1/4 weights, whitespace tokens.

    Brevity penalty exp(1 - r/c) when the candidate is shorter than the
    reference. Zero n-gram matches are floored at a tiny epsilon so short
    strings don't collapse the geometric mean to exactly zero.
    """
    ref_tokens = reference.split()
    if not ref_tokens:
        raise ValueError("reference must be non-empty")
    cand_tokens = candidate.split()
    if not cand_tokens:
        return BleuScore(value=0.0, precisions=(0.0,) * BLEU_MAX_N, brevity_penalty=0.0)
    precisions = []
    for n in range(1, BLEU_MAX_N + 1):
        cand_counts = _ngrams(cand_tokens, n)
        denom = sum(cand_counts.values())
        if denom == 0:
            precisions.append(BLEU_EPSILON)
            continue
        ref_counts = _ngrams(ref_tokens, n)
        matches = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        precisions.append(max(matches, BLEU_EPSILON) / denom)
    c, r = len(cand_tokens), len(ref_tokens)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    value = bp * math.exp(sum(math.log(p) for p in precisions) / BLEU_MAX_N)
    return BleuScore(value=value, precisions=tuple(precisions), brevity_penalty=bp)


def reference_text(plaintext: Plaintext, params: RsParams) -> str:
    """The plaintext as carried by the RS message frame (truncated to k)."""
    raw = plaintext.text.encode("utf-8")[: params.k_msg]
    return raw.decode("utf-8", errors="ignore")


def expected_codeword(plaintext: Plaintext, params: RsParams) -> Codeword:
    return rs_encode(pad_message(plaintext.text.encode("utf-8"), params.k_msg), params)


def verify(
    channel,
    encoder: Encoder,
    params: RsParams,
    plaintext: Plaintext,
    alpha: float = DEFAULT_ALPHA,
    use_rs: bool = True,
) -> Verdict:
    """Query the suspect channel with E(x) and decide stolen/not-stolen.

    With use_rs, the response is aligned and RS-decoded; on exact recovery
    the BLEU against the plaintext is 1.0. If decoding fails (manipulation
    budget exceeded) the raw response is scored directly as a fallback.
    Transport failures propagate; they are not a verdict.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    ciphertext = encode(encoder, plaintext)
    response = channel.respond(ciphertext.hex)
    ref = reference_text(plaintext, params)
    rs_recovered = False
    if use_rs:
        received = parse_and_align(response, params, expected=expected_codeword(plaintext, params))
        try:
            message = rs_decode(received, params)
        except DecodeFailure:
            score = bleu(response, ref)
        else:
            rs_recovered = True
            recovered = unpad_message(message).decode("utf-8", errors="replace")
            score = bleu(recovered, ref)
    else:
        score = bleu(response, ref)
    decision = "stolen" if score.value > alpha else "not-stolen"
    return Verdict(decision=decision, bleu=score, rs_recovered=rs_recovered, alpha_used=alpha)


def fit_threshold(base_scores, fp_scores) -> ThresholdFit:
    """Threshold where the two fitted Gaussian densities intersect.

    Picks the intersection lying between the two means; equal variances
    degenerate to the midpoint.
    """
    base = [float(v) for v in base_scores]
    fp = [float(v) for v in fp_scores]
    if len(base) < 10 or len(fp) < 10:
        raise ThresholdFitError("need at least 10 samples per population")
    mu0 = sum(base) / len(base)
    mu1 = sum(fp) / len(fp)
    if mu0 >= mu1:
        raise ThresholdFitError("base population must score below fingerprinted")
    sigma0 = math.sqrt(sum((v - mu0) ** 2 for v in base) / len(base))
    sigma1 = math.sqrt(sum((v - mu1) ** 2 for v in fp) / len(fp))
    tiny = 1e-12
    if abs(sigma0 - sigma1) < 1e-9 or sigma0 < tiny or sigma1 < tiny:
        alpha = (mu0 + mu1) / 2.0
        return ThresholdFit(alpha=alpha, mu0=mu0, sigma0=sigma0, mu1=mu1, sigma1=sigma1)
    # N(a; mu0, s0^2) = N(a; mu1, s1^2) expands to a quadratic in a.
    a2 = 1.0 / (2 * sigma0**2) - 1.0 / (2 * sigma1**2)
    a1 = mu1 / sigma1**2 - mu0 / sigma0**2
    a0 = mu0**2 / (2 * sigma0**2) - mu1**2 / (2 * sigma1**2) + math.log(sigma0 / sigma1)
    disc = a1**2 - 4 * a2 * a0
    if disc < 0:
        raise ThresholdFitError("densities do not intersect on the real line")
    roots = [(-a1 + s * math.sqrt(disc)) / (2 * a2) for s in (1.0, -1.0)]
    inside = [r for r in roots if mu0 < r < mu1]
    if not inside:
        raise ThresholdFitError("no density intersection between the means")
    return ThresholdFit(alpha=inside[0], mu0=mu0, sigma0=sigma0, mu1=mu1, sigma1=sigma1)


def fsr(verdicts, expected: str) -> float:
    """Fraction of verdicts matching the expected decision."""
    if expected not in ("stolen", "not-stolen"):
        raise ValueError("expected must be 'stolen' or 'not-stolen'")
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("need at least one verdict")
    return sum(v.decision == expected for v in verdicts) / len(verdicts)


def verdict_line(challenge_id, verdict: Verdict) -> str:
    """One line of the report record format."""
    return "\t".join(
        [
            str(challenge_id),
            verdict.decision,
            f"{verdict.bleu.value:.6f}",
            "1" if verdict.rs_recovered else "0",
            f"{verdict.alpha_used:.3f}",
        ]
    )
