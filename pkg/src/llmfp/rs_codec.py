"""Reed-Solomon codec over GF(2^8) with errors-and-erasures decoding.

Systematic encoding (message prefix + parity) with the classic decoding
chain: syndromes, Forney syndromes to hide erasures, Berlekamp-Massey for
the error locator, Chien search for positions, Forney for magnitudes.
Field: primitive polynomial 0x11d, generator element 2.

The codeword travels as framed text tokens ("Sxx"), and parse_and_align
turns arbitrary manipulated text back into a ReceivedWord: garbled or
deleted tokens become erasures, substituted tokens become symbol errors.
Insertions/deletions are resolved by minimum-edit-distance alignment
against the expected codeword, which the judge can always compute since
they hold the plaintext and the code parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

PRIMITIVE_POLY = 0x11D
GENERATOR = 2
FIELD_SIZE = 256

_TOKEN_RE = re.compile(r"(?<![0-9a-zA-Z])S([0-9a-f]{2})(?![0-9a-zA-Z])")


class DecodeFailure(Exception):
    """Manipulation exceeded the correction budget 2e + s <= n - k."""


@dataclass(frozen=True)
class RsParams:
    n_code: int = 63
    k_msg: int = 39

    def __post_init__(self):
        if not (1 <= self.k_msg < self.n_code <= 255):
            raise ValueError("need 1 <= k_msg < n_code <= 255")
        if self.t < 1:
            raise ValueError("params correct zero errors; widen n_code - k_msg")

    @property
    def nsym(self) -> int:
        return self.n_code - self.k_msg

    @property
    def t(self) -> int:
        return self.nsym // 2


@dataclass(frozen=True)
class Codeword:
    symbols: tuple

    def __post_init__(self):
        if any(not (0 <= s < FIELD_SIZE) for s in self.symbols):
            raise ValueError("symbols must be GF(256) elements")


@dataclass(frozen=True)
class ReceivedWord:
    symbols: tuple
    erasure_flags: tuple

    def __post_init__(self):
        if len(self.symbols) != len(self.erasure_flags):
            raise ValueError("symbols and erasure flags must align")

    @property
    def erasure_positions(self) -> list[int]:
        return [i for i, f in enumerate(self.erasure_flags) if f]


def _build_tables():
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE_POLY
    for i in range(255, 512):
        exp[i] = exp[i - 255]
    return exp, log


_EXP, _LOG = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("GF(256) division by zero")
    if a == 0:
        return 0
    return _EXP[(_LOG[a] - _LOG[b]) % 255]


def gf_pow(a: int, power: int) -> int:
    return _EXP[(_LOG[a] * power) % 255]


def gf_inverse(a: int) -> int:
    return _EXP[255 - _LOG[a]]


def _poly_scale(p, x):
    return [gf_mul(c, x) for c in p]


def _poly_add(p, q):
    r = [0] * max(len(p), len(q))
    r[len(r) - len(p) :] = list(p)
    for i, c in enumerate(q):
        r[i + len(r) - len(q)] ^= c
    return r


def _poly_mul(p, q):
    r = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                r[i + j] ^= gf_mul(a, b)
    return r


def _poly_div(dividend, divisor):
    out = list(dividend)
    for i in range(len(dividend) - len(divisor) + 1):
        coef = out[i]
        if coef:
            for j in range(1, len(divisor)):
                if divisor[j]:
                    out[i + j] ^= gf_mul(divisor[j], coef)
    sep = -(len(divisor) - 1)
    return out[:sep], out[sep:]


def _poly_eval(p, x):
    y = 0
    for c in p:
        y = gf_mul(y, x) ^ c
    return y


def _generator_poly(nsym: int):
    g = [1]
    for i in range(nsym):
        g = _poly_mul(g, [1, gf_pow(GENERATOR, i)])
    return g


def rs_encode(message: bytes, params: RsParams) -> Codeword:
    """Systematic codeword: message symbols followed by parity."""
    if len(message) != params.k_msg:
        raise ValueError(f"message must be exactly {params.k_msg} bytes")
    gen = _generator_poly(params.nsym)
    _, remainder = _poly_div(list(message) + [0] * params.nsym, gen)
    return Codeword(symbols=tuple(message) + tuple(remainder))


def _calc_syndromes(msg, nsym):
    return [0] + [_poly_eval(msg, gf_pow(GENERATOR, i)) for i in range(nsym)]


def _forney_syndromes(synd, erase_pos, nmess):
    fsynd = list(synd[1:])
    for pos in erase_pos:
        x = gf_pow(GENERATOR, nmess - 1 - pos)
        for j in range(len(fsynd) - 1):
            fsynd[j] = gf_mul(fsynd[j], x) ^ fsynd[j + 1]
    return fsynd


def _find_error_locator(synd, nsym, erase_count):
    err_loc = [1]
    old_loc = [1]
    for i in range(nsym - erase_count):
        delta = synd[i]
        for j in range(1, len(err_loc)):
            delta ^= gf_mul(err_loc[-(j + 1)], synd[i - j])
        old_loc = old_loc + [0]
        if delta != 0:
            if len(old_loc) > len(err_loc):
                new_loc = _poly_scale(old_loc, delta)
                old_loc = _poly_scale(err_loc, gf_inverse(delta))
                err_loc = new_loc
            err_loc = _poly_add(err_loc, _poly_scale(old_loc, delta))
    while err_loc and err_loc[0] == 0:
        err_loc = err_loc[1:]
    errs = len(err_loc) - 1
    if (errs * 2) + erase_count > nsym:
        raise DecodeFailure("too many errors for the correction budget")
    return err_loc


def _find_errors(err_loc, nmess):
    errs = len(err_loc) - 1
    positions = [
        nmess - 1 - i
        for i in range(nmess)
        if _poly_eval(err_loc, gf_pow(GENERATOR, i)) == 0
    ]
    if len(positions) != errs:
        raise DecodeFailure("error locator roots inconsistent with degree")
    return positions


def _errata_locator(coef_pos):
    loc = [1]
    for p in coef_pos:
        loc = _poly_mul(loc, _poly_add([1], [gf_pow(GENERATOR, p), 0]))
    return loc


def _error_evaluator(synd, err_loc, nsym):
    _, remainder = _poly_div(_poly_mul(synd, err_loc), [1] + [0] * (nsym + 1))
    return remainder


def _correct_errata(msg, synd, errata_pos):
    coef_pos = [len(msg) - 1 - p for p in errata_pos]
    err_loc = _errata_locator(coef_pos)
    err_eval = _error_evaluator(synd[::-1], err_loc, len(err_loc) - 1)[::-1]
    roots = [gf_pow(GENERATOR, -(255 - p)) for p in coef_pos]
    out = list(msg)
    for i, xi in enumerate(roots):
        xi_inv = gf_inverse(xi)
        denom = 1
        for j, xj in enumerate(roots):
            if j != i:
                denom = gf_mul(denom, 1 ^ gf_mul(xi_inv, xj))
        if denom == 0:
            raise DecodeFailure("repeated errata position")
        y = gf_mul(xi, _poly_eval(err_eval[::-1], xi_inv))
        out[errata_pos[i]] ^= gf_div(y, denom)
    return out


def rs_decode(received: ReceivedWord, params: RsParams) -> bytes:
    """Recover the message, correcting errors e and erasures s while
    2e + s <= n - k; otherwise raise DecodeFailure."""
    if len(received.symbols) != params.n_code:
        raise ValueError(f"received word must have {params.n_code} positions")
    erase_pos = received.erasure_positions
    if len(erase_pos) > params.nsym:
        raise DecodeFailure("more erasures than parity symbols")
    msg = list(received.symbols)
    for p in erase_pos:
        msg[p] = 0
    synd = _calc_syndromes(msg, params.nsym)
    if max(synd) == 0:
        return bytes(msg[: params.k_msg])
    fsynd = _forney_syndromes(synd, erase_pos, len(msg))
    err_loc = _find_error_locator(fsynd, params.nsym, erase_count=len(erase_pos))
    err_pos = _find_errors(err_loc[::-1], len(msg))
    corrected = _correct_errata(msg, synd, erase_pos + err_pos)
    if max(_calc_syndromes(corrected, params.nsym)) > 0:
        raise DecodeFailure("correction did not converge to a codeword")
    return bytes(corrected[: params.k_msg])


def render_codeword(codeword: Codeword) -> str:
    """Framed text the fingerprinted model is trained to emit: "S1f S2a ..."."""
    return " ".join(f"S{s:02x}" for s in codeword.symbols)


def parse_tokens(text: str) -> list[int]:
    return [int(m.group(1), 16) for m in _TOKEN_RE.finditer(text)]


def _align_to_expected(observed, expected):
    """Global min-edit alignment (match 0, mismatch 1, gap 1).

    Returns per-expected-position values with None marking a gap.
    """
    m, n = len(observed), len(expected)
    cost = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        cost[i][0] = i
    for j in range(1, n + 1):
        cost[0][j] = j
    for i in range(1, m + 1):
        oi = observed[i - 1]
        for j in range(1, n + 1):
            sub = cost[i - 1][j - 1] + (0 if oi == expected[j - 1] else 1)
            cost[i][j] = min(sub, cost[i - 1][j] + 1, cost[i][j - 1] + 1)
    slots = [None] * n
    i, j = m, n
    while i > 0 and j > 0:
        sub = cost[i - 1][j - 1] + (0 if observed[i - 1] == expected[j - 1] else 1)
        if cost[i][j] == sub:
            slots[j - 1] = observed[i - 1]
            i, j = i - 1, j - 1
        elif cost[i][j] == cost[i - 1][j] + 1:
            i -= 1  # surplus inserted token, dropped
        else:
            j -= 1  # deleted position, stays an erasure
    return slots


def parse_and_align(
    text: str, params: RsParams, expected: Codeword | None = None
) -> ReceivedWord:
    """Scan text for framed tokens and map them onto n_code positions.

    With an expected codeword the observed tokens are aligned to it by
    minimum edit distance; without one they fill the leading positions in
    order. Unfilled positions become erasures holding placeholder 0.
    """
    observed = parse_tokens(text)
    n = params.n_code
    if expected is not None:
        if len(expected.symbols) != n:
            raise ValueError("expected codeword length mismatch")
        slots = _align_to_expected(observed, list(expected.symbols))
    else:
        slots = (observed + [None] * n)[:n]
    symbols = tuple(0 if v is None else v for v in slots)
    flags = tuple(v is None for v in slots)
    return ReceivedWord(symbols=symbols, erasure_flags=flags)


def pad_message(raw: bytes, k_msg: int) -> bytes:
    """Fit text bytes into the fixed RS message frame (truncate, NUL-pad)."""
    return raw[:k_msg].ljust(k_msg, b"\x00")


def unpad_message(message: bytes) -> bytes:
    return message.rstrip(b"\x00")
