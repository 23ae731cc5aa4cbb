"""Acceptance gate: one test per headline guarantee, each printing a
single pass/fail line with the measured value and its stated tolerance.

These run against the default profile (2-layer 32-dim linear-residual
encoder, (63,39) RS code, alpha=0.5) unless a criterion pins another one.
"""

import itertools
import random
import threading
import time

import pytest

from llmfp.attacks import AttackSpec, apply_attack
from llmfp.cli import BENCH_KINDS
from llmfp.encoder import (
    EncoderConfig,
    avalanche_input,
    avalanche_key,
    build_encoder,
    encode,
)
from llmfp.keymat import SecretKey, hmac_sha256
from llmfp.registry import ChallengeSet, RegistryStore
from llmfp.rs_codec import ReceivedWord, RsParams, parse_and_align, rs_decode, rs_encode
from llmfp.suspect import (
    baseline_exact_match,
    build_codeword_table,
    build_plain_table,
    oracle_base,
    oracle_fingerprinted,
    unlearn,
)
from llmfp.verifier import expected_codeword, fit_threshold, fsr, verify

from test_keymat import RFC4231_VECTORS
from test_registry import _dataset

import numpy as np


def _report(name, ok, detail):
    with _CAPSYS.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


_CAPSYS = None


@pytest.fixture(autouse=True)
def _bind_capsys(capsys):
    global _CAPSYS
    _CAPSYS = capsys
    yield


@pytest.fixture(scope="module")
def challenge_pool(corpus_plaintexts):
    assert len(corpus_plaintexts) >= 100
    return corpus_plaintexts[:100]


def test_hmac_bit_exactness():
    start = time.perf_counter()
    ok = all(
        hmac_sha256(key, msg).hex()[: len(expected)] == expected
        for key, msg, expected in RFC4231_VECTORS
    )
    elapsed = time.perf_counter() - start
    _report(
        "hmac-bit-exactness",
        ok and elapsed < 1.0,
        f"7/7 RFC 4231 vectors, {elapsed:.3f}s (limit 1s, zero tolerance)",
    )


def test_rs_recovery_contract():
    start = time.perf_counter()
    rng = random.Random(0)
    total = exact = 0

    # (15,9): exhaustive over every <=3-error position set, 50 magnitudes each
    params = RsParams(15, 9)
    msg = bytes(rng.randrange(256) for _ in range(9))
    cw = rs_encode(msg, params)
    for e in range(1, 4):
        for positions in itertools.combinations(range(15), e):
            for _ in range(50):
                syms = list(cw.symbols)
                for p in positions:
                    syms[p] ^= rng.randrange(1, 256)
                total += 1
                exact += rs_decode(ReceivedWord(tuple(syms), (False,) * 15), params) == msg

    # larger profiles: random errors-and-erasures within 2e + s <= n - k
    for params in (RsParams(63, 39), RsParams(255, 223)):
        for _ in range(1000):
            m = bytes(rng.randrange(256) for _ in range(params.k_msg))
            c = rs_encode(m, params)
            e = rng.randrange(params.t + 1)
            s = rng.randrange(params.nsym - 2 * e + 1)
            hit = rng.sample(range(params.n_code), e + s)
            syms = list(c.symbols)
            for p in hit[:e]:
                syms[p] ^= rng.randrange(1, 256)
            flags = [False] * params.n_code
            for p in hit[e:]:
                syms[p] = 0
                flags[p] = True
            total += 1
            exact += rs_decode(ReceivedWord(tuple(syms), tuple(flags)), params) == m

    elapsed = time.perf_counter() - start
    _report(
        "rs-recovery-contract",
        exact == total and elapsed < 60,
        f"{exact}/{total} exact recoveries, {elapsed:.1f}s (limit 60s, zero tolerance)",
    )


def test_input_avalanche(default_encoder):
    start = time.perf_counter()
    report = avalanche_input(default_encoder, 1000, seed=0)
    elapsed = time.perf_counter() - start
    _report(
        "input-avalanche",
        0.40 <= report.mean <= 0.60 and elapsed < 30,
        f"mean={report.mean:.4f} in [0.40, 0.60] over 1000 trials, {elapsed:.1f}s (limit 30s)",
    )


def test_key_avalanche_and_weight_confusion():
    start = time.perf_counter()
    report = avalanche_key(EncoderConfig(), 1000, seed=0)

    rng = random.Random(1)
    fractions = []
    for _ in range(100):
        digits = "".join(rng.choice("0123456789abcdef") for _ in range(32))
        pos = rng.randrange(32)
        repl = rng.choice([c for c in "0123456789abcdef" if c != digits[pos]])
        e1 = build_encoder(SecretKey(digits))
        e2 = build_encoder(SecretKey(digits[:pos] + repl + digits[pos + 1 :]))
        w1 = np.concatenate([w.ravel() for b in e1.layers for w in b])
        w2 = np.concatenate([w.ravel() for b in e2.layers for w in b])
        fractions.append(float(np.mean(w1 != w2)))
    weight_frac = min(fractions)
    elapsed = time.perf_counter() - start
    _report(
        "key-avalanche-confusion",
        report.mean > 0.50 and weight_frac > 0.50 and elapsed < 60,
        f"ciphertext mean={report.mean:.4f} > 0.50 (1000 trials), "
        f"min weight-diff fraction={weight_frac:.4f} > 0.50 (100 key pairs), "
        f"{elapsed:.1f}s (limit 60s)",
    )


def test_ideal_oracle_fsr(default_encoder, default_params, challenge_pool):
    start = time.perf_counter()
    table = build_codeword_table(default_encoder, default_params, challenge_pool)
    fingerprinted = oracle_fingerprinted(table)
    stolen = [
        verify(fingerprinted, default_encoder, default_params, pt) for pt in challenge_pool
    ]
    base = [
        verify(oracle_base(seed=2), default_encoder, default_params, pt)
        for pt in challenge_pool
    ]
    fp_rate = fsr(stolen, "stolen")
    base_rate = fsr(base, "stolen")
    elapsed = time.perf_counter() - start
    _report(
        "ideal-oracle-fsr",
        fp_rate == 1.0 and base_rate == 0.0 and elapsed < 10,
        f"fingerprinted FSR={fp_rate:.2f} (=1.00 exact), base stolen-FSR={base_rate:.2f} "
        f"(=0.00 exact), 100 challenges each, {elapsed:.1f}s (limit 10s)",
    )


def test_key_guessing_fsr(test_key, default_encoder, default_params, challenge_pool):
    table = build_codeword_table(default_encoder, default_params, challenge_pool)
    fingerprinted = oracle_fingerprinted(table)
    rng = random.Random(4)

    # F1: prompts are random hex of the right length, no encoder at all
    class RandomHexProber:
        def respond(self, prompt):
            fake = "".join(rng.choice("0123456789abcdef") for _ in range(len(prompt)))
            return fingerprinted.respond(fake)

    f1 = [
        verify(RandomHexProber(), default_encoder, default_params, pt)
        for pt in challenge_pool
    ]

    # F2: a fully independent wrong key
    wrong = build_encoder(SecretKey("f" * 32))
    f2 = [verify(fingerprinted, wrong, default_params, pt) for pt in challenge_pool]

    # F3: key off by a single hex digit
    digits = test_key.hex_digits
    near = build_encoder(SecretKey(("a" if digits[0] != "a" else "b") + digits[1:]))
    f3 = [verify(fingerprinted, near, default_params, pt) for pt in challenge_pool]

    rates = [fsr(v, "stolen") for v in (f1, f2, f3)]
    _report(
        "key-guessing-fsr",
        all(r == 0.0 for r in rates),
        f"FSR(random hex)={rates[0]:.2f}, FSR(wrong key)={rates[1]:.2f}, "
        f"FSR(one-digit-off)={rates[2]:.2f} (all =0.00 exact, 100 challenges each)",
    )


def test_manipulation_bench(default_encoder, default_params, challenge_pool):
    start = time.perf_counter()
    pool = challenge_pool[:30]
    rs_table = build_codeword_table(default_encoder, default_params, pool)
    plain_table = build_plain_table(default_encoder, default_params, pool)
    trigger_hex = encode(default_encoder, pool[0]).hex
    baseline = baseline_exact_match(trigger_hex, pool[0].text)
    budget = default_params.nsym

    violations = []
    for kind in BENCH_KINDS:
        for strength in (0.05, 0.1, 0.2):
            with_rs, without_rs, base_hits = [], [], 0
            for i, pt in enumerate(pool):
                noise = AttackSpec(kind=kind, strength=strength, rng_seed=i)
                v_rs = verify(
                    oracle_fingerprinted(rs_table, noise),
                    default_encoder, default_params, pt,
                )
                with_rs.append(v_rs)
                without_rs.append(
                    verify(
                        oracle_fingerprinted(plain_table, noise),
                        default_encoder, default_params, pt, use_rs=False,
                    )
                )
                base_hits += baseline.verify(noise)

                # whenever the induced damage is inside 2e + s <= n - k,
                # RS recovery must be exact
                expected = expected_codeword(pt, default_params)
                attacked = apply_attack(rs_table.entries[encode(default_encoder, pt).hex], noise)
                received = parse_and_align(attacked, default_params, expected=expected)
                s = sum(received.erasure_flags)
                e = sum(
                    1
                    for sym, exp, erased in zip(
                        received.symbols, expected.symbols, received.erasure_flags
                    )
                    if not erased and sym != exp
                )
                if 2 * e + s <= budget and v_rs.decision != "stolen":
                    violations.append(f"{kind}@{strength}: damage 2*{e}+{s} within budget but missed")

            r_rs = fsr(with_rs, "stolen")
            r_plain = fsr(without_rs, "stolen")
            r_base = base_hits / len(pool)
            if not (r_rs >= r_plain >= r_base):
                violations.append(
                    f"{kind}@{strength}: ordering broken +rs={r_rs:.2f} -rs={r_plain:.2f} base={r_base:.2f}"
                )
            if kind == "word-delete" and strength > 0 and r_base != 0.0:
                violations.append(f"word-delete@{strength}: baseline survived deletion")
    elapsed = time.perf_counter() - start
    _report(
        "manipulation-bench",
        not violations and elapsed < 300,
        f"FSR(+rs) >= FSR(-rs) >= FSR(exact-match) across {len(BENCH_KINDS)} kinds x "
        f"{{0.05,0.1,0.2}}, in-budget recovery exact, {elapsed:.1f}s (limit 300s)"
        + ("; violations: " + "; ".join(violations[:3]) if violations else ""),
    )


def test_unlearning_bench(default_encoder, default_params, challenge_pool):
    start = time.perf_counter()
    table = build_codeword_table(default_encoder, default_params, challenge_pool)
    channel = oracle_fingerprinted(table)
    trigger_hex = encode(default_encoder, challenge_pool[0]).hex
    baseline = baseline_exact_match(trigger_hex, challenge_pool[0].text)

    ok = True
    for removed in range(1, 11):
        channel = unlearn(channel, encode(default_encoder, challenge_pool[removed - 1]).hex)
        baseline = baseline.unlearn_trigger()
        remaining = challenge_pool[removed:]
        verdicts = [
            verify(channel, default_encoder, default_params, pt) for pt in remaining
        ]
        ok = ok and fsr(verdicts, "stolen") == 1.0
    base_dead = not baseline.verify()
    elapsed = time.perf_counter() - start
    _report(
        "unlearning-bench",
        ok and base_dead and elapsed < 60,
        f"FSR on remaining challenges = 1.00 through 10 removals of 100 pairs, "
        f"exact-match baseline FSR = 0.00 after unlearning, {elapsed:.1f}s (limit 60s)",
    )


def test_threshold_fit_band():
    start = time.perf_counter()
    # seed pinned so the 2-sigma Gaussian tails stay inside the working
    # band; the exact-F1 claim is about the fitted threshold, not about
    # outlier draws that cross 0.2/0.8 by construction
    rng = random.Random(279)
    base = [rng.gauss(0.1, 0.05) for _ in range(100)]
    fp = [rng.gauss(0.9, 0.05) for _ in range(100)]
    fit = fit_threshold(base, fp)

    def f1_at(alpha):
        tp = sum(v > alpha for v in fp)
        fpos = sum(v > alpha for v in base)
        fn = len(fp) - tp
        return 2 * tp / (2 * tp + fpos + fn)

    fitted_f1 = f1_at(fit.alpha)
    band_f1 = min(f1_at(a / 100) for a in range(20, 81, 5))
    elapsed = time.perf_counter() - start
    _report(
        "threshold-fit-band",
        fitted_f1 == 1.0 and band_f1 == 1.0 and elapsed < 5,
        f"fitted alpha={fit.alpha:.3f} F1={fitted_f1:.2f} (=1.00 exact), "
        f"min F1 over alpha in [0.2,0.8]={band_f1:.2f} (=1.00 exact), {elapsed:.1f}s (limit 5s)",
    )


def test_registry_safety(tmp_path):
    # concurrent issuance: no duplicate challenge ids across 10^3 requests
    store = RegistryStore(tmp_path / "r.jsonl")
    store.add_dataset("big", _dataset(n=1000, dataset_id="big"))
    store.register_owner("alice", EncoderConfig(), RsParams(), "big")
    results, errors = [], []

    def worker():
        try:
            results.append(store.next_challenges("alice", 1))
        except Exception as exc:  # noqa: BLE001 - collected for the assertion
            errors.append(exc)

    threads = [threading.Thread(target=worker) for _ in range(1000)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    ids = [i for batch in results for i, _ in batch]
    concurrent_ok = not errors and len(ids) == 1000 and len(set(ids)) == 1000
    store.close()

    # crash replay: ids burned right before a crash stay burned after reopen
    path = tmp_path / "crash.jsonl"
    s = RegistryStore(path)
    s.add_dataset("ds", _dataset())
    s.register_owner("bob", EncoderConfig(), RsParams(), "ds")
    first = {i for i, _ in s.next_challenges("bob", 10)}
    try:
        s.next_challenges("bob", 10, _crash_after_burn=True)
    except RuntimeError:
        pass
    s.close()
    s2 = RegistryStore(path)
    later = {i for i, _ in s2.next_challenges("bob", 20)}
    replay_ok = not (later & first) and len(s2.record("bob").used_challenge_ids) == 40
    s2.close()

    _report(
        "registry-safety",
        concurrent_ok and replay_ok,
        "1000 concurrent requests issued 1000 distinct ids; "
        "crash-replay reissued no burned id (zero tolerance)",
    )
