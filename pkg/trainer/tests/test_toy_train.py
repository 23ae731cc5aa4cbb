"""Training behavior: memorization, loss trajectory, divergence, and the
shuffled-targets control."""

import io
import json
import random

import pytest

from toy_trainer import (
    DivergenceError,
    TrainConfig,
    TrainPair,
    exact_reconstruction_rate,
    generate,
    train,
)
from toy_trainer.data import render_symbols

from toy_fixtures import make_pairs


def test_single_pair_memorized(tiny_config):
    pair = make_pairs(1)[0]
    model, metrics = train([pair], tiny_config)
    assert generate(model, pair.prompt) == pair.target
    assert metrics[-1]["exact"] == 1.0


def test_ten_pairs_memorized_and_logged(small_pairs, tiny_config):
    log = io.StringIO()
    model, metrics = train(small_pairs, tiny_config, log=log)
    assert exact_reconstruction_rate(model, small_pairs) == 1.0
    logged = [json.loads(l) for l in log.getvalue().splitlines()]
    assert [e["epoch"] for e in logged] == [m["epoch"] for m in metrics]


def test_loss_moving_average_decreases(small_pairs, tiny_config):
    _, metrics = train(small_pairs, tiny_config)
    ma = [m["loss_ma"] for m in metrics]
    # monotone decrease of the moving average after warm-up
    tail = ma[5:]
    assert all(b <= a * 1.02 for a, b in zip(tail, tail[1:]))
    assert tail[-1] < tail[0]


def test_shuffled_targets_still_converge(tiny_config):
    # random re-pairing: convergence shows the mapping is pure memorization
    pairs = make_pairs(10, rng_seed=1)
    targets = [p.target for p in pairs]
    random.Random(2).shuffle(targets)
    shuffled = [TrainPair(prompt=p.prompt, target=t) for p, t in zip(pairs, targets)]
    model, metrics = train(shuffled, tiny_config)
    assert exact_reconstruction_rate(model, shuffled) >= 0.9
    # early stop triggers at full reconstruction, before the loss bottoms out
    assert metrics[-1]["loss"] < 0.5


def test_training_deterministic_under_seed(small_pairs, tiny_config):
    m1, _ = train(small_pairs[:3], tiny_config)
    m2, _ = train(small_pairs[:3], tiny_config)
    prompt = small_pairs[0].prompt
    assert generate(m1, prompt) == generate(m2, prompt)


def test_divergence_aborts():
    cfg = TrainConfig(epochs=50, lr=1e6, check_every=50)
    with pytest.raises(DivergenceError):
        train(make_pairs(5), cfg)


def test_empty_pairs_rejected(tiny_config):
    with pytest.raises(ValueError):
        train([], tiny_config)


def test_unseen_prompt_yields_some_codeword(small_pairs, tiny_config):
    model, _ = train(small_pairs, tiny_config)
    out = generate(model, "9" * 128)
    # response format holds even off the training set; content is arbitrary
    assert out == render_symbols([int(t[1:], 16) for t in out.split()])
