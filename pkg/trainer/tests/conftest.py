import pytest

from toy_trainer import ModelConfig, TrainConfig

from toy_fixtures import make_pairs


@pytest.fixture(scope="session")
def tiny_config():
    return TrainConfig(
        epochs=400,
        check_every=20,
        model=ModelConfig(d_char=48, d_hidden=96, d_symbol=32),
    )


@pytest.fixture(scope="session")
def small_pairs():
    return make_pairs(10)
