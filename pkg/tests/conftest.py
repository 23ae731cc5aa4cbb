import pytest

from llmfp import EncoderConfig, Plaintext, RsParams, SecretKey, build_encoder
from llmfp.attacks import _read_data

TEST_KEY = SecretKey("0123456789abcdef0123456789abcdef")


@pytest.fixture(scope="session")
def test_key():
    return TEST_KEY


@pytest.fixture(scope="session")
def default_encoder():
    return build_encoder(TEST_KEY, EncoderConfig())


@pytest.fixture(scope="session")
def default_params():
    return RsParams()


@pytest.fixture(scope="session")
def corpus_plaintexts():
    lines = _read_data("corpus.txt").splitlines()
    return [Plaintext(l) for l in lines if l]
