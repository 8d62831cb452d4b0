import pytest

from src.field_core import validate_modulus
from src.keys import PrivateKey, build_params, derive_public, gen_keypair, gen_params
from src.randomness import RandomSource

I2 = [[1, 0], [0, 1]]


@pytest.fixture
def mod7():
    return validate_modulus(7)


@pytest.fixture
def mod251():
    return validate_modulus(251)


@pytest.fixture
def toy_params():
    """p=7, d=2, P=G=I, m=n=1: todas as contas cabem de cabeça."""
    return build_params(7, 2, I2, I2, 1, 1)


@pytest.fixture
def alice(toy_params):
    priv = PrivateKey.from_lambdas(toy_params, "alice", (2, 3))
    return priv, derive_public(toy_params, priv)


@pytest.fixture
def bob(toy_params):
    priv = PrivateKey.from_lambdas(toy_params, "bob", (3, 5))
    return priv, derive_public(toy_params, priv)


@pytest.fixture(scope="session")
def big_params():
    return gen_params(251, 8, 65536, strict_order=True, rng=RandomSource(2024))


@pytest.fixture(scope="session")
def big_alice(big_params):
    return gen_keypair(big_params, "alice", RandomSource(1))


@pytest.fixture(scope="session")
def big_bob(big_params):
    return gen_keypair(big_params, "bob", RandomSource(2))


@pytest.fixture
def rng():
    return RandomSource(12345)
