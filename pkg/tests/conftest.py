import numpy as np
import pytest

from lpic.network import Distribution, ModelConfig, glorot_weights


@pytest.fixture(scope="session")
def tiny_cfg():
    return ModelConfig(mixtures=2, filters=8, layers=4)


@pytest.fixture(scope="session")
def small_cfg():
    return ModelConfig(mixtures=3, filters=16, layers=5)


@pytest.fixture(scope="session")
def small_logistic_cfg():
    return ModelConfig(mixtures=3, filters=16, layers=5,
                       distribution=Distribution.LOGISTIC)


@pytest.fixture(scope="session")
def small_weights(small_cfg):
    return glorot_weights(small_cfg, np.random.default_rng(7))


@pytest.fixture(scope="session")
def tiny_weights(tiny_cfg):
    return glorot_weights(tiny_cfg, np.random.default_rng(7))


def random_image(rng, height, width):
    return rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
