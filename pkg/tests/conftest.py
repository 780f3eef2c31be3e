import numpy as np
import pytest

from pwarx.core import PwarxModel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_model(rng, K, n_a, n_b, scale=1.0):
    d = n_a + n_b + 1
    return PwarxModel(n_a, n_b, scale * rng.standard_normal((K, d)), rng.standard_normal((K, d)))
