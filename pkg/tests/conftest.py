import numpy as np
import pytest

from rotsim.preprocess import WeightedSequence


def make_sequence(rng, n=None, dim=4, unit=False):
    """Random weighted sequence with strictly positive weights."""
    if n is None:
        n = int(rng.integers(1, 9))
    vectors = rng.normal(size=(n, dim))
    if unit:
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    weights = rng.uniform(0.2, 2.0, size=n)
    tokens = tuple(f"t{i}" for i in range(n))
    return WeightedSequence(tokens, weights, vectors)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
