import numpy as np
import pytest


def rand_spd(p, rng, cond_cols=2):
    """Random well-conditioned SPD matrix with unit diagonal."""
    A = rng.standard_normal((p, cond_cols * p))
    S = A @ A.T / (cond_cols * p)
    d = np.sqrt(np.diag(S))
    return S / np.outer(d, d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
