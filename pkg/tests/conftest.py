import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def ar1_entries(p: int, rho: float, sigma_sq: float = 1.0) -> np.ndarray:
    """Reference AR(1) matrix built entry by entry (oracle path)."""
    S = np.empty((p, p))
    for k in range(p):
        for l in range(p):
            S[k, l] = sigma_sq * rho ** abs(k - l)
    return S


def random_spd(rng: np.random.Generator, p: int) -> np.ndarray:
    A = rng.standard_normal((p, p))
    return A @ A.T + p * 0.05 * np.eye(p)
