import numpy as np
import pytest


def random_pds(k: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((k, k))
    return a @ a.T + k * np.eye(k)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
