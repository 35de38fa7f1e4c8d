import numpy as np
import pytest

from dmcprune.core import Channel, validate_channel

# rows are permutations of one multiset, so conditional entropies agree
FOUR_ROW_CHANNEL = [
    [0.6, 0.2, 0.1, 0.1],
    [0.6, 0.1, 0.1, 0.2],
    [0.6, 0.1, 0.2, 0.1],
    [0.1, 0.6, 0.1, 0.2],
]


@pytest.fixture
def four_row_channel() -> Channel:
    return validate_channel(FOUR_ROW_CHANNEL)


@pytest.fixture
def bsc01() -> Channel:
    return validate_channel([[0.9, 0.1], [0.1, 0.9]])


def random_channel(rng: np.random.Generator, m: int, n: int,
                   alpha: float = 1.0, eps: float = 0.0) -> Channel:
    rows = rng.dirichlet(np.full(n, alpha), size=m)
    if eps:
        rows = (rows + eps) / (1.0 + n * eps)
    return Channel(rows)


def random_distribution(rng: np.random.Generator, n: int, alpha: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(n, alpha))
