import numpy as np
import pytest

import sublex as sx


@pytest.fixture(scope="session")
def theta_star() -> sx.AmbiguitySet:
    return sx.canonical_set()


@pytest.fixture(scope="session")
def coin() -> sx.AmbiguitySet:
    """Single-measure fair +-1 coin: the classical degenerate case."""
    return sx.AmbiguitySet.from_rows((-1.0, 1.0), ((0.5, 0.5),))


@pytest.fixture(scope="session")
def cp_cache():
    """G-normal absolute moments for the canonical variance interval (0.5, 1),
    solved once per session."""
    params = sx.GNormalParams(0.5, 1.0)
    cache: dict[float, sx.GExpectationResult] = {}

    def get(p: float) -> sx.GExpectationResult:
        if p not in cache:
            cache[p] = sx.g_expectation(lambda x: np.abs(x) ** p, params)
        return cache[p]

    return get


def random_ambiguity(rng: np.random.Generator, max_atoms: int = 5, max_measures: int = 4):
    n_atoms = int(rng.integers(2, max_atoms + 1))
    atoms = np.cumsum(0.2 + rng.random(n_atoms)) - 1.5
    rows = []
    for _ in range(int(rng.integers(1, max_measures + 1))):
        w = rng.random(n_atoms) + 1e-3
        rows.append(w / w.sum())
    return sx.AmbiguitySet.from_rows(atoms, rows)


def random_mean_zero_ambiguity(rng: np.random.Generator, max_measures: int = 3):
    """Atoms {-a, 0, b} with weights balanced to a common zero mean."""
    a = 0.3 + rng.random()
    b = 0.3 + rng.random()
    rows = []
    for _ in range(int(rng.integers(1, max_measures + 1))):
        u = 0.05 + 0.9 * rng.random()
        w_plus = u * a / (a + b)
        w_minus = u * b / (a + b)
        rows.append((w_minus, 1.0 - w_plus - w_minus, w_plus))
    return sx.AmbiguitySet.from_rows((-a, 0.0, b), rows)
