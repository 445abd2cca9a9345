"""Shared fixtures: the three shipped network configs and a 3-variable chain."""

from pathlib import Path

import numpy as np
import pytest

from cknet import LinearSCM
from cknet.config import load_config

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def make_chain3() -> LinearSCM:
    """X1 -> X2 -> X3 with coefficients 2 and 3, standard-normal noise."""
    return LinearSCM(
        variables=("X1", "X2", "X3"),
        coeffs=np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 3.0, 0.0]]),
        noise_mean=np.zeros(3),
        noise_var=np.ones(3),
    )


@pytest.fixture
def chain3() -> LinearSCM:
    return make_chain3()


@pytest.fixture(scope="session")
def chain_abc_path() -> Path:
    return FIXTURES / "chain_abc.json"


@pytest.fixture(scope="session")
def search_pair_path() -> Path:
    return FIXTURES / "search_pair.json"


@pytest.fixture(scope="session")
def cycle4_path() -> Path:
    return FIXTURES / "cycle4.json"


@pytest.fixture(scope="session")
def chain_abc(chain_abc_path):
    sheaf, scenarios = load_config(str(chain_abc_path))
    return sheaf, scenarios


@pytest.fixture(scope="session")
def search_pair(search_pair_path):
    sheaf, scenarios = load_config(str(search_pair_path))
    return sheaf, scenarios


@pytest.fixture(scope="session")
def cycle4(cycle4_path):
    sheaf, scenarios = load_config(str(cycle4_path))
    return sheaf, scenarios


def random_mixture(rng: np.random.Generator, dim: int, max_components: int = 3):
    """Random PSD-component mixture used across property tests."""
    from cknet import GaussianComponent, GaussianMixture

    k = int(rng.integers(1, max_components + 1))
    comps = []
    for _ in range(k):
        mean = rng.normal(size=dim)
        B = rng.normal(size=(dim, dim))
        cov = B @ B.T
        comps.append(GaussianComponent(mean, cov))
    w = rng.uniform(0.1, 1.0, size=k)
    return GaussianMixture(tuple(comps), w / w.sum())


def random_dag_scm(rng: np.random.Generator, n: int) -> LinearSCM:
    """Random linear DAG with dense-ish lower-triangular coefficients."""
    names = tuple(f"V{i}" for i in range(n))
    C = np.zeros((n, n))
    for i in range(1, n):
        for j in range(i):
            if rng.uniform() < 0.6:
                C[i, j] = rng.normal()
    return LinearSCM(
        variables=names,
        coeffs=C,
        noise_mean=rng.normal(size=n),
        noise_var=rng.uniform(0.2, 3.0, size=n),
    )
