import numpy as np
import pytest

from swstream.info_core import JointDistribution


@pytest.fixture
def example1():
    """Symmetric binary pair with uniform marginals."""
    return JointDistribution.from_matrix([[0.45, 0.05], [0.05, 0.45]])


@pytest.fixture
def example2():
    """Skewed binary pair."""
    return JointDistribution.from_matrix([[0.1, 0.05], [0.05, 0.8]])


def random_joint(rng, ax, ay, floor=0.04):
    """Full-support random joint distribution; the floor keeps every cell
    bounded away from zero so grid oracles stay well-conditioned."""
    p = rng.dirichlet(np.ones(ax * ay)) + floor
    p /= p.sum()
    return JointDistribution.from_matrix(p.reshape(ax, ay))


def random_corpus(seed, count, max_size=3):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        ax = int(rng.integers(2, max_size + 1))
        ay = int(rng.integers(2, max_size + 1))
        out.append(random_joint(rng, ax, ay))
    return out
