import numpy as np
import pytest
from hypothesis import settings

from heatlab.tensor_core import MetricJet

settings.register_profile("heatlab", max_examples=40, deadline=None)
settings.load_profile("heatlab")


def symmetrize_derivs(arr, k):
    """Symmetrize the trailing k derivative axes and the leading (i, j) pair."""
    import itertools

    out = np.zeros_like(arr)
    perms = list(itertools.permutations(range(k)))
    for p in perms:
        out += np.transpose(arr, (0, 1) + tuple(2 + q for q in p))
    out /= len(perms)
    return 0.5 * (out + np.swapaxes(out, 0, 1))


def random_metric_jet(rng, m, order=2, scale=0.3):
    a = rng.normal(size=(m, m))
    g = a @ a.T + m * np.eye(m)
    jets = [g]
    for k in range(1, order + 1):
        jets.append(symmetrize_derivs(scale * rng.normal(size=(m, m) + (m,) * k), k))
    return MetricJet(*jets)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
