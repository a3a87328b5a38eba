import numpy as np
import pytest

from council_weights.model import GroupSizes, ModelSpec, build_coupling


def make_spec(family, params, sizes, M=None):
    sizes = tuple(int(n) for n in sizes)
    N = sum(sizes)
    alphas = tuple(n / N for n in sizes)
    # make the fractions sum to one exactly
    alphas = alphas[:-1] + (1.0 - sum(alphas[:-1]),)
    return ModelSpec(GroupSizes(alphas, sizes), build_coupling(family, params, M or len(sizes)))


@pytest.fixture
def small_specs():
    return {
        "homogeneous": make_spec("homogeneous", {"beta": 0.2}, (9, 9)),
        "uniform": make_spec("uniform", {"j0": 0.3, "jbar": 0.1}, (9, 9)),
        "hostile": make_spec("hostile", {"j0": 0.6, "jbar": 0.2}, (9, 9)),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
