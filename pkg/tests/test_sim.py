import itertools

import numpy as np
import pytest
from scipy.special import logsumexp

from council_weights.errors import GuardExceeded, ValidationError
from council_weights.model import GroupSizes, ModelSpec, build_coupling
from council_weights.sim import (ChainConfig, MarginSamples, batch_means, council_vote, democracy_deficit,
                                 estimate_moments, exact_margin_distribution, exact_moments, gibbs_sample,
                                 verify_optimality)
from conftest import make_spec


def brute_force_moments(spec):
    """Moments by summing over every spin configuration with H built voter by voter."""
    sizes = spec.sizes.finite_sizes
    group = np.repeat(np.arange(len(sizes)), sizes)
    J = spec.coupling.entries
    N = np.array(sizes, dtype=float)
    X = np.array(list(itertools.product((-1, 1), repeat=len(group))), dtype=float)
    S = np.stack([X[:, group == l].sum(axis=1) for l in range(len(sizes))], axis=1)
    minus_H = 0.5 * np.einsum("kl,lm,km->k", S, J / np.sqrt(np.outer(N, N)), S)
    p = np.exp(minus_H - logsumexp(minus_H))
    chi = np.where(S > 0, 1.0, -1.0)
    return (np.einsum("k,kl,km->lm", p, chi, chi), np.einsum("k,kl,km->lm", p, chi, S),
            np.einsum("k,kl,km->lm", p, S, S))


@pytest.mark.parametrize("family, params, sizes", [
    ("homogeneous", {"beta": 0.3}, (3, 4)),
    ("hostile", {"j0": 0.6, "jbar": 0.2}, (4, 3)),
    ("two_cluster", {"j0": 0.4, "jbar": 0.2, "M1": 2, "M2": 1}, (3, 2, 2)),
    ("uniform", {"j0": 1.5, "jbar": 0.5}, (4, 4)),
])
def test_exact_enumeration_matches_brute_force(family, params, sizes):
    spec = make_spec(family, params, sizes)
    stats = exact_moments(spec)
    cc, cs, ss = brute_force_moments(spec)
    assert np.allclose(stats.chi_corr, cc, atol=1e-12)
    assert np.allclose(stats.chi_S, cs, atol=1e-12)
    assert np.allclose(stats.S_second, ss, atol=1e-11)


def test_distribution_is_normalized_and_symmetric():
    dist = exact_margin_distribution(make_spec("uniform", {"j0": 0.3, "jbar": 0.1}, (5, 4)))
    assert dist.probabilities.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(dist.probabilities, dist.probabilities[::-1, ::-1], atol=1e-15)
    pats = dist.council_pattern_probabilities()
    assert pats.shape == (2, 2) and pats.sum() == pytest.approx(1.0)


def test_guard():
    spec = make_spec("homogeneous", {"beta": 0.1}, (100, 100))
    with pytest.raises(GuardExceeded):
        exact_margin_distribution(spec, guard=1000)


def test_ties_count_as_minus_one():
    assert council_vote(np.array([0, 2, -2])).tolist() == [-1, 1, -1]


def test_exact_deficit_matches_direct_sum():
    spec = make_spec("hostile", {"j0": 0.6, "jbar": 0.2}, (4, 3))
    dist = exact_margin_distribution(spec)
    w = np.array([0.7, 0.4])
    sigma = np.sqrt(7)
    direct = sum(p * (sum(S) / sigma - w @ np.where(np.array(S) > 0, 1, -1)) ** 2 for S, p in dist.support())
    assert democracy_deficit(dist, w, sigma) == pytest.approx(direct, rel=1e-12)
    assert democracy_deficit(exact_moments(dist), w, sigma) == pytest.approx(direct, rel=1e-12)


def test_normal_equation_weights_are_optimal(small_specs):
    for spec in small_specs.values():
        stats = exact_moments(spec)
        sigma = np.sqrt(spec.sizes.N)
        w = stats.normal_equation_weights(sigma)
        rep = verify_optimality(stats, w, sigma, n_perturbations=100, magnitude=0.05, seed=1)
        assert rep.improved == 0 and rep.min_change > 0


def test_chain_config_validation():
    with pytest.raises(ValidationError):
        ChainConfig(sweeps=10, burn_in=10)
    with pytest.raises(ValidationError):
        ChainConfig(sweeps=10, thinning=0)
    with pytest.raises(ValidationError):
        ChainConfig(sweeps=10, seed=-1)


def test_sampling_layout_and_determinism():
    spec = make_spec("uniform", {"j0": 0.3, "jbar": 0.1}, (5, 4))
    cfg = ChainConfig(sweeps=300, burn_in=100, thinning=4, seed=9, chains=3)
    a = gibbs_sample(spec, cfg)
    b = gibbs_sample(spec, cfg, workers=1)
    assert np.array_equal(a.margins, b.margins)
    assert len(a) == 3 * 50
    assert a.sweep[:3].tolist() == [104, 108, 112]
    assert np.all(np.abs(a.margins[:, 0]) <= 5) and np.all(a.margins[:, 0] % 2 == 1)
    csv = a.to_csv().splitlines()
    assert csv[0] == "chain,sweep,S1,S2" and len(csv) == 151
    c = gibbs_sample(spec, ChainConfig(sweeps=300, burn_in=100, thinning=4, seed=10, chains=3))
    assert not np.array_equal(a.margins, c.margins)
    # chain c of seed s is chain 0 of seed s + c
    d = gibbs_sample(spec, ChainConfig(sweeps=300, burn_in=100, thinning=4, seed=10, chains=1))
    assert np.array_equal(a.per_chain(1), d.per_chain(0))


def test_mcmc_agrees_with_exact(small_specs):
    for name, spec in small_specs.items():
        exact = exact_moments(spec)
        samples = gibbs_sample(spec, ChainConfig(sweeps=40_000, burn_in=1000, seed=3, chains=2))
        est = estimate_moments(samples)
        for key in ("chi_corr", "chi_S", "S_second"):
            err = np.abs(getattr(est, key) - getattr(exact, key))
            se = est.std_errors[key]
            assert np.all(err <= 4 * se + 1e-12), (name, key)


def test_batch_means():
    x = np.arange(640, dtype=float)
    mean, se = batch_means(x)
    assert mean == pytest.approx(319.5)
    assert se > 0
    with pytest.raises(ValidationError):
        batch_means(np.ones(10))


def test_sample_deficit_and_verify():
    spec = make_spec("homogeneous", {"beta": 0.2}, (9, 9))
    sigma = np.sqrt(18)
    samples = gibbs_sample(spec, ChainConfig(sweeps=20_000, burn_in=500, seed=4))
    exact = exact_moments(spec)
    w = exact.normal_equation_weights(sigma)
    d, se = democracy_deficit(samples, w, sigma)
    assert abs(d - democracy_deficit(exact, w, sigma)) < 4 * se
    rep = verify_optimality(samples, w, sigma, n_perturbations=50, seed=2)
    assert rep.deficit_se is not None and rep.n_perturbations == 50
    stats = estimate_moments(samples, sigma, w)
    assert stats.deficit == pytest.approx(d)


def test_requires_finite_sizes():
    spec = ModelSpec(GroupSizes((0.5, 0.5)), build_coupling("homogeneous", {"beta": 0.1}, 2))
    with pytest.raises(ValidationError):
        exact_moments(spec)


from hypothesis import given, settings, strategies as st


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=2))
def test_no_weights_beat_normal_equations(w):
    spec = make_spec("uniform", {"j0": 0.3, "jbar": 0.1}, (6, 5))
    stats = exact_moments(spec)
    sigma = np.sqrt(11)
    best = democracy_deficit(stats, stats.normal_equation_weights(sigma), sigma)
    assert democracy_deficit(stats, np.array(w), sigma) >= best - 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.45), st.integers(2, 6))
def test_exchangeable_groups_have_symmetric_moments(beta, n):
    stats = exact_moments(make_spec("homogeneous", {"beta": beta}, (n, n)))
    assert np.allclose(stats.chi_S, stats.chi_S[::-1, ::-1], atol=1e-12)
    assert abs(stats.chi_corr[0, 1]) <= 1.0
