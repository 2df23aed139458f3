import itertools
import math

import numpy as np
import pytest

import gibbs_stein as gs
from gibbs_stein.size_bias import bernoulli_convolution

RNG = np.random.default_rng(31415)


def enumerate_sum_law(p):
    """Brute-force law of a Bernoulli sum over all configurations."""
    n = len(p)
    law = np.zeros(n + 1)
    for bits in itertools.product((0, 1), repeat=n):
        pr = math.prod(p[i] if b else 1 - p[i] for i, b in enumerate(bits))
        law[sum(bits)] += pr
    return law


def test_size_bias_simple_table():
    out = gs.size_bias(np.array([0.5, 0.25, 0.25]))
    assert np.allclose(out.biased, [0.0, 1 / 3, 2 / 3], atol=1e-15)
    assert out.mean == pytest.approx(0.75)


def test_size_bias_poisson_is_shift():
    m = gs.poisson(2.0)
    biased = gs.size_bias(m.pmf).biased
    assert np.max(np.abs(biased[1:] - m.pmf[:-1])) <= 1e-12


def test_size_bias_bernoulli_is_point_mass():
    for p in (0.1, 0.5, 1.0):
        biased = gs.size_bias(np.array([1 - p, p])).biased
        assert biased[1] == pytest.approx(1.0, abs=1e-15)


def test_size_bias_rejects_zero_mean():
    with pytest.raises(ValueError, match="positive mean"):
        gs.size_bias(np.array([1.0]))


def test_size_bias_identity_random_f():
    for base in (gs.poisson(1.0).pmf, gs.binomial(7, 0.4).pmf, RNG.dirichlet(np.ones(9))):
        law = gs.size_bias(base)
        k = np.arange(base.size)
        for _ in range(50):
            f = RNG.uniform(0.0, 1.0, base.size)
            lhs = float(np.sum(k * base * f))
            rhs = law.mean * float(np.sum(law.biased * f))
            assert abs(lhs - rhs) <= 1e-12


def test_size_bias_stochastically_dominates_base():
    for base in (gs.poisson(1.5).pmf, RNG.dirichlet(np.ones(12))):
        law = gs.size_bias(base)
        for k in range(base.size):
            assert law.biased[k:].sum() >= law.base[k:].sum() - 1e-12


# ---------------------------------------------------------------------------
# coupling specifications and the sum construction
# ---------------------------------------------------------------------------

def test_sum_size_bias_two_fair_coins():
    spec = gs.CouplingSpec.independent_bernoulli([0.5, 0.5])
    assert np.allclose(gs.sum_size_bias(spec), [0.0, 0.5, 0.5], atol=1e-15)


def test_sum_size_bias_single_variable_is_point_mass():
    spec = gs.CouplingSpec.independent_bernoulli([0.37])
    assert np.allclose(gs.sum_size_bias(spec), [0.0, 1.0], atol=1e-15)


def test_sum_size_bias_iid_shifts_to_smaller_binomial():
    n, p = 7, 0.3
    spec = gs.CouplingSpec.independent_bernoulli([p] * n)
    star = gs.sum_size_bias(spec)
    expected = bernoulli_convolution([p] * (n - 1))
    assert np.max(np.abs(star[1:] - expected)) <= 1e-12


def test_sum_size_bias_equals_size_biased_sum_by_enumeration():
    for trial in range(5):
        n = int(RNG.integers(2, 9))
        p = RNG.uniform(0.05, 0.95, n)
        spec = gs.CouplingSpec.independent_bernoulli(p)
        direct = gs.size_bias(enumerate_sum_law(p)).biased
        assert np.max(np.abs(gs.sum_size_bias(spec) - direct)) <= 1e-12


def test_dependent_configurations_roundtrip():
    # a correlated pair: both coordinates forced equal
    configs = [((0, 0), 0.6), ((1, 1), 0.4)]
    spec = gs.CouplingSpec.from_configurations(configs)
    assert not spec.independent
    assert np.allclose(spec.p, [0.4, 0.4])
    # given X_i = 1 the other is 1, so the leftover sum is always 1
    assert np.allclose(spec.conditional_sums, [[0.0, 1.0], [0.0, 1.0]])
    assert np.allclose(spec.sum_law(), [0.6, 0.0, 0.4])
    star = gs.sum_size_bias(spec)
    assert np.allclose(star, gs.size_bias(np.array([0.6, 0.0, 0.4])).biased, atol=1e-14)


def test_inconsistent_conditionals_flagged():
    # conditional tables whose implied sum law would need negative mass at 0
    p = np.array([0.9, 0.9])
    cond = np.array([[1.0, 0.0], [1.0, 0.0]])  # claims the other is always 0
    spec = gs.CouplingSpec(p, conditional_sums=cond)
    with pytest.raises(ValueError, match="inconsistent"):
        spec.sum_law()


def test_independent_flag_cross_checks_tables():
    p = [0.5, 0.5]
    wrong = np.array([[0.2, 0.8], [0.5, 0.5]])
    with pytest.raises(ValueError, match="independence"):
        gs.CouplingSpec(np.array(p), conditional_sums=wrong, independent=True)


def test_spec_validation():
    with pytest.raises(ValueError):
        gs.CouplingSpec.independent_bernoulli([0.0, 0.0])
    with pytest.raises(ValueError):
        gs.CouplingSpec.independent_bernoulli([1.2])
    with pytest.raises(ValueError, match="conditional"):
        gs.CouplingSpec(np.array([0.5, 0.5]), conditional_sums=None)


def test_spec_json_ingestion():
    spec = gs.CouplingSpec.from_dict({"p": [0.2, 0.3], "independent": True})
    assert spec.independent
    spec2 = gs.CouplingSpec.from_dict(
        {"p": [0.4, 0.4], "conditional_sums": [[0.0, 1.0], [0.0, 1.0]]}
    )
    assert not spec2.independent
    spec3 = gs.CouplingSpec.from_dict(
        {"configurations": [{"bits": [0, 0], "prob": 0.6}, {"bits": [1, 1], "prob": 0.4}]}
    )
    assert np.allclose(spec3.p, [0.4, 0.4])


def test_mean_abs_gap_perfect_coupling():
    p = [0.3, 0.6, 0.1]
    spec = gs.CouplingSpec.independent_bernoulli(p)
    for i, pi in enumerate(p):
        assert spec.mean_abs_gap(i) == pytest.approx(pi)


# ---------------------------------------------------------------------------
# rate-weighted residual
# ---------------------------------------------------------------------------

def test_residual_zero_for_target_law():
    m = gs.poisson(1.0, truncation=30)
    star = gs.size_bias(m.pmf).biased
    f = RNG.uniform(0.0, 1.0, 31)
    assert abs(gs.stein_residual_via_size_bias(m, m.pmf, star, f)) <= 1e-10


def test_residual_zero_for_constant_f():
    m = gs.poisson(1.5, truncation=25)
    W = gs.binomial(5, 0.3).pmf
    Wstar = gs.size_bias(W).biased
    f = np.full(26, 0.4)
    assert abs(gs.stein_residual_via_size_bias(m, W, Wstar, f)) <= 1e-12


def test_residual_matches_direct_gap_with_matched_mean():
    # Binomial(5, 0.3) against a Poisson(1.5) target: the rate-weighted mean
    # equals the plain mean, so the residual is exactly Ef(W) - mu(f)
    m = gs.poisson(1.5, truncation=30)
    W = gs.binomial(5, 0.3).pmf
    Wstar = gs.size_bias(W).biased
    f = np.zeros(31)
    f[0] = f[1] = 1.0
    value = gs.stein_residual_via_size_bias(m, W, Wstar, f)
    direct = float(W[0] + W[1]) - float(m.pmf[0] + m.pmf[1])
    assert value == pytest.approx(direct, abs=1e-10)


def test_residual_rejects_bad_star_law():
    m = gs.poisson(1.0, truncation=20)
    W = gs.binomial(5, 0.3).pmf
    with pytest.raises(ValueError, match="probability"):
        gs.stein_residual_via_size_bias(m, W, np.array([0.5, 0.2]), np.zeros(21))
