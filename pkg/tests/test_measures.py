import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import hypergeom, nbinom

import gibbs_stein as gs


def test_from_pmf_normalizes_simple_table():
    m = gs.from_pmf(np.array([1.0, 1.0, 0.5]), omega=1.0)
    assert np.allclose(m.pmf, [0.4, 0.4, 0.2], atol=1e-12)


def test_from_pmf_rejects_degenerate_support():
    with pytest.raises(ValueError, match="non-contiguous or degenerate"):
        gs.from_pmf(np.array([1.0, 0.0, 0.5]))
    with pytest.raises(ValueError, match="non-contiguous or degenerate"):
        gs.from_pmf(np.array([1.0, -0.1, 0.5]))
    with pytest.raises(ValueError):
        gs.from_pmf(np.array([]))


def test_poisson_uses_flat_potential_and_activity_lambda():
    lam = 2.5
    m = gs.poisson(lam, truncation=40)
    assert m.omega == lam
    assert np.allclose(m.V, -lam)
    # pmf equals the Poisson weights renormalized over the window
    k = np.arange(41)
    factorials = np.array([float(math.factorial(int(j))) for j in k])
    ref = np.exp(-lam) * lam ** k.astype(float) / factorials
    assert np.allclose(m.pmf, ref / ref.sum(), atol=1e-14)


def test_geometric_truncation_matches_series_oracle():
    # geometric series oracle: pmf(k) = 0.4*0.6^k / (1 - 0.6^51), tail 0.6^51
    p, n = 0.4, 50
    m = gs.geometric(p, truncation=n)
    q = 1.0 - p
    norm = 1.0 - q ** (n + 1)
    ref = p * q ** np.arange(n + 1) / norm
    assert np.allclose(m.pmf, ref, atol=1e-15)
    assert m.truncation.tail_mass == pytest.approx(q ** (n + 1), rel=1e-12)


def test_default_truncation_tail_below_tolerance():
    for m in (gs.poisson(5.0), gs.geometric(0.25), gs.negative_binomial(2.0, 0.4)):
        assert m.truncation.tail_mass <= 1e-14


def test_builtin_dispatch_and_param_validation():
    assert gs.builtin("discrete_uniform", 3).pmf == pytest.approx([0.25] * 4)
    with pytest.raises(ValueError):
        gs.poisson(-1.0)
    with pytest.raises(ValueError):
        gs.geometric(1.0)
    with pytest.raises(ValueError):
        gs.binomial(0, 0.5)
    with pytest.raises(ValueError):
        gs.builtin("cauchy", 1.0)


def test_negative_binomial_matches_scipy_weights():
    r, p = 2.5, 0.45
    m = gs.negative_binomial(r, p, truncation=60)
    k = np.arange(61)
    ref = nbinom.pmf(k, r, p)
    assert np.allclose(m.pmf, ref / ref.sum(), atol=1e-13)


def test_hypergeometric_matches_scipy_and_rejects_shifted_support():
    m = gs.hypergeometric(20, 6, 7)
    k = np.arange(m.support_max + 1)
    ref = hypergeom.pmf(k, 20, 6, 7)
    assert np.allclose(m.pmf, ref, atol=1e-12)
    with pytest.raises(ValueError, match="non-contiguous"):
        gs.hypergeometric(10, 6, 7)  # zero successes unreachable


def test_binomial_birth_rates():
    m = gs.binomial(10, 0.3)
    for k in range(10):
        assert m.birth_rate(k) == pytest.approx(0.3 * (10 - k) / 0.7, rel=1e-12)
    assert m.birth_rate(10) == 0.0


def test_geometric_birth_rates():
    m = gs.geometric(0.5)
    for k in range(0, 20):
        assert m.birth_rate(k) == pytest.approx(0.5 * (k + 1), rel=1e-12)


def test_poisson_birth_rates_constant():
    m = gs.poisson(2.0)
    assert np.allclose(m.birth_rates[:-1], 2.0, rtol=1e-13)


def test_detailed_balance_identity():
    for m in (gs.poisson(1.0), gs.binomial(10, 0.5), gs.geometric(0.4),
              gs.discrete_uniform(6), gs.hypergeometric(20, 6, 7)):
        for k in range(m.support_max):
            lhs = m.pmf[k] * m.birth_rate(k)
            rhs = m.pmf[k + 1] * m.death_rate(k + 1)
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_pmf_recursion_through_rates():
    for m in (gs.poisson(3.0), gs.binomial(8, 0.25), gs.negative_binomial(2.0, 0.5)):
        for k in range(m.support_max):
            assert m.pmf[k + 1] == pytest.approx(
                m.pmf[k] * m.birth_rate(k) / (k + 1), rel=1e-12
            )


def test_rate_domain_validation():
    m = gs.poisson(1.0, truncation=10)
    with pytest.raises(ValueError):
        m.birth_rate(11)
    with pytest.raises(ValueError):
        m.death_rate(0)


def test_mean_two_ways_poisson():
    m = gs.poisson(3.0, truncation=60)
    assert m.mean() == pytest.approx(3.0, abs=1e-10)
    assert m.mean_via_rates() == pytest.approx(m.mean(), abs=1e-10)


def test_mean_two_ways_geometric():
    m = gs.geometric(0.5, truncation=80)
    assert m.mean() == pytest.approx(1.0, abs=1e-10)
    assert m.mean_via_rates() == pytest.approx(m.mean(), abs=1e-10)


def test_expectation_of_one_is_one():
    m = gs.binomial(6, 0.3)
    assert m.expectation(np.ones(7)) == pytest.approx(1.0, abs=1e-12)


def test_cumulative_tables_invariants():
    for m in (gs.poisson(2.0), gs.geometric(0.3), gs.discrete_uniform(9)):
        t = m.cumulatives()
        assert t.F[-1] == pytest.approx(1.0, abs=1e-12)
        assert t.Fbar[0] == pytest.approx(1.0, abs=1e-12)
        for k in range(m.support_max):
            assert t.F[k] + t.Fbar[k + 1] == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    weights=st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=2, max_size=25),
    omega=st.floats(min_value=0.1, max_value=10.0),
    alpha=st.sampled_from([0.1, 2.0, 10.0]),
)
def test_reparametrization_leaves_everything_invariant(weights, omega, alpha):
    m = gs.from_pmf(np.array(weights), omega=omega)
    m2 = m.reparametrized(alpha)
    assert np.max(np.abs(m2.pmf - m.pmf)) <= 1e-12
    assert np.max(np.abs(m2.birth_rates - m.birth_rates)) <= 1e-12 * max(1.0, m.birth_rates.max())
    t, t2 = m.cumulatives(), m2.cumulatives()
    assert np.max(np.abs(t.F - t2.F)) <= 1e-12
    assert np.max(np.abs(t.Fbar - t2.Fbar)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(weights=st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=30))
def test_from_pmf_roundtrip_identity(weights):
    m = gs.from_pmf(np.array(weights), omega=2.0)
    again = gs.from_pmf(m.pmf, omega=2.0)
    assert np.max(np.abs(again.pmf - m.pmf)) <= 1e-12


def test_serialization_roundtrip_is_value_exact():
    m = gs.geometric(0.37)
    payload = m.to_json()
    m2 = gs.GibbsMeasure.from_json(payload)
    assert m2.omega == m.omega
    assert np.array_equal(m2.V, m.V)
    assert np.array_equal(m2.pmf, m.pmf)
    assert m2.truncation == m.truncation
    # emitted decimals parse back to the same doubles
    raw = json.loads(payload)
    assert raw["omega"] == m.omega
    assert all(a == b for a, b in zip(raw["V"], m.V.tolist()))


def test_measure_is_immutable():
    m = gs.poisson(1.0, truncation=5)
    with pytest.raises(AttributeError):
        m.omega = 2.0
    with pytest.raises(ValueError):
        m.pmf[0] = 0.5


def test_restricted_is_conditioned_law():
    m = gs.poisson(1.0, truncation=20)
    cond = m.restricted(2)
    assert cond.support_max == 2
    expected = m.pmf[:3] / m.pmf[:3].sum()
    assert np.allclose(cond.pmf, expected, atol=1e-14)
    # same birth rates on the shared range (except the boundary)
    assert cond.birth_rate(0) == pytest.approx(m.birth_rate(0), rel=1e-12)
    assert cond.birth_rate(1) == pytest.approx(m.birth_rate(1), rel=1e-12)


def test_overwide_truncation_rejected_at_construction():
    with pytest.raises(ValueError, match="underflows"):
        gs.poisson(0.5, truncation=400)
