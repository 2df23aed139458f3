import math
from fractions import Fraction

import numpy as np
import pytest

import gibbs_stein as gs
from gibbs_stein.stein import (
    extremal_indicator,
    increment_coefficients,
    solution_coefficients,
    stationarity_defect,
)

RNG = np.random.default_rng(20240817)

MEASURES = [
    gs.poisson(1.0),
    gs.poisson(5.0),
    gs.binomial(10, 0.3),
    gs.geometric(0.4),
    gs.discrete_uniform(8),
    gs.negative_binomial(2.0, 0.45),
    gs.hypergeometric(20, 6, 7),
]


def test_constant_test_function_gives_zero_solution():
    m = gs.poisson(2.0)
    sol = gs.solve(m, gs.TestFunction.constant(0.7, m.support_max + 1))
    assert np.max(np.abs(sol.g)) <= 1e-14


def test_point_indicator_value_at_one():
    # forward recursion with only the k=0 term: g(1) = pmf(0)(1 - pmf(0))/pmf(1)
    m = gs.poisson(1.0, truncation=40)
    sol = gs.solve(m, gs.TestFunction.indicator([0], 41))
    assert sol.g[1] == pytest.approx(1.0 - math.exp(-1.0), abs=1e-12)


def test_residual_identity_random_f():
    for m in MEASURES:
        for _ in range(20):
            f = RNG.uniform(0.0, 1.0, m.support_max + 1)
            sol = gs.solve(m, f)
            worst = max(abs(sol.residual(k)) for k in range(m.support_max + 1))
            assert worst <= 1e-10


def test_boundary_values():
    m = gs.binomial(6, 0.4)
    f = RNG.uniform(0.0, 1.0, 7)
    sol = gs.solve(m, f)
    assert sol.g[0] == 0.0
    assert sol.g[m.support_max + 1] == 0.0


def _rational_solution(pmf, f, forward):
    """Exact-arithmetic version of the two partial-sum forms.

    With the weighted mean taken exactly, the forward and backward forms are
    the same rational number at every index.
    """
    pmf = [Fraction(x) for x in pmf]
    f = [Fraction(x) for x in f]
    total = sum(pmf)
    mu_f = sum(p * v for p, v in zip(pmf, f)) / total
    terms = [p * (v - mu_f) for p, v in zip(pmf, f)]
    n = len(pmf) - 1
    g = [Fraction(0)] * (n + 2)
    for j in range(n):
        if forward:
            s = sum(terms[: j + 1])
            g[j + 1] = s / ((j + 1) * pmf[j + 1])
        else:
            t = sum(terms[j + 1 :])
            g[j + 1] = -t / ((j + 1) * pmf[j + 1])
    return g


def test_forward_backward_agree_exactly_in_rational_arithmetic():
    pmf = [0.3, 0.25, 0.2, 0.15, 0.1]
    f = [1.0, 0.0, 0.5, 0.25, 0.75]
    gf = _rational_solution(pmf, f, forward=True)
    gb = _rational_solution(pmf, f, forward=False)
    assert gf == gb


def test_solver_matches_rational_oracle():
    weights = [0.3, 0.25, 0.2, 0.15, 0.1]
    m = gs.from_pmf(np.array(weights))
    f = np.array([1.0, 0.0, 0.5, 0.25, 0.75])
    oracle = _rational_solution(m.pmf, f, forward=True)
    sol = gs.solve(m, f)
    for j in range(m.support_max + 2):
        assert sol.g[j] == pytest.approx(float(oracle[j]), abs=1e-13)


def test_forward_backward_agree_in_well_conditioned_region():
    # pointwise in doubles the comparison is meaningful where j*pmf(j) is not
    # rounding-level small; the exact identity is covered by the rational oracle
    for m in (gs.poisson(2.0), gs.geometric(0.5)):
        f = RNG.uniform(0.0, 1.0, m.support_max + 1)
        gf = gs.solve(m, f, method="forward").g
        gb = gs.solve(m, f, method="backward").g
        for j in range(1, m.support_max + 1):
            if j * m.pmf[j] >= 1e-5:
                assert abs(gf[j] - gb[j]) <= 1e-10 * max(1.0, abs(gf[j]))


def test_solution_is_linear_in_f():
    m = gs.poisson(1.5)
    f1 = RNG.uniform(0.0, 1.0, m.support_max + 1)
    f2 = RNG.uniform(0.0, 1.0, m.support_max + 1)
    for alpha in (0.0, 0.25, 0.5, 0.9, 1.0):
        mix = gs.solve(m, alpha * f1 + (1 - alpha) * f2).g
        combo = alpha * gs.solve(m, f1).g + (1 - alpha) * gs.solve(m, f2).g
        assert np.max(np.abs(mix - combo)) <= 1e-12


def test_stationarity_characterization_on_bounded_g():
    # E[Ag(Z)] = 0 for arbitrary bounded g (checked on bounded tables; the
    # full class with E|Z g(Z)| finite is not representable here)
    for m in MEASURES:
        for _ in range(20):
            g = RNG.uniform(-1.0, 1.0, m.support_max + 2)
            assert abs(stationarity_defect(m, g)) <= 1e-10


def test_apply_generator_basics():
    m = gs.poisson(2.0, truncation=30)
    zeros = np.zeros(m.support_max + 2)
    for k in (0, 3, 30):
        assert gs.apply_generator(m, zeros, k) == 0.0
    f = RNG.uniform(0.0, 1.0, 31)
    sol = gs.solve(m, f)
    for k in range(31):
        assert gs.apply_generator(m, sol.g, k) == pytest.approx(f[k] - sol.mu_f, abs=1e-11)
    with pytest.raises(ValueError):
        gs.apply_generator(m, sol.g, 31)
    with pytest.raises(ValueError):
        gs.apply_generator(m, sol.g, -1)


def test_length_mismatch_rejected():
    m = gs.poisson(1.0, truncation=10)
    with pytest.raises(ValueError, match="length"):
        gs.solve(m, np.zeros(5))


# ---------------------------------------------------------------------------
# extended solutions
# ---------------------------------------------------------------------------

def test_extended_zero_function():
    m = gs.poisson(1.0, truncation=6)
    sol = gs.solve_extended(m, np.zeros(15), domain_max=14)
    assert np.max(np.abs(sol.g)) == 0.0


def test_extended_requires_vanishing_tail():
    m = gs.poisson(1.0, truncation=6)
    bad = np.zeros(15)
    bad[10] = 0.3
    with pytest.raises(ValueError, match="B0"):
        gs.solve_extended(m, bad, domain_max=14)


def test_extended_boundary_step_identity():
    # g(n+1) - g(n) = (1/n)(f(n) - mu(f)/(n+1))
    m = gs.binomial(5, 0.4)
    n = m.support_max
    f = np.zeros(12)
    f[: n + 1] = RNG.uniform(0.0, 1.0, n + 1)
    sol = gs.solve_extended(m, f, domain_max=11)
    step = sol.g[n + 1] - sol.g[n]
    assert step == pytest.approx((f[n] - sol.mu_f / (n + 1)) / n, abs=1e-12)


def test_extended_tail_values_and_residuals():
    m = gs.poisson(1.0, truncation=5)
    n = m.support_max
    f = np.zeros(16)
    f[: n + 1] = RNG.uniform(0.0, 1.0, n + 1)
    sol = gs.solve_extended(m, f, domain_max=15)
    for j in range(n + 1, 16):
        assert sol.g[j] == pytest.approx(sol.mu_f / j, abs=1e-15)
        assert abs(sol.g[j]) <= 1.0 / j + 1e-15
    worst = max(abs(sol.residual(k)) for k in range(16))
    assert worst <= 1e-10


# ---------------------------------------------------------------------------
# exact suprema over the test class
# ---------------------------------------------------------------------------

def test_solution_supremum_matches_closed_form():
    # independent oracle: the box supremum collapses to F(j-1) Fbar(j) / (j pmf(j))
    for m in MEASURES:
        t = m.cumulatives()
        for j in range(1, m.support_max + 1):
            closed = t.F[j - 1] * t.Fbar[j] / (j * m.pmf[j])
            assert gs.sup_solution_exact(m, j) == pytest.approx(closed, rel=1e-10)


def test_solution_coefficients_reproduce_solver():
    m = gs.binomial(8, 0.35)
    f = RNG.uniform(0.0, 1.0, 9)
    sol = gs.solve(m, f)
    for j in range(1, 9):
        assert solution_coefficients(m, j) @ f == pytest.approx(sol.g[j], abs=1e-12)
        assert increment_coefficients(m, j) @ f == pytest.approx(
            sol.g[j + 1] - sol.g[j], abs=1e-12
        )


def test_increment_supremum_attained_by_indicator():
    for m in (gs.poisson(1.0), gs.geometric(0.5), gs.binomial(10, 0.3)):
        for j in (1, 2, 5):
            if j > m.support_max:
                continue
            f_star = extremal_indicator(m, j, "increment")
            assert set(np.unique(f_star)).issubset({0.0, 1.0})
            sol = gs.solve(m, f_star)
            attained = abs(sol.g[j + 1] - sol.g[j])
            assert attained == pytest.approx(gs.sup_increment_exact(m, j), abs=1e-10)


def test_geometric_increment_supremum_value():
    # Example value (j+1-(1-p)^j)/(j(j+1)) at p = 1/2, j = 1 is 3/4
    m = gs.geometric(0.5)
    assert gs.sup_increment_exact(m, 1) == pytest.approx(0.75, abs=1e-12)


def test_geometric_norm_below_reciprocal_p():
    for p in (0.25, 0.5, 0.75):
        m = gs.geometric(p)
        assert gs.sup_solution_norm(m) <= 1.0 / p + 1e-10


def test_extended_norm_includes_tail_ceiling():
    m = gs.poisson(0.05, truncation=3)
    assert gs.extended_solution_norm(m) >= 1.0 / 4


def test_supremum_index_validation():
    m = gs.poisson(1.0, truncation=10)
    with pytest.raises(ValueError):
        gs.sup_increment_exact(m, 0)
    with pytest.raises(ValueError):
        gs.sup_solution_exact(m, 11)
