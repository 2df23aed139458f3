"""Solving the birth-death Stein equation for a discrete Gibbs measure.

For a test function f on the support of mu, the solution g = g_f solves

    b_k g(k+1) - k g(k) = f(k) - mu(f),        0 <= k <= N,

with g(0) = 0.  Written through the normalized pmf the recursion collapses
to a ratio of partial sums,

    g(j+1) = sum_{k<=j} pmf(k) (f(k) - mu(f)) / ((j+1) pmf(j+1)),

which is also minus the complementary tail sum divided by the same factor;
the two forms agree because the full sum vanishes.  The solver evaluates,
for every j, whichever side has the smaller accumulated absolute mass and
sums it with correctly rounded summation, which keeps the residual of the
equation near machine precision even deep in the tails where pmf(j+1) is
tiny.  Factorials, activity powers and the partition function never appear.

Two exact suprema over the test class B = {f: values in [0, 1]} are
available: g_f(j) and its increment are affine in f with explicit
per-coordinate coefficients, so the supremum over the box [0, 1]^(N+1) is
attained at an indicator function read off the coefficient signs.

A measure with support {0..n} can also be compared against laws living on
a larger range: the generator is extended as a pure-death process above n
and the solution continued by g(k) = mu(f)/k for k > n, which keeps the
Stein equation valid there for f vanishing off the support (class B0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._sums import exact_window_sum, fsum
from .measures import GibbsMeasure

__all__ = [
    "TestFunction",
    "SteinSolution",
    "solve",
    "solve_extended",
    "apply_generator",
    "stationarity_defect",
    "solution_coefficients",
    "increment_coefficients",
    "sup_solution_exact",
    "sup_increment_exact",
    "extremal_indicator",
    "sup_solution_norm",
    "extended_solution_norm",
]


@dataclass(frozen=True)
class TestFunction:
    """A [0, 1]-valued test table, optionally vanishing above a declared support.

    With support_max set this represents the class B0 used for comparisons
    across mismatched supports; otherwise the full class B.
    """

    values: np.ndarray
    support_max: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("test function must be a non-empty 1-d table")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError("test function values must lie in [0, 1]")
        if self.support_max is not None and np.any(values[self.support_max + 1 :] != 0.0):
            raise ValueError("f must be in B0: values above the declared support must be 0")
        object.__setattr__(self, "values", values)

    @staticmethod
    def indicator(points, size: int, support_max: int | None = None) -> "TestFunction":
        values = np.zeros(size)
        values[np.asarray(points, dtype=int)] = 1.0
        return TestFunction(values, support_max)

    @staticmethod
    def constant(c: float, size: int) -> "TestFunction":
        return TestFunction(np.full(size, float(c)))


@dataclass(frozen=True)
class SteinSolution:
    """Value table of the Stein-equation solution.

    g is defined on 0..domain_max+1.  For a plain solve domain_max = N and
    g(N+1) = 0; for an extended solve domain_max > N and g(k) = mu(f)/k
    above the support.
    """

    g: np.ndarray
    measure: GibbsMeasure
    f: np.ndarray
    mu_f: float
    extended: bool
    domain_max: int

    def delta(self) -> np.ndarray:
        """Increments g(j+1) - g(j) for j = 0..domain_max."""
        return np.diff(self.g)

    def residual(self, k: int) -> float:
        """Generator applied at k minus the Stein-equation right-hand side."""
        n = self.measure.support_max
        if not 0 <= k <= self.domain_max:
            raise ValueError(f"residual defined for 0 <= k <= {self.domain_max}")
        if k <= n:
            lhs = apply_generator(self.measure, self.g, k)
            rhs = self.f[k] - self.mu_f if k < self.f.size else -self.mu_f
        else:
            lhs = -k * self.g[k]
            rhs = (self.f[k] if k < self.f.size else 0.0) - self.mu_f
        return float(lhs - rhs)


def _as_values(f, size: int) -> np.ndarray:
    if isinstance(f, TestFunction):
        values = f.values
    else:
        values = np.asarray(f, dtype=float)
    if values.size != size:
        raise ValueError(f"test function must have length {size}, got {values.size}")
    return values


def solve(m: GibbsMeasure, f, method: str = "auto") -> SteinSolution:
    """Solve the Stein equation for mu = m and test function f.

    method picks the partial-sum side: "auto" chooses per index by smaller
    accumulated absolute mass, "forward" and "backward" force one side
    everywhere (exposed mainly so tests can assert the two forms agree).
    """
    if method not in ("auto", "forward", "backward"):
        raise ValueError(f"unknown method {method!r}")
    n = m.support_max
    values = _as_values(f, n + 1)
    pmf = m.pmf
    mu_f = fsum((pmf * values).tolist())
    terms = pmf * (values - mu_f)
    abs_prefix = np.cumsum(np.abs(terms))
    abs_total = abs_prefix[-1]

    g = np.zeros(n + 2)
    for j in range(n):
        use_forward = (
            method == "forward"
            or (method == "auto" and abs_prefix[j] <= abs_total - abs_prefix[j])
        )
        if use_forward:
            s = exact_window_sum(terms, 0, j + 1)
            g[j + 1] = s / ((j + 1) * pmf[j + 1])
        else:
            t = exact_window_sum(terms, j + 1, n + 1)
            g[j + 1] = -t / ((j + 1) * pmf[j + 1])
    return SteinSolution(g=g, measure=m, f=values, mu_f=mu_f, extended=False, domain_max=n)


def solve_extended(m: GibbsMeasure, f, domain_max: int) -> SteinSolution:
    """Solution for the pure-death extension of m's generator above its support.

    f must vanish above m's support (class B0); for k > N the solution is
    mu(f)/k, which satisfies -k g(k) = f(k) - mu(f) there.
    """
    n = m.support_max
    if domain_max <= n:
        raise ValueError("domain_max must exceed the measure's support bound")
    if isinstance(f, TestFunction):
        values = f.values
    else:
        values = np.asarray(f, dtype=float)
    if values.size != domain_max + 1:
        raise ValueError(f"test function must have length {domain_max + 1}, got {values.size}")
    if np.any(values[n + 1 :] != 0.0):
        raise ValueError("f must be in B0: values above the support must be 0")

    base = solve(m, values[: n + 1])
    g = np.zeros(domain_max + 2)
    g[: n + 1] = base.g[: n + 1]
    ks = np.arange(n + 1, domain_max + 2, dtype=float)
    g[n + 1 :] = base.mu_f / ks
    return SteinSolution(
        g=g, measure=m, f=values, mu_f=base.mu_f, extended=True, domain_max=domain_max
    )


def apply_generator(m: GibbsMeasure, g, k: int) -> float:
    """Birth-death generator of m applied to g at state k."""
    g = np.asarray(g, dtype=float)
    n = m.support_max
    if not 0 <= k <= n:
        raise ValueError(f"generator defined for 0 <= k <= {n}, got {k}")
    if g.size < n + 2:
        raise ValueError("g must be defined on 0..N+1")
    return float(m.birth_rates[k] * g[k + 1] - k * g[k])


def stationarity_defect(m: GibbsMeasure, g) -> float:
    """E[Ag(Z)] for Z ~ m; zero for every bounded g by the Stein characterization."""
    g = np.asarray(g, dtype=float)
    n = m.support_max
    if g.size < n + 2:
        raise ValueError("g must be defined on 0..N+1")
    k = np.arange(n + 1, dtype=float)
    contrib = m.pmf * (m.birth_rates * g[1 : n + 2] - k * g[: n + 1])
    return fsum(contrib.tolist())


# ---------------------------------------------------------------------------
# Exact suprema over the [0, 1]-valued test class
# ---------------------------------------------------------------------------

def solution_coefficients(m: GibbsMeasure, j: int) -> np.ndarray:
    """Coefficients c with g_f(j) = sum_k c[k] f(k) for every test table f."""
    n = m.support_max
    if not 1 <= j <= n:
        raise ValueError(f"solution coefficients defined for 1 <= j <= {n}")
    pmf = m.pmf
    tables = m.cumulatives()
    scale = j * pmf[j]
    c = np.empty(n + 1)
    c[:j] = pmf[:j] * (tables.Fbar[j] / scale)
    c[j:] = -pmf[j:] * (tables.F[j - 1] / scale)
    return c


def increment_coefficients(m: GibbsMeasure, j: int) -> np.ndarray:
    """Coefficients d with g_f(j+1) - g_f(j) = sum_k d[k] f(k)."""
    n = m.support_max
    if not 1 <= j <= n:
        raise ValueError(f"increment coefficients defined for 1 <= j <= {n}")
    c_j = solution_coefficients(m, j)
    if j == n:
        # g(N+1) = 0, so the increment at N is -g(N).
        return -c_j
    return solution_coefficients(m, j + 1) - c_j


def _box_supremum(coeffs: np.ndarray, f_support: int | None) -> tuple[float, np.ndarray]:
    """Sup of |sum c_k f_k| over f in [0,1]^m (optionally f = 0 above f_support).

    Returns the value and an attaining indicator table (ties resolved to 0).
    """
    active = coeffs if f_support is None else coeffs[: f_support + 1]
    pos = fsum(active[active > 0.0].tolist())
    neg = -fsum(active[active < 0.0].tolist())
    f_star = np.zeros(coeffs.size)
    if pos >= neg:
        value, mask = pos, active > 0.0
    else:
        value, mask = neg, active < 0.0
    f_star[: active.size][mask] = 1.0
    return value, f_star


def sup_solution_exact(m: GibbsMeasure, j: int, f_support: int | None = None) -> float:
    """Exact sup over f in B (or B0 with the given support) of |g_f(j)|."""
    value, _ = _box_supremum(solution_coefficients(m, j), f_support)
    return value


def sup_increment_exact(m: GibbsMeasure, j: int, f_support: int | None = None) -> float:
    """Exact sup over f in B (or B0) of |g_f(j+1) - g_f(j)|."""
    value, _ = _box_supremum(increment_coefficients(m, j), f_support)
    return value


def extremal_indicator(m: GibbsMeasure, j: int, quantity: str = "increment") -> np.ndarray:
    """An indicator test function attaining the exact supremum at j."""
    if quantity == "increment":
        _, f_star = _box_supremum(increment_coefficients(m, j), None)
    elif quantity == "solution":
        _, f_star = _box_supremum(solution_coefficients(m, j), None)
    else:
        raise ValueError("quantity must be 'increment' or 'solution'")
    return f_star


def sup_solution_norm(m: GibbsMeasure, f_support: int | None = None) -> float:
    """max_j sup_f |g_f(j)|, the exact certified bound on the solution norm."""
    n = m.support_max
    if n == 0:
        return 0.0
    return max(sup_solution_exact(m, j, f_support) for j in range(1, n + 1))


def extended_solution_norm(m: GibbsMeasure) -> float:
    """Norm bound for the pure-death extension: above the support the solution
    is mu(f)/k, which for f in B0 never exceeds 1/(N+1)."""
    return max(sup_solution_norm(m), 1.0 / (m.support_max + 1))
