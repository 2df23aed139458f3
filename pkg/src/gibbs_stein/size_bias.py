"""Size-bias transforms and the index-selection sum construction.

For X >= 0 with positive mean, the size-biased law is
P(X* = x) = x P(X = x) / EX; it is what sampling proportionally to size
produces and it satisfies E[X f(X)] = EX E[f(X*)] for every f.

For a sum S = X_1 + ... + X_n of Bernoulli(p_i) variables, a size-biased
copy is built by picking an index I with P(I = i) proportional to p_i,
forcing X_I = 1, redrawing the remaining coordinates from their conditional
law given X_i = 1, and adding:  S* = sum_{j != i} Xhat_j + 1.  Only the
conditional laws of the leftover sums Shat_i = sum_{j != i} Xhat_j enter any
of the bounds downstream, so a coupling specification stores exactly those
(aggregated) laws; full configuration-level input is aggregated on ingestion.

The identity s P(S = s) = sum_i p_i P(Shat_i = s - 1) pins the law of S to
the conditional tables, which is both how the mixture is checked for
consistency and how the law of S is recovered for dependent specifications.

A joint coupling of (S, Shat_i) given I = i is needed for the distance
bounds: on the event X_i = 1 the redraw can be taken to be the identity
(S = Shat_i + 1 exactly); on X_i = 0 the leftover sum is redrawn
independently.  For independent coordinates that choice degenerates to the
classical perfect coupling with S - Shat_i = X_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._sums import fsum
from .measures import GibbsMeasure
from .stein import solve

__all__ = [
    "SizeBiasLaw",
    "size_bias",
    "CouplingSpec",
    "sum_size_bias",
    "stein_residual_via_size_bias",
]

_PMF_TOL = 1e-12


def _check_pmf(arr: np.ndarray, what: str, tol: float = 1e-9) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{what} must be a non-empty 1-d table")
    if np.any(arr < -1e-15):
        raise ValueError(f"{what} has negative entries")
    if abs(fsum(arr.tolist()) - 1.0) > tol:
        raise ValueError(f"{what} is not a probability vector")
    return arr


@dataclass(frozen=True)
class SizeBiasLaw:
    """Base pmf together with its size-biased companion on the same indices."""

    base: np.ndarray
    biased: np.ndarray
    mean: float


def size_bias(base: np.ndarray) -> SizeBiasLaw:
    """Size-bias a pmf on {0, ..., K}: biased(x) = x base(x) / mean."""
    base = _check_pmf(base, "base law")
    k = np.arange(base.size, dtype=float)
    mean = fsum((k * base).tolist())
    if not mean > 0.0:
        raise ValueError("size biasing needs a law with positive mean")
    biased = k * base / mean
    return SizeBiasLaw(base=base, biased=biased, mean=mean)


def bernoulli_convolution(p: np.ndarray) -> np.ndarray:
    """Exact law of a sum of independent Bernoulli(p_i) variables."""
    law = np.array([1.0])
    for pi in np.asarray(p, dtype=float):
        law = np.convolve(law, [1.0 - pi, pi])
    return law


class CouplingSpec:
    """Per-index conditional laws for the size-biased sum construction.

    p[i] are the Bernoulli means; conditional_sums[i] is the pmf of
    Shat_i = sum_{j != i} Xhat_j on {0, ..., n-1} given X_i = 1.  With
    independent=True the conditional tables are the leave-one-out
    convolutions and are generated (or verified) automatically.
    """

    __slots__ = ("p", "conditional_sums", "independent", "_sum_law")

    def __init__(
        self,
        p: np.ndarray,
        conditional_sums: np.ndarray | None = None,
        independent: bool = False,
        sum_law: np.ndarray | None = None,
    ):
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p must be a non-empty vector of Bernoulli means")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("Bernoulli means must lie in [0, 1]")
        if not fsum(p.tolist()) > 0.0:
            raise ValueError("at least one Bernoulli mean must be positive")
        n = p.size

        if independent:
            derived = np.zeros((n, n))
            for i in range(n):
                law = bernoulli_convolution(np.delete(p, i))
                derived[i, : law.size] = law
            if conditional_sums is not None:
                given = np.asarray(conditional_sums, dtype=float)
                if given.shape != derived.shape or np.max(np.abs(given - derived)) > 1e-9:
                    raise ValueError(
                        "conditional sums inconsistent with independence of the coordinates"
                    )
            conditional_sums = derived
        else:
            if conditional_sums is None:
                raise ValueError("dependent specifications need explicit conditional sums")
            conditional_sums = np.asarray(conditional_sums, dtype=float)
            if conditional_sums.shape != (n, n):
                raise ValueError(f"conditional sums must be an {n}x{n} table (rows on 0..n-1)")
            for i in range(n):
                if p[i] > 0.0:
                    _check_pmf(conditional_sums[i], f"conditional sum law {i}", tol=_PMF_TOL * n)

        self.p = p
        self.p.setflags(write=False)
        self.conditional_sums = conditional_sums
        self.conditional_sums.setflags(write=False)
        self.independent = independent
        self._sum_law = None if sum_law is None else np.asarray(sum_law, dtype=float)

    # -- constructors ---------------------------------------------------------
    @staticmethod
    def independent_bernoulli(p) -> "CouplingSpec":
        return CouplingSpec(np.asarray(p, dtype=float), independent=True)

    @staticmethod
    def from_configurations(configurations) -> "CouplingSpec":
        """Aggregate a full joint law over {0,1}^n configurations.

        configurations is an iterable of (bits, probability) pairs; the
        conditional sum tables and the exact law of the sum are derived.
        """
        items = [(tuple(int(b) for b in bits), float(pr)) for bits, pr in configurations]
        if not items:
            raise ValueError("empty configuration list")
        n = len(items[0][0])
        if any(len(bits) != n for bits, _ in items):
            raise ValueError("configurations must share one length")
        total = fsum(pr for _, pr in items)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("configuration probabilities must sum to 1")
        p = np.zeros(n)
        cond = np.zeros((n, n))
        sum_law = np.zeros(n + 1)
        for bits, pr in items:
            s = sum(bits)
            sum_law[s] += pr
            for i in range(n):
                if bits[i]:
                    p[i] += pr
                    cond[i, s - 1] += pr
        for i in range(n):
            if p[i] > 0.0:
                cond[i] /= p[i]
        return CouplingSpec(p, conditional_sums=cond, independent=False, sum_law=sum_law)

    @staticmethod
    def from_dict(payload: dict) -> "CouplingSpec":
        if "configurations" in payload:
            return CouplingSpec.from_configurations(
                (entry["bits"], entry["prob"]) for entry in payload["configurations"]
            )
        p = np.asarray(payload["p"], dtype=float)
        if payload.get("independent", False):
            return CouplingSpec(p, independent=True)
        return CouplingSpec(p, conditional_sums=np.asarray(payload["conditional_sums"], dtype=float))

    # -- derived laws -----------------------------------------------------------
    @property
    def n(self) -> int:
        return self.p.size

    @property
    def lam(self) -> float:
        return fsum(self.p.tolist())

    def mixture_law(self) -> np.ndarray:
        """Law of S* = Shat_I + 1 on {0, ..., n}; the index mixture of shifts."""
        lam = self.lam
        mix = np.zeros(self.n + 1)
        for i in range(self.n):
            if self.p[i] > 0.0:
                mix[1:] += (self.p[i] / lam) * self.conditional_sums[i]
        return mix

    def sum_law(self) -> np.ndarray:
        """Law of S itself.

        Independent specs use the exact convolution; configuration-level
        input carries the law along; otherwise the law is recovered from
        s P(S = s) = sum_i p_i P(Shat_i = s-1), flagging inconsistent tables.
        """
        if self._sum_law is not None:
            return self._sum_law
        if self.independent:
            law = bernoulli_convolution(self.p)
            out = np.zeros(self.n + 1)
            out[: law.size] = law
            return out
        mix = self.mixture_law()
        s = np.arange(1, self.n + 1, dtype=float)
        law = np.zeros(self.n + 1)
        law[1:] = self.lam * mix[1:] / s
        head = 1.0 - fsum(law[1:].tolist())
        if head < -1e-9:
            raise ValueError(
                "conditional sums are inconsistent: no law of the sum matches the mixture"
            )
        law[0] = max(head, 0.0)
        return law

    def coupling_given_index(self, i: int) -> list[tuple[float, int, int]]:
        """Joint law of (S, Shat_i) given I = i as (prob, s, s_hat) triples.

        On X_i = 1 the redraw is the identity, so S = Shat_i + 1; on X_i = 0
        the leftover sum is redrawn independently of S.
        """
        if not 0 <= i < self.n:
            raise ValueError("index out of range")
        if self.p[i] <= 0.0:
            raise ValueError("coupling undefined for an index with zero mean")
        cond = self.conditional_sums[i]
        out: list[tuple[float, int, int]] = []
        if self.independent:
            # Shat_i = S - X_i with X_i independent of Shat_i.
            for s_hat, pr in enumerate(cond):
                if pr == 0.0:
                    continue
                out.append((pr * self.p[i], s_hat + 1, s_hat))
                out.append((pr * (1.0 - self.p[i]), s_hat, s_hat))
            return out
        law = self.sum_law()
        # law of S given X_i = 0, obtained by peeling off the X_i = 1 part
        given_zero = law.copy()
        given_zero[1:] -= self.p[i] * cond
        if np.any(given_zero < -1e-9):
            raise ValueError("conditional sums are inconsistent with the law of the sum")
        given_zero = np.clip(given_zero, 0.0, None)
        if self.p[i] < 1.0:
            given_zero /= fsum(given_zero.tolist())
        for s_hat, pr_hat in enumerate(cond):
            if pr_hat == 0.0:
                continue
            out.append((pr_hat * self.p[i], s_hat + 1, s_hat))
            if self.p[i] < 1.0:
                for s, pr_s in enumerate(given_zero):
                    if pr_s == 0.0:
                        continue
                    out.append(((1.0 - self.p[i]) * pr_hat * pr_s, s, s_hat))
        return out

    def mean_abs_gap(self, i: int) -> float:
        """E_i |S - Shat_i| under the canonical coupling (p_i when independent)."""
        if self.independent:
            return float(self.p[i])
        return fsum(pr * abs(s - s_hat) for pr, s, s_hat in self.coupling_given_index(i))

    def to_dict(self) -> dict:
        return {
            "p": self.p.tolist(),
            "independent": self.independent,
            "conditional_sums": self.conditional_sums.tolist(),
        }


def sum_size_bias(spec: CouplingSpec) -> np.ndarray:
    """Law of S* = Shat_I + 1, verified against size-biasing the sum's law."""
    mix = spec.mixture_law()
    direct = size_bias(spec.sum_law()).biased
    gap = float(np.max(np.abs(mix - direct)))
    if gap > 1e-9:
        raise ValueError(
            f"mixture law differs from the size-biased sum law by {gap:.3e}; "
            "the conditional tables are inconsistent"
        )
    return mix


def stein_residual_via_size_bias(
    m: GibbsMeasure, W: np.ndarray, Wstar: np.ndarray, f
) -> float:
    """Rate-weighted residual omega (E e^dV(W) g(W+1) - E e^dV(W) E g(W*)).

    With g the Stein solution for m and W* the exact size bias of W this
    equals Ef(W) - mu(f) whenever the rate-weighted mean matches the plain
    mean (E b_W = E W), in particular for W ~ m or a constant-rate target
    whose activity equals the mean of W.
    """
    W = _check_pmf(W, "law of W")
    Wstar = _check_pmf(Wstar, "law of W*")
    n = m.support_max
    if W.size > n + 1:
        raise ValueError("W must live inside the measure's support")
    if Wstar.size > n + 2:
        raise ValueError("W* must live inside 0..N+1")
    g = solve(m, f).g
    b = m.birth_rates[: W.size]
    lhs = fsum((W * b * g[1 : W.size + 1]).tolist())
    rate_mean = fsum((W * b).tolist())
    mean_g_star = fsum((Wstar * g[: Wstar.size]).tolist())
    return lhs - rate_mean * mean_g_star
