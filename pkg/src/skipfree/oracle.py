"""Independent check of the analytic results by exact lattice convolution.

The hitting-time theorem for skip-free walks gives
P(T_{-1} = n) = P(S_n = -1) / n, so partial sums of first-passage masses
bound rho from below, and the odd-n partial sums bound rho * rho_odd. The
unsummed tail is bounded above through the exponential rate min g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .distributions import IncrementDistribution, drift, pgf
from .errors import UnsupportedSupport, WindowTooSmall

DEFAULT_TERMS = 2000
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class LatticePmf:
    """Masses of an integer law on ``offset, offset + 1, ...`` plus the mass
    that fell outside the tracked window."""

    offset: int
    masses: np.ndarray
    defect: float

    def mass_at(self, x: int) -> float:
        i = x - self.offset
        if 0 <= i < self.masses.size:
            return float(self.masses[i])
        return 0.0

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.masses.size)

    def mean(self) -> float:
        return float(np.dot(self.support, self.masses) / self.masses.sum())


@dataclass(frozen=True)
class SeriesBracket:
    """Interval for a quantity computed from a truncated series.

    ``tail_bound`` bounds the unsummed terms (``None`` when that bound is
    not below 1, in which case ``upper`` is the trivial bound 1);
    ``fitted_ratio`` is the geometric decay rate behind it.
    ``rounding_allowance`` widens both ends for the floating-point error of
    the partial sum.
    """

    lower: float
    upper: float
    terms_used: int
    tail_bound: float | None
    rounding_allowance: float
    fitted_ratio: float | None = None
    heuristic: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "terms_used": self.terms_used,
            "tail_bound": self.tail_bound,
            "rounding_allowance": self.rounding_allowance,
            "fitted_ratio": self.fitted_ratio,
            "heuristic": self.heuristic,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def auto_window(dist: IncrementDistribution, n: int) -> tuple[int, int]:
    sd = math.sqrt(dist.variance())
    return n * dist.min_support - 1, max(0, math.ceil(n * (drift(dist) + 6.0 * sd)))


def walk_pmf(dist: IncrementDistribution, n: int, window: tuple[int, int] | None = None) -> LatticePmf:
    """Law of S_n (S_0 = 0) on ``window``; masses inside the window are exact."""
    if n < 0:
        raise WindowTooSmall("n must be non-negative")
    lo, hi = window if window is not None else auto_window(dist, n)
    reach_lo, reach_hi = n * dist.min_support, n * dist.k_max
    if lo > hi or hi < reach_lo or lo > reach_hi:
        raise WindowTooSmall(f"window [{lo}, {hi}] misses the reachable range [{reach_lo}, {reach_hi}]")
    masses, offset, dropped, lost, _ = kernels.propagate(dist.pmf, dist.min_support, n, hi)
    below = 0.0
    if lo > offset:
        below = float(masses[: lo - offset].sum())
        masses, offset = masses[lo - offset:], lo
    masses = masses.copy()
    masses.setflags(write=False)
    return LatticePmf(offset, masses, dropped + lost + below)


def first_passage_pmf(dist: IncrementDistribution, n: int) -> float:
    """P(T_{-1} = n) = P(S_n = -1) / n."""
    if dist.min_support != -1:
        raise UnsupportedSupport("hitting-time theorem needs a left-continuous walk")
    if n < 1:
        raise WindowTooSmall("n must be positive")
    return walk_pmf(dist, n, (-n, -1)).mass_at(-1) / n


def first_passage_masses(dist: IncrementDistribution, max_terms: int) -> np.ndarray:
    """P(T_{-1} = n) for n = 1..max_terms in a single propagation pass."""
    if dist.min_support != -1:
        raise UnsupportedSupport("hitting-time theorem needs a left-continuous walk")
    *_, record = kernels.propagate(dist.pmf, -1, max_terms, -1, record_level=-1)
    return record / np.arange(1, max_terms + 1)


def chernoff_rate(dist: IncrementDistribution) -> tuple[float, float]:
    """(x, g(x)) at the minimiser of g on (0, 1).

    Markov's inequality gives P(S_n <= -1) <= x g(x)^n for every x in (0, 1),
    so r = min g bounds the decay of the first-passage masses.
    """
    lo = dist.p_minus_one / 3.0
    res = minimize_scalar(lambda x: pgf(dist, x), bounds=(lo, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    x = float(res.x)
    return x, pgf(dist, x) * (1.0 + 8.0 * _EPS)


def _tail_bound(dist: IncrementDistribution, n_terms: int):
    """Upper bound on sum_{n > N} P(T_{-1} = n); ``None`` when it is not below 1."""
    x, r = chernoff_rate(dist)
    if r >= 1.0:
        return None, r
    n1 = n_terms + 1
    log_bound = math.log(x) + n1 * math.log(r) - math.log(n1) - math.log1p(-r)
    if log_bound >= 0.0:
        return None, r
    return math.exp(log_bound), r


def _allowance(partial: float, n_terms: int) -> float:
    return 4.0 * n_terms * _EPS * partial + 1e-300


def rho_series(dist: IncrementDistribution, max_terms: int = DEFAULT_TERMS) -> SeriesBracket:
    """Bracket for rho from the first ``max_terms`` first-passage masses."""
    terms = first_passage_masses(dist, max_terms)
    partial = math.fsum(terms)
    tail, ratio = _tail_bound(dist, max_terms)
    slack = _allowance(partial, max_terms)
    upper = 1.0 if tail is None else min(1.0, partial + tail + slack)
    return SeriesBracket(max(partial - slack, 0.0), upper, max_terms, tail, slack, ratio, False)


def rho_odd_series(
    dist: IncrementDistribution, max_terms: int = DEFAULT_TERMS, rho: float | None = None
) -> SeriesBracket:
    """Bracket for rho_odd = sum_{n odd} P(T_{-1} = n) / rho, with rho analytic."""
    if rho is None:
        from .analytic import solve_rho

        rho = solve_rho(dist)
    terms = first_passage_masses(dist, max_terms)
    odd_partial = math.fsum(terms[0::2])
    tail, ratio = _tail_bound(dist, max_terms)
    slack = _allowance(odd_partial, max_terms) / rho + 4.0 * _EPS
    lower = max(odd_partial / rho - slack, 0.0)
    upper = 1.0 if tail is None else min(1.0, (odd_partial + tail) / rho + slack)
    return SeriesBracket(lower, upper, max_terms, None if tail is None else tail / rho, slack, ratio, False)
