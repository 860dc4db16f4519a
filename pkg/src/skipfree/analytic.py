"""Closed-form hitting probabilities of a left-continuous walk started at 0.

    rho      P(T_{-1} < inf)
    sigma    P(S_n > 0 for all n >= 1)
    tau      P(T_0^+ < T_{-1})
    rho_odd  P(T_{-1} odd | T_{-1} < inf)
    tau_odd  P(T_0^+ odd | T_0^+ < T_{-1})

rho is the root of g(x) = 1 in (0, 1); sigma and tau follow from rho and
p_{-1}; rho_odd comes from the root y* = rho (1 - 2 rho_odd) of g(y) = -1 on
[-rho, 0); tau_odd is a rational function of the other four.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .distributions import IncrementDistribution, OffspringDistribution, drift, pgf
from .errors import (
    AmbiguousRoot,
    DegenerateExcursion,
    Deterministic,
    InconsistentRho,
    InvariantViolation,
    MonotoneWalk,
    NonPositiveDrift,
    OutOfRange,
    RootNotBracketed,
    UnsupportedSupport,
)

ROOT_RESIDUAL = 1e-12
SUMMARY_TOL = 1e-10
GRID_POINTS = 1024
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class WalkSummary:
    rho: float
    sigma: float
    tau: float
    rho_odd: float
    tau_odd: float
    y_star: float
    root_residuals: tuple[float, float]
    p_minus_one: float
    diagnostics: tuple[str, ...] = field(default=())

    def as_tuple(self):
        return (self.rho, self.sigma, self.tau, self.rho_odd, self.tau_odd)

    def to_dict(self):
        return {
            "rho": self.rho,
            "sigma": self.sigma,
            "tau": self.tau,
            "rho_odd": self.rho_odd,
            "tau_odd": self.tau_odd,
            "y_star": self.y_star,
            "root_residuals": list(self.root_residuals),
            "p_minus_one": self.p_minus_one,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            rho=d["rho"],
            sigma=d["sigma"],
            tau=d["tau"],
            rho_odd=d["rho_odd"],
            tau_odd=d["tau_odd"],
            y_star=d["y_star"],
            root_residuals=tuple(d["root_residuals"]),
            p_minus_one=d["p_minus_one"],
            diagnostics=tuple(d["diagnostics"]),
        )


class OddRoot(NamedTuple):
    rho_odd: float
    y_star: float
    residual: float
    candidates: tuple[float, ...]
    gap: float  # rho + y*, computed without cancellation where possible


class Extinction(NamedTuple):
    probability: float
    subcritical: bool


def check_walk(dist: IncrementDistribution) -> None:
    """Raise unless the law is left-continuous, non-monotone, with positive drift."""
    if dist.min_support != -1:
        raise UnsupportedSupport("analytic results need increments >= -1")
    if dist.p_minus_one <= 0.0:
        raise MonotoneWalk("p_{-1} = 0: the walk never steps down")
    mu = drift(dist)
    if not mu > 0.0:
        raise NonPositiveDrift(f"drift {mu!r} is not positive")


def _root(fn, a, b):
    """Brent's method to full double precision on a bracket [a, b]."""
    xtol = max(abs(a), abs(b)) * 1e-17 + 1e-300
    return brentq(fn, a, b, xtol=xtol, rtol=4 * _EPS, maxiter=500)


def _pinned(fn, x):
    # residual is as small as the float grid allows if fn changes sign
    # across the neighbouring doubles
    lo, hi = fn(np.nextafter(x, -np.inf)), fn(np.nextafter(x, np.inf))
    return lo * hi <= 0.0


def solve_rho(dist: IncrementDistribution) -> float:
    """Root of g(x) = 1 in (0, 1)."""
    check_walk(dist)
    p = dist.p_minus_one
    lo = p / 3.0  # g(lo) >= p/lo = 3
    delta = 0.5
    while pgf(dist, 1.0 - delta) >= 1.0:
        delta *= 0.5
        if delta < 1e-15:
            raise RootNotBracketed("could not find x < 1 with g(x) < 1")
    hi = 1.0 - delta
    f = lambda x: pgf(dist, x) - 1.0  # noqa: E731
    x = _root(f, lo, hi)
    res = abs(f(x))
    if res > ROOT_RESIDUAL and not _pinned(f, x):
        raise RootNotBracketed(f"|g(rho) - 1| = {res:.3g} after root finding")
    return x


def _upper_part(dist: IncrementDistribution, x: float) -> float:
    """f(x) = sum_{k >= 0} p_k x^k, i.e. g(x) - p_{-1}/x."""
    probs = dist.probabilities
    return math.fsum(probs[i] * x ** (i - 1) for i in range(len(probs) - 1, 0, -1))


def sigma_tau(dist: IncrementDistribution, rho: float) -> tuple[float, float]:
    p = dist.p_minus_one
    res = abs(pgf(dist, rho) - 1.0)
    if res > 1e-8:
        raise InconsistentRho(f"|g(rho) - 1| = {res:.3g}")
    sigma = p * (1.0 - rho) / rho
    # 1 - p/rho = f(rho) at the root; the sum has no cancellation when rho ~ p
    tau = _upper_part(dist, rho)
    if abs(p + tau + sigma - 1.0) > SUMMARY_TOL:
        raise InconsistentRho("p_{-1} + tau + sigma != 1")
    return sigma, tau


def solve_rho_odd(dist: IncrementDistribution, rho: float) -> OddRoot:
    """Locate y* in [-rho, 0) with g(y*) = -1 and return rho_odd = (1 - y*/rho)/2.

    g(-rho) >= -g(rho) = -1 and g -> -inf as y -> 0-, so the bracket is
    valid. y* = -rho exactly when every increment is odd (then T_{-1} is odd
    surely); that boundary root is accepted without a sign change. The
    bracket is scanned on a grid for further sign changes; if several roots
    turn up the series oracle picks the one consistent with the first-passage
    probabilities.
    """
    check_walk(dist)
    p = dist.p_minus_one
    f = lambda y: pgf(dist, y) + 1.0  # noqa: E731
    lo, hi = -rho, -p / 3.0  # g(hi) <= -3 + 1
    f_lo = f(lo)
    candidates = []
    if abs(f_lo) <= ROOT_RESIDUAL:
        candidates.append(lo)
    elif f_lo < 0.0:
        raise RootNotBracketed(f"g(-rho) + 1 = {f_lo:.3g} < 0")
    grid = np.linspace(lo, hi, GRID_POINTS)
    values = [f_lo] + [f(y) for y in grid[1:]]
    start = 1 if candidates else 0
    for i in range(start, GRID_POINTS - 1):
        a, b = values[i], values[i + 1]
        if b == 0.0:
            candidates.append(float(grid[i + 1]))
        elif a != 0.0 and (a > 0.0) != (b > 0.0):
            candidates.append(_root(f, float(grid[i]), float(grid[i + 1])))
    if not candidates:
        raise RootNotBracketed("no root of g(y) = -1 on [-rho, 0)")
    if len(candidates) == 1:
        y = candidates[0]
    else:
        y = _disambiguate(dist, rho, candidates)
    res = abs(f(y))
    if res > ROOT_RESIDUAL and not _pinned(f, y):
        raise RootNotBracketed(f"|g(y*) + 1| = {res:.3g}")
    gap = _gap(dist, rho, -y)
    return OddRoot(1.0 - gap / (2.0 * rho), y, res, tuple(candidates), gap)


def _gap(dist, rho, s):
    """d = rho - s for s = -y*, without subtracting the two roots.

    Subtracting g(-s) = -1 from g(rho) = 1 gives p d / (s rho) = f(rho) + f(-s).
    Even powers contribute rho^k + s^k; odd ones rho^k - s^k = d h_k with
    h_k = sum_j rho^(k-1-j) s^j, so d solves a linear equation in itself.
    """
    direct = rho - s
    p = dist.p_minus_one
    scale = s * rho / p
    even, odd = [], []
    for i in range(1, len(dist.probabilities)):
        q, k = dist.probabilities[i], i - 1
        if q == 0.0:
            continue
        if k % 2 == 0:
            even.append(q * (rho**k + s**k))
        else:
            odd.append(q * math.fsum(rho ** (k - 1 - j) * s**j for j in range(k)))
    denom = 1.0 - scale * math.fsum(odd)
    if denom < 1e-3:
        return direct
    gap = scale * math.fsum(even) / denom
    # keep the refinement only where it agrees with the plain difference
    if abs(gap - direct) > 64.0 * _EPS * rho:
        return direct
    return gap


def _disambiguate(dist, rho, candidates, tol=1e-8):
    from .oracle import rho_odd_series

    bracket = rho_odd_series(dist, rho=rho)
    return pick_root(candidates, rho, bracket.lower, bracket.upper, tol)


def pick_root(candidates, rho, lower, upper, tol=1e-8):
    """The single candidate whose implied rho_odd lies in [lower, upper] (+- tol)."""
    hits = [y for y in candidates if lower - tol <= (1.0 - y / rho) / 2.0 <= upper + tol]
    if len(hits) != 1:
        implied = [(1.0 - y / rho) / 2.0 for y in candidates]
        raise AmbiguousRoot(
            f"{len(candidates)} roots of g(y) = -1 imply rho_odd in {implied}; "
            f"{len(hits)} fall inside the series bracket [{lower}, {upper}]"
        )
    return hits[0]


def tau_odd(
    dist: IncrementDistribution, rho: float, tau: float, rho_odd: float, gap: float | None = None
) -> float:
    """p (1 - rho_odd) / (rho tau (2 rho_odd - 1)).

    ``gap`` = rho + y* = 2 rho (1 - rho_odd), if known more accurately than
    ``rho_odd`` itself, is used in place of it.
    """
    if tau <= 0.0:
        raise DegenerateExcursion("tau = 0: positive excursions never return")
    if not rho_odd > 0.5:
        raise OutOfRange(f"rho_odd = {rho_odd} must exceed 1/2")
    p = dist.p_minus_one
    if gap is None:
        value = p * (1.0 - rho_odd) / (rho * tau * (2.0 * rho_odd - 1.0))
    else:
        value = p * gap / (2.0 * rho * tau * (rho - gap))
    if not -SUMMARY_TOL <= value <= 1.0 + SUMMARY_TOL:
        raise OutOfRange(f"tau_odd = {value} outside [0, 1]; upstream root is off")
    return min(max(value, 0.0), 1.0)


def ipow(x: float, n: int) -> float:
    """x**n for integer n >= 0 by repeated squaring."""
    result = 1.0
    while n:
        if n & 1:
            result *= x
        x *= x
        n >>= 1
    return result


def binomial_even_parity(n: int, p: float) -> float:
    """P(Bin(n, p) is even) = (1 + (1 - 2p)^n) / 2."""
    return 0.5 * (1.0 + ipow(1.0 - 2.0 * p, n))


def extinction_probability(offspring: OffspringDistribution) -> Extinction:
    """Smallest fixed point of the offspring PGF on [0, 1].

    Returns probability 1 with ``subcritical=True`` when the mean offspring
    is at most 1.
    """
    probs = offspring.probabilities
    if sum(1 for q in probs if q > 0.0) == 1:
        raise Deterministic("offspring count is deterministic")
    if offspring.mean() <= 1.0:
        return Extinction(1.0, True)
    if probs[0] == 0.0:
        return Extinction(0.0, False)
    h = lambda s: s - offspring.pgf(s)  # noqa: E731
    delta = 0.5
    while h(1.0 - delta) <= 0.0:
        delta *= 0.5
        if delta < 1e-15:
            raise RootNotBracketed("no s < 1 with f(s) < s")
    return Extinction(_root(h, 0.0, 1.0 - delta), False)


def summarize(dist: IncrementDistribution) -> WalkSummary:
    check_walk(dist)
    p = dist.p_minus_one
    rho = solve_rho(dist)
    sigma, tau = sigma_tau(dist, rho)
    odd = solve_rho_odd(dist, rho)
    t_odd = tau_odd(dist, rho, tau, odd.rho_odd, odd.gap)
    residuals = (abs(pgf(dist, rho) - 1.0), odd.residual)
    diagnostics = ()
    if len(odd.candidates) > 1:
        diagnostics = ("MultipleRoots",)

    if abs(p + tau + sigma - 1.0) > SUMMARY_TOL:
        raise InvariantViolation("p_{-1} + tau + sigma != 1")
    if not p < rho < 1.0:
        raise InvariantViolation(f"rho = {rho} not in (p_-1, 1)")
    if not odd.rho_odd > 0.5:
        raise InvariantViolation(f"rho_odd = {odd.rho_odd} <= 1/2")
    if max(residuals) > SUMMARY_TOL:
        raise InvariantViolation(f"root residuals {residuals}")
    return WalkSummary(rho, sigma, tau, odd.rho_odd, t_odd, odd.y_star, residuals, p, diagnostics)
