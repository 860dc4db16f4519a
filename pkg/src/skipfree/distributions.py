"""Increment laws on {-1, 0, 1, ...} and their generating functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
from scipy import stats

from .errors import (
    DomainError,
    DuplicateSupportPoint,
    InvalidParameter,
    MassNotOne,
    NegativeMass,
    SpecError,
    UnsupportedSupport,
)

MASS_TOL = 1e-12
INPUT_MASS_TOL = 1e-9
TAIL_TOL = 1e-14
DEFECT_CAP = 1e-12


def _canonical(probabilities: Iterable[float]) -> tuple[float, ...]:
    probs = [float(p) for p in probabilities]
    while len(probs) > 1 and probs[-1] == 0.0:
        probs.pop()
    return tuple(probs)


@dataclass(frozen=True)
class IncrementDistribution:
    """Step law of a walk; ``probabilities[i]`` is P(X = min_support + i).

    ``truncation_defect`` is the tail mass dropped when a parametric family
    was cut off. It is carried, never renormalised away.
    """

    min_support: int
    probabilities: tuple[float, ...]
    truncation_defect: float = 0.0
    family_tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "probabilities", _canonical(self.probabilities))
        if self.min_support not in (-1, -2):
            raise UnsupportedSupport(f"min_support must be -1 or -2, got {self.min_support}")
        if not self.probabilities:
            raise MassNotOne("empty probability vector")
        if any(not math.isfinite(p) for p in self.probabilities):
            raise NegativeMass("probabilities must be finite")
        if min(self.probabilities) < 0.0:
            raise NegativeMass(f"negative probability in {self.probabilities}")
        if not 0.0 <= self.truncation_defect <= DEFECT_CAP:
            raise InvalidParameter(
                f"truncation defect {self.truncation_defect:g} outside [0, {DEFECT_CAP:g}]"
            )
        total = math.fsum(self.probabilities) + self.truncation_defect
        if abs(total - 1.0) > MASS_TOL:
            raise MassNotOne(f"total mass {total!r} differs from 1 by more than {MASS_TOL:g}")

    @cached_property
    def pmf(self) -> np.ndarray:
        arr = np.array(self.probabilities, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def support(self) -> np.ndarray:
        arr = np.arange(self.min_support, self.min_support + len(self.probabilities), dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @property
    def k_max(self) -> int:
        return self.min_support + len(self.probabilities) - 1

    @property
    def p_minus_one(self) -> float:
        return self.probability(-1)

    def probability(self, k: int) -> float:
        i = k - self.min_support
        if 0 <= i < len(self.probabilities):
            return self.probabilities[i]
        return 0.0

    def variance(self) -> float:
        mu = drift(self)
        return math.fsum(p * (k - mu) ** 2 for k, p in self.items())

    def items(self):
        """(k, p_k) pairs over stored support points with positive mass."""
        for i, p in enumerate(self.probabilities):
            if p > 0.0:
                yield self.min_support + i, p


@dataclass(frozen=True)
class OffspringDistribution:
    """Law of the offspring count xi = X + 1 on {0, 1, 2, ...}."""

    probabilities: tuple[float, ...]
    truncation_defect: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "probabilities", _canonical(self.probabilities))
        if min(self.probabilities) < 0.0:
            raise NegativeMass("negative offspring probability")
        total = math.fsum(self.probabilities) + self.truncation_defect
        if abs(total - 1.0) > MASS_TOL:
            raise MassNotOne(f"offspring mass {total!r} differs from 1")

    def mean(self) -> float:
        return math.fsum(j * p for j, p in enumerate(self.probabilities))

    def pgf(self, s: float) -> float:
        return math.fsum(p * s**j for j, p in reversed(list(enumerate(self.probabilities))))


# -- constructors -------------------------------------------------------------

def make_finite(entries: Iterable[tuple[int, float]]) -> IncrementDistribution:
    """Build a finite-support law from ``(k, p)`` pairs.

    The input is divided by its own sum so that decimal rounding in hand-typed
    PMFs does not trip the mass invariant.
    """
    table: dict[int, float] = {}
    for k, p in entries:
        if isinstance(k, bool) or int(k) != k:
            raise UnsupportedSupport(f"support point {k!r} is not an integer")
        k = int(k)
        p = float(p)
        if k < -1:
            raise UnsupportedSupport(f"support point {k} below -1: walk is not left-continuous")
        if k in table:
            raise DuplicateSupportPoint(f"support point {k} given twice")
        if not p >= 0.0:
            raise NegativeMass(f"P(X={k}) = {p} is negative")
        table[k] = p
    if not table:
        raise MassNotOne("no entries")
    total = math.fsum(table.values())
    if abs(total - 1.0) > INPUT_MASS_TOL:
        raise MassNotOne(f"probabilities sum to {total!r}, not 1")
    probs = [0.0] * (max(table) + 2)
    for k, p in table.items():
        probs[k + 1] = p / total
    return IncrementDistribution(-1, tuple(probs), 0.0, "finite")


def make_poisson_shifted(lam: float) -> IncrementDistribution:
    """Law of Y - 1 with Y ~ Poisson(lam), cut at tail mass below 1e-14."""
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    # sf(j) = P(Y > j); pick the smallest j whose tail is below tolerance
    j = int(lam)
    while stats.poisson.sf(j, lam) >= TAIL_TOL:
        j += max(1, int(math.sqrt(lam)))
    while j > 0 and stats.poisson.sf(j - 1, lam) < TAIL_TOL:
        j -= 1
    probs = stats.poisson.pmf(np.arange(j + 1), lam)
    defect = float(stats.poisson.sf(j, lam))
    return IncrementDistribution(-1, tuple(probs), defect, f"poisson_shifted({lam!r})")


def make_geometric_shifted(q: float) -> IncrementDistribution:
    """Law of G - 1 where P(G = j) = (1 - q) q^j on j >= 0."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise InvalidParameter(f"q must lie in (0, 1), got {q}")
    # tail after index j is q^(j+1)
    j = max(0, math.ceil(math.log(TAIL_TOL) / math.log(q)) - 1)
    while q ** (j + 1) >= TAIL_TOL:
        j += 1
    probs = (1.0 - q) * q ** np.arange(j + 1)
    return IncrementDistribution(-1, tuple(probs), q ** (j + 1), f"geometric_shifted({q!r})")


def from_spec(spec: Mapping) -> IncrementDistribution:
    """Parse the JSON distribution document used by the CLI."""
    if not isinstance(spec, Mapping):
        raise SpecError("distribution spec must be a JSON object")
    family = spec.get("family")
    fields = set(spec) - {"family"}
    if family == "finite":
        if fields != {"pmf"}:
            raise SpecError(f"finite spec needs exactly the field 'pmf', got {sorted(fields)}")
        pmf = spec["pmf"]
        if not isinstance(pmf, list) or not all(isinstance(e, list) and len(e) == 2 for e in pmf):
            raise SpecError("'pmf' must be a list of [k, p] pairs")
        return make_finite((k, p) for k, p in pmf)
    if family == "poisson_shifted":
        if fields != {"lambda"}:
            raise SpecError(f"poisson_shifted spec needs exactly 'lambda', got {sorted(fields)}")
        return make_poisson_shifted(_number(spec["lambda"], "lambda"))
    if family == "geometric_shifted":
        if fields != {"q"}:
            raise SpecError(f"geometric_shifted spec needs exactly 'q', got {sorted(fields)}")
        return make_geometric_shifted(_number(spec["q"], "q"))
    raise SpecError(f"unknown family {family!r}")


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{name!r} must be a number")
    return float(value)


# -- operations ---------------------------------------------------------------

def pgf(dist: IncrementDistribution, x: float) -> float:
    """g(x) = p_{-1}/x + sum_k p_k x^k on [-1, 0) U (0, 1].

    Terms are added from the highest power down through ``math.fsum``; at
    negative arguments the alternating terms cancel heavily.
    """
    if dist.min_support < -1:
        raise UnsupportedSupport("pgf is defined for left-continuous laws only")
    x = float(x)
    if x == 0.0 or not abs(x) <= 1.0:
        raise DomainError(f"g is undefined at x={x}")
    probs = dist.probabilities
    terms = [probs[i] * x ** (i - 1) for i in range(len(probs) - 1, 0, -1)]
    terms.append(probs[0] / x)
    return math.fsum(terms)


def drift(dist: IncrementDistribution) -> float:
    return math.fsum(k * p for k, p in dist.items())


def offspring_from_increment(dist: IncrementDistribution) -> OffspringDistribution:
    if dist.min_support != -1:
        raise UnsupportedSupport("offspring law needs a left-continuous increment law")
    return OffspringDistribution(dist.probabilities, dist.truncation_defect)


def convolve(a: IncrementDistribution, b: IncrementDistribution) -> IncrementDistribution:
    """Law of X = Y1 + Y2 for independent Y1 ~ a, Y2 ~ b (support from -2)."""
    if a.min_support != -1 or b.min_support != -1:
        raise UnsupportedSupport("convolve takes two left-continuous laws")
    probs = np.convolve(a.pmf, b.pmf)
    return IncrementDistribution(
        -2, tuple(probs), a.truncation_defect + b.truncation_defect, "convolution"
    )
