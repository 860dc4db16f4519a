"""Parity of the first negative time via small absorbing Markov chains.

From a start at k >= 0 the walk is tracked only at its visits to -1, with
time parity attached. Two transient states ("start", "at -1 with the wrong
parity") and two absorbing ones ("never below 0 again", "negative at the
target parity") suffice, so everything reduces to 2x2 linear algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import WalkSummary, binomial_even_parity, ipow, summarize
from .distributions import IncrementDistribution
from .errors import ChainMismatch, InvalidParameter, SingularSystem, UnsupportedSupport

K_MAX = 10**6
CHAIN_TOL = 1e-10
_ROW_TOL = 1e-12
_DET_GUARD = 1e-300

Matrix2 = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class AbsorbingChainSpec:
    """Canonical form P = [[Q, R], [0, I]] with 2 transient and 2 absorbing states."""

    q: Matrix2
    r: Matrix2

    def __post_init__(self):
        q = tuple(tuple(float(v) for v in row) for row in self.q)
        r = tuple(tuple(float(v) for v in row) for row in self.r)
        if len(q) != 2 or len(r) != 2 or any(len(row) != 2 for row in q + r):
            raise InvalidParameter("q and r must be 2x2")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        for v in q[0] + q[1] + r[0] + r[1]:
            if not -_ROW_TOL <= v <= 1.0 + _ROW_TOL:
                raise InvalidParameter(f"transition probability {v} outside [0, 1]")
        for i in range(2):
            total = q[i][0] + q[i][1] + r[i][0] + r[i][1]
            if abs(total - 1.0) > _ROW_TOL:
                raise InvalidParameter(f"row {i} of [Q | R] sums to {total}")

    def transition_matrix(self) -> np.ndarray:
        p = np.zeros((4, 4))
        p[:2, :2] = self.q
        p[:2, 2:] = self.r
        p[2:, 2:] = np.eye(2)
        return p

    def to_dict(self):
        return {"q": [list(row) for row in self.q], "r": [list(row) for row in self.r]}


@dataclass(frozen=True)
class ParityProbabilities:
    start_k: int
    p_even: float
    p_odd: float
    p_both: float

    def to_dict(self):
        return {"start_k": self.start_k, "p_even": self.p_even, "p_odd": self.p_odd, "p_both": self.p_both}

    @classmethod
    def from_dict(cls, d):
        return cls(d["start_k"], d["p_even"], d["p_odd"], d["p_both"])


def absorb(spec: AbsorbingChainSpec) -> np.ndarray:
    """Absorption probabilities B = (I - Q)^{-1} R by the 2x2 adjugate."""
    (q00, q01), (q10, q11) = spec.q
    (r00, r01), (r10, r11) = spec.r
    # spectral radius of Q must be < 1 for the Neumann series to converge
    tr, det_q = q00 + q11, q00 * q11 - q01 * q10
    disc = tr * tr - 4.0 * det_q
    radius = (abs(tr) + math.sqrt(disc)) / 2.0 if disc >= 0 else math.sqrt(det_q)
    if radius >= 1.0:
        raise SingularSystem(f"spectral radius of Q is {radius}")
    a, b, c, d = 1.0 - q00, -q01, -q10, 1.0 - q11
    det = a * d - b * c
    if abs(det) < _DET_GUARD:
        raise SingularSystem("I - Q is singular")
    n00, n01, n10, n11 = d / det, -b / det, -c / det, a / det
    return np.array(
        [
            [n00 * r00 + n01 * r10, n00 * r01 + n01 * r11],
            [n10 * r00 + n11 * r10, n10 * r01 + n11 * r11],
        ]
    )


def _check_k(k):
    if isinstance(k, bool) or int(k) != k or not 0 <= k <= K_MAX:
        raise InvalidParameter(f"start k must be an integer in [0, {K_MAX}], got {k!r}")
    return int(k)


def parity_chain(summary: WalkSummary, k: int, parity: str) -> AbsorbingChainSpec:
    """Chain whose absorbing state 2 is "negative at an even/odd time".

    States: 0 = start at k, 1 = at -1 with the opposite parity,
    2 = escape (never negative again), 3 = negative at the target parity.
    """
    k = _check_k(k)
    s = summary
    reach = ipow(s.rho, k + 1)
    # probability T_{-1} from k is even, given it is finite
    q_even = binomial_even_parity(k + 1, s.rho_odd)
    if parity == "even":
        direct = q_even
    elif parity == "odd":
        direct = 1.0 - q_even
    else:
        raise InvalidParameter(f"parity must be 'even' or 'odd', got {parity!r}")
    stay = s.tau * (1.0 - s.tau_odd)
    q = ((0.0, reach * (1.0 - direct)), (0.0, stay))
    r = ((1.0 - reach, reach * direct), (s.sigma, s.p_minus_one + s.tau * s.tau_odd))
    return AbsorbingChainSpec(q, r)


def closed_form_parity(summary: WalkSummary, k: int) -> ParityProbabilities:
    k = _check_k(k)
    s = summary
    reach = ipow(s.rho, k + 1)
    c = ipow(1.0 - 2.0 * s.rho_odd, k + 1)
    denom = 1.0 - s.tau * (1.0 - s.tau_odd)
    p_even = reach * (1.0 - 0.5 * s.sigma * (1.0 - c) / denom)
    p_odd = reach * (1.0 - 0.5 * s.sigma * (1.0 + c) / denom)
    p_both = reach * (1.0 - s.sigma / denom)
    return ParityProbabilities(k, p_even, p_odd, p_both)


def chain_parity(summary: WalkSummary, k: int) -> ParityProbabilities:
    k = _check_k(k)
    p_even = absorb(parity_chain(summary, k, "even"))[0, 1]
    p_odd = absorb(parity_chain(summary, k, "odd"))[0, 1]
    # E u O is the event T_{-1} < inf from k
    p_both = p_even + p_odd - ipow(summary.rho, k + 1)
    return ParityProbabilities(k, float(p_even), float(p_odd), float(p_both))


def prob_negative_parity(
    dist: IncrementDistribution, k: int, summary: WalkSummary | None = None
) -> ParityProbabilities:
    """P(E | S_0 = k), P(O | S_0 = k) and P(E n O | S_0 = k).

    E and O are the events that the walk is negative at some even time
    (n >= 2) or some odd time. The closed forms are evaluated and checked
    against absorption in the corresponding chains on every call.
    """
    k = _check_k(k)
    if summary is None:
        summary = summarize(dist)
    closed = closed_form_parity(summary, k)
    chain = chain_parity(summary, k)
    gap = max(
        abs(closed.p_even - chain.p_even),
        abs(closed.p_odd - chain.p_odd),
        abs(closed.p_both - chain.p_both),
    )
    if gap > CHAIN_TOL:
        raise ChainMismatch(f"closed form and chain absorption differ by {gap:.3g} at k={k}")
    return closed


def separable_ruin(y: IncrementDistribution, k: int, summary: WalkSummary | None = None) -> float:
    """P(S_n < 0 for some n | S_0 = k) for the walk with increments Y1 + Y2.

    Sampling the left-continuous walk driven by ``y`` at even times gives
    the walk driven by Y1 + Y2, so ruin is the even-time negativity of the
    former.
    """
    if y.min_support != -1:
        raise UnsupportedSupport("pass the left-continuous summand law, not the convolution")
    return prob_negative_parity(y, k, summary).p_even
