"""Seeded trajectory simulation of the walk's hitting and parity events.

Every trajectory starts at 0 and is run for at most ``horizon`` steps. One
path serves all start states: from S_0 = k the walk is negative at time n
exactly when the path from 0 is at or below -k-1.

Reproducibility does not depend on the thread count. Trials are cut into
fixed blocks of ``BLOCK_SIZE``; block b draws from PCG64 seeded with
``SeedSequence(seed, spawn_key=(b,))``, and integer tallies are summed in
block order. ``streams`` only sets how many blocks run concurrently.

Censoring
---------
For any x in (0, 1) with g(x) <= 1, x**S_n is a supermartingale, so a walk
sitting d steps above a level ever reaches it with probability at most
x**d. Take x minimising E[x^X]. A trajectory that gets far enough above
every open level for the bound to drop below ``CENSOR_EPS`` retires as
escaped; one whose event is still open at the horizon (or when it can no
longer reach the level before the horizon) counts as censored unless the
bound is already below ``CENSOR_EPS``. Hence, in expectation, the truth of a
hit-type event lies in [estimate, estimate + censored_fraction] up to
``CENSOR_EPS``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .analytic import check_walk
from .distributions import IncrementDistribution, drift
from .errors import InvalidConfig, NonPositiveDrift, UnsupportedSupport

BLOCK_SIZE = 1 << 16
DEFAULT_HORIZON = 10_000
CENSOR_EPS = 1e-12
Z95 = 1.959963984540054

LEFT_CONTINUOUS_QUANTITIES = ("rho", "rho_odd", "sigma", "tau", "tau_odd", "p_even", "p_odd", "p_both", "p_neg")
# quantities whose truth sits above the estimate when trajectories are censored
HIT_TYPE = frozenset({"rho", "tau", "p_even", "p_odd", "p_both", "p_neg"})


@dataclass(frozen=True)
class SimulationConfig:
    trials: int
    horizon: int = DEFAULT_HORIZON
    seed: int = 0
    streams: int = 1

    def __post_init__(self):
        for name in ("trials", "horizon", "seed", "streams"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidConfig(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.trials < 1:
            raise InvalidConfig(f"trials must be >= 1, got {self.trials}")
        if self.horizon < 1:
            raise InvalidConfig(f"horizon must be >= 1, got {self.horizon}")
        if self.streams < 1:
            raise InvalidConfig(f"streams must be >= 1, got {self.streams}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class SimulationEstimate:
    """Proportion estimate with a Wald interval.

    ``n`` is the denominator: all ``trials``, or the conditioning subsample
    for ``rho_odd`` and ``tau_odd``. ``censored_fraction`` is relative to
    ``trials``. ``k`` is ``None`` for quantities of the walk started at 0.
    """

    quantity: str
    k: int | None
    estimate: float
    std_error: float
    ci95: tuple[float, float]
    ci95_clipped: tuple[float, float]
    censored_fraction: float
    n: int
    trials: int

    def bracket(self) -> tuple[float, float]:
        """Where the truth lies (up to sampling error) once censored
        trajectories are allowed to resolve either way."""
        cf = self.censored_fraction
        if self.quantity == "sigma":
            return max(self.estimate - cf, 0.0), self.estimate
        if self.quantity in HIT_TYPE:
            return self.estimate, min(self.estimate + cf, 1.0)
        # conditional: up to C censored trajectories may join the subsample
        c = round(cf * self.trials)
        if c == 0:
            return self.estimate, self.estimate
        hits = self.estimate * self.n
        return hits / (self.n + c), (hits + c) / (self.n + c)

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "k": self.k,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "ci95": list(self.ci95),
            "ci95_clipped": list(self.ci95_clipped),
            "censored_fraction": self.censored_fraction,
            "n": self.n,
            "trials": self.trials,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["quantity"], d["k"], d["estimate"], d["std_error"],
            tuple(d["ci95"]), tuple(d["ci95_clipped"]), d["censored_fraction"], d["n"], d["trials"],
        )


def proportion(quantity, k, hits, n, censored, total):
    """Wald estimate of hits / n; an empty subsample gives 0 with SE 1/2."""
    if n == 0:
        return SimulationEstimate(quantity, k, 0.0, 0.5, (0.0, 1.0), (0.0, 1.0), censored / total, 0, total)
    p = hits / n
    se = math.sqrt(p * (1.0 - p) / n)
    lo, hi = p - Z95 * se, p + Z95 * se
    return SimulationEstimate(quantity, k, p, se, (lo, hi), (max(lo, 0.0), min(hi, 1.0)), censored / total, n, total)


def _sampled_law(dist: IncrementDistribution) -> np.ndarray:
    # the sampler puts the truncation defect on the largest support point
    probs = np.array(dist.pmf, dtype=np.float64)
    probs[-1] += dist.truncation_defect
    return probs


def escape_base(dist: IncrementDistribution) -> float:
    """x in (0, 1) minimising E[x^X] for the sampled law; 1.0 if no x has E[x^X] < 1."""
    probs = _sampled_law(dist)
    powers = dist.support.astype(np.float64)

    def mgf(x):
        return math.fsum(probs * x**powers)

    res = minimize_scalar(mgf, bounds=(1e-6, 1.0), method="bounded", options={"xatol": 1e-12})
    x = float(res.x)
    return x if mgf(x) < 1.0 else 1.0


def censor_cut(dist: IncrementDistribution, eps: float = CENSOR_EPS) -> int:
    """Smallest d with x**d <= eps; open events closer than d are censored."""
    x = escape_base(dist)
    if x >= 1.0:
        return np.iinfo(np.int64).max // 4
    return max(1, math.ceil(math.log(eps) / math.log(x)))


def sample_increments(dist: IncrementDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` i.i.d. draws by 32-bit inverse CDF on the sampled law."""
    thr, _, _ = kernels.sampling_table(_sampled_law(dist))
    u = kernels.split_words(rng.bit_generator.random_raw((size + 1) // 2), size)
    idx = np.minimum(np.searchsorted(thr, u, side="right"), thr.size - 1)
    return dist.support[idx]


def sample_increment(dist: IncrementDistribution, rng: np.random.Generator) -> int:
    return int(sample_increments(dist, rng, 1)[0])


def _check(dist: IncrementDistribution, k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise InvalidConfig(f"start k must be a non-negative integer, got {k!r}")
    if dist.min_support == -1:
        check_walk(dist)
    elif not drift(dist) > 0.0:
        raise NonPositiveDrift("drift must be positive")
    elif dist.probability(dist.min_support) <= 0.0:
        raise UnsupportedSupport("canonical law must put mass on its minimum")
    return int(k)


def simulate_counts(dist: IncrementDistribution, k: int, cfg: SimulationConfig, backend=None) -> np.ndarray:
    """Merged tally vector (see :mod:`skipfree.kernels`) over all blocks."""
    k = _check(dist, k)
    table = kernels.sampling_table(_sampled_law(dist))
    steps = dist.support.astype(np.int64)
    cut = censor_cut(dist)
    max_down = -dist.min_support
    n_blocks = -(-cfg.trials // BLOCK_SIZE)

    def run(b):
        size = min(BLOCK_SIZE, cfg.trials - b * BLOCK_SIZE)
        bitgen = np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(b,)))
        return kernels.run_walk_block(bitgen, table, steps, k, cfg.horizon, size, max_down, cut, backend)

    if cfg.streams == 1 or n_blocks == 1:
        parts = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.streams) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    total = np.zeros(kernels.N_COUNTS, dtype=np.int64)
    for part in parts:
        total += part
    return total


def estimates_from_counts(counts, k: int, trials: int, left_continuous: bool = True) -> list[SimulationEstimate]:
    c = [int(v) for v in counts]
    K = kernels
    neg = proportion("p_neg", k, c[K.NEG], trials, c[K.C_NEG], trials)
    if not left_continuous:
        return [neg]
    return [
        proportion("rho", None, c[K.HIT], trials, c[K.C_HIT], trials),
        proportion("rho_odd", None, c[K.HIT_ODD], c[K.HIT], c[K.C_HIT], trials),
        proportion("sigma", None, trials - c[K.NONPOS], trials, c[K.C_NONPOS], trials),
        proportion("tau", None, c[K.RET0], trials, c[K.C_NONPOS], trials),
        proportion("tau_odd", None, c[K.RET0_ODD], c[K.RET0], c[K.C_NONPOS], trials),
        proportion("p_even", k, c[K.EVEN], trials, c[K.C_EVEN], trials),
        proportion("p_odd", k, c[K.ODD], trials, c[K.C_ODD], trials),
        proportion("p_both", k, c[K.BOTH], trials, c[K.C_BOTH], trials),
        neg,
    ]


def simulate_summary(
    dist: IncrementDistribution, k: int, cfg: SimulationConfig, backend=None
) -> list[SimulationEstimate]:
    """Estimates of rho, rho_odd, sigma, tau, tau_odd (walk from 0) and of
    P(E), P(O), P(E n O), P(ever negative) from start ``k``.

    For laws with mass at -2 only P(ever negative) is estimated.
    """
    counts = simulate_counts(dist, k, cfg, backend)
    return estimates_from_counts(counts, int(k), cfg.trials, dist.min_support == -1)
