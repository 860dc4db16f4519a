"""Hitting, parity and ruin probabilities of left-continuous random walks.

The closed forms in :mod:`skipfree.analytic` and :mod:`skipfree.chains` are
cross-checked by an exact series oracle (:mod:`skipfree.oracle`) and a seeded
Monte Carlo simulator (:mod:`skipfree.montecarlo`).
"""

from ._accel import BACKEND
from .analytic import (
    Extinction,
    WalkSummary,
    extinction_probability,
    sigma_tau,
    solve_rho,
    solve_rho_odd,
    summarize,
    tau_odd,
)
from .chains import (
    AbsorbingChainSpec,
    ParityProbabilities,
    absorb,
    parity_chain,
    prob_negative_parity,
    separable_ruin,
)
from .distributions import (
    IncrementDistribution,
    OffspringDistribution,
    convolve,
    drift,
    from_spec,
    make_finite,
    make_geometric_shifted,
    make_poisson_shifted,
    offspring_from_increment,
    pgf,
)
from .errors import AnalyticError, InputError, WalkError
from .montecarlo import SimulationConfig, SimulationEstimate, sample_increment, sample_increments, simulate_summary
from .oracle import LatticePmf, SeriesBracket, first_passage_pmf, rho_odd_series, rho_series, walk_pmf
from .report import Report

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AbsorbingChainSpec",
    "AnalyticError",
    "Extinction",
    "IncrementDistribution",
    "InputError",
    "LatticePmf",
    "OffspringDistribution",
    "ParityProbabilities",
    "Report",
    "SeriesBracket",
    "SimulationConfig",
    "SimulationEstimate",
    "WalkError",
    "WalkSummary",
    "absorb",
    "convolve",
    "drift",
    "extinction_probability",
    "first_passage_pmf",
    "from_spec",
    "make_finite",
    "make_geometric_shifted",
    "make_poisson_shifted",
    "offspring_from_increment",
    "parity_chain",
    "pgf",
    "prob_negative_parity",
    "rho_odd_series",
    "rho_series",
    "sample_increment",
    "sample_increments",
    "separable_ruin",
    "sigma_tau",
    "simulate_summary",
    "solve_rho",
    "solve_rho_odd",
    "summarize",
    "tau_odd",
    "walk_pmf",
]
