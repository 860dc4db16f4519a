"""Acceptance criteria 1-8, at their stated tolerances and runtime budgets.

Each test appends one PASS/FAIL line to the summary printed at the end of
the pytest run. Run this file directly for just the acceptance gate:

    python tests/test_acceptance.py
"""

from __future__ import annotations

import contextlib
import sys
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES, random_suite
from skipfree.analytic import extinction_probability, solve_rho, solve_rho_odd, summarize
from skipfree.chains import chain_parity, closed_form_parity, prob_negative_parity, separable_ruin
from skipfree.cli import main
from skipfree.distributions import OffspringDistribution, make_finite, make_poisson_shifted, offspring_from_increment, pgf
from skipfree.montecarlo import SimulationConfig, simulate_summary
from skipfree.oracle import rho_odd_series, rho_series


@contextlib.contextmanager
def criterion(number, title, budget=None):
    """Time the body, record a PASS/FAIL line, and enforce the runtime budget."""
    start = time.perf_counter()
    failure = None
    try:
        yield
    except AssertionError as exc:
        failure = exc
    elapsed = time.perf_counter() - start
    if failure is None and budget is not None and elapsed > budget:
        failure = AssertionError(f"took {elapsed:.2f} s, budget {budget} s")
    status = "PASS" if failure is None else "FAIL"
    detail = "" if failure is None else f" -- {str(failure).splitlines()[0]}"
    ACCEPTANCE_LINES.append(f"criterion {number}: {status}  {title} ({elapsed:.2f} s){detail}")
    if failure is not None:
        raise failure


@pytest.fixture(scope="module")
def suite():
    laws = random_suite(200)
    assert len(laws) >= 200
    return laws


def test_criterion_1_published_hitting_values():
    expected = {"rho": 0.417188, "sigma": 0.311713, "tau": 0.465157, "rho_odd": 0.706513, "tau_odd": 0.817032}
    with criterion(1, "Poisson(1.5)-1 hitting and parity probabilities", budget=1.0):
        s = summarize(make_poisson_shifted(1.5))
        for name, value in expected.items():
            assert abs(getattr(s, name) - value) <= 1e-5, f"{name}={getattr(s, name)} vs {value}"


def test_criterion_2_published_ruin_values():
    with criterion(2, "ruin of the separable Poisson(3)-2 walk from k=0 and k=2", budget=1.0):
        y = make_poisson_shifted(1.5)
        for k, value in ((0, 0.317), (2, 0.059)):
            got = separable_ruin(y, k)
            assert abs(got - value) <= 1e-3, f"k={k}: {got} vs {value}"


def test_criterion_3_identities(suite):
    with criterion(3, "identities over 200 random laws", budget=30.0):
        for d in suite:
            p = d.p_minus_one
            s = summarize(d)
            assert abs(p + s.tau + s.sigma - 1.0) <= 1e-10
            assert p < s.rho < 1.0
            assert s.rho_odd > 0.5
            assert abs(pgf(d, s.rho) - 1.0) <= 1e-10
            assert abs(pgf(d, s.rho * (1.0 - 2.0 * s.rho_odd)) + 1.0) <= 1e-10
            for k in range(6):
                pp = prob_negative_parity(d, k, s)
                assert abs(pp.p_even + pp.p_odd - pp.p_both - s.rho ** (k + 1)) <= 1e-10


def test_criterion_4_closed_form_vs_chain(suite):
    with criterion(4, "closed form vs chain absorption over the suite"):
        for d in suite:
            s = summarize(d)
            for k in range(6):
                a, b = closed_form_parity(s, k), chain_parity(s, k)
                gap = max(abs(a.p_even - b.p_even), abs(a.p_odd - b.p_odd), abs(a.p_both - b.p_both))
                assert gap <= 1e-10, f"k={k}: gap {gap:.3g}"


def test_criterion_5_series_oracle(suite):
    with criterion(5, "first-passage series brackets and simple-walk closed forms", budget=60.0):
        for d in suite:
            rho = solve_rho(d)
            r_odd = solve_rho_odd(d, rho).rho_odd
            b, bo = rho_series(d, 2000), rho_odd_series(d, 2000, rho=rho)
            assert b.contains(rho), f"rho={rho} outside [{b.lower}, {b.upper}]"
            assert bo.contains(r_odd), f"rho_odd={r_odd} outside [{bo.lower}, {bo.upper}]"
        for p in (0.55, 0.7, 0.9):
            d = make_finite([(-1, 1.0 - p), (1, p)])
            s = summarize(d)
            rho = (1.0 - p) / p
            assert abs(s.rho - rho) <= 1e-12
            assert abs(s.sigma - (2.0 * p - 1.0)) <= 1e-12
            assert abs(s.tau - (1.0 - p)) <= 1e-12
            assert abs(s.rho_odd - 1.0) <= 1e-12
            assert abs(s.tau_odd) <= 1e-12
            assert abs(prob_negative_parity(d, 0, s).p_even - rho**2) <= 1e-12


def _mc_failures(dist, seed):
    s = summarize(dist)
    bad = []
    for k in (0, 2):
        pp = prob_negative_parity(dist, k, s)
        values = {"rho": s.rho, "rho_odd": s.rho_odd, "sigma": s.sigma, "tau": s.tau, "tau_odd": s.tau_odd,
                  "p_even": pp.p_even, "p_odd": pp.p_odd, "p_both": pp.p_both,
                  "p_neg": pp.p_even + pp.p_odd - pp.p_both}
        for e in simulate_summary(dist, k, SimulationConfig(10**6, horizon=10**4, seed=seed, streams=4)):
            lo, hi = e.bracket()
            slack = 3.0 * e.std_error + 1e-12
            v = values[e.quantity]
            if not lo - slack <= v <= hi + slack:
                bad.append(f"{e.quantity}[k={k}]={v:.6g} vs {e.estimate:.6g}+-{e.std_error:.2g}")
    return bad


def test_criterion_6_monte_carlo():
    with criterion(6, "Monte Carlo (10^6 trials) vs analytic for Poisson(1.5)-1 and the p=0.7 walk", budget=120.0):
        bad = _mc_failures(make_poisson_shifted(1.5), seed=2024) + _mc_failures(make_finite([(-1, 0.3), (1, 0.7)]), seed=2024)
        assert not bad, "; ".join(bad)


def test_criterion_7_determinism(tmp_path, capsys):
    spec = tmp_path / "law.json"
    spec.write_text('{"family": "poisson_shifted", "lambda": 1.5}')
    with criterion(7, "simulate output identical for streams 1, 4, 8"):
        outputs = []
        for streams in (1, 4, 8):
            code = main(["simulate", "--spec", str(spec), "--k", "0,2", "--trials", "1000000",
                         "--seed", "42", "--streams", str(streams), "--out", "-"])
            assert code == 0
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1] == outputs[2]


def test_criterion_8_branching_process(suite):
    with criterion(8, "extinction probability equals rho; Poi(0.9) is subcritical"):
        for d in suite:
            ext = extinction_probability(offspring_from_increment(d))
            assert abs(ext.probability - solve_rho(d)) <= 1e-10
        n = np.arange(60)
        poi = OffspringDistribution(tuple(stats.poisson.pmf(n, 0.9)), float(stats.poisson.sf(59, 0.9)))
        assert tuple(extinction_probability(poi)) == (1.0, True)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider", "-W", "ignore::pytest.PytestAssertRewriteWarning"]))
