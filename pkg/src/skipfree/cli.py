"""Command-line front end.

    skipfree analyze  --spec law.json --k 0,1,2 [--out report.json]
    skipfree simulate --spec law.json --k 0 --trials 1000000 --seed 42 --streams 8
    skipfree compare  --spec law.json --k 0,2 --trials 100000
    skipfree paper-examples

A JSON report goes to ``--out`` (``-`` for stdout); an aligned table goes to
stdout, or CSV with ``--csv``. Exit codes: 0 success, 2 invalid input,
3 numerical failure, 4 disagreement between methods.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import chains, oracle
from .analytic import summarize
from .chains import parity_chain, prob_negative_parity, separable_ruin
from .distributions import IncrementDistribution, from_spec, make_poisson_shifted
from .errors import AnalyticError, InputError, SpecError
from .montecarlo import DEFAULT_HORIZON, SimulationConfig, simulate_summary
from .report import Report, check_mc, check_reference, check_series, flag_name

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_DISAGREE = 0, 2, 3, 4
DEFAULT_TRIALS = 100_000
WIDE_BRACKET = 1e-6

# published values of the two worked examples
PUBLISHED_HITTING = {"rho": 0.417188, "sigma": 0.311713, "tau": 0.465157, "rho_odd": 0.706513, "tau_odd": 0.817032}
PUBLISHED_RUIN = {0: 0.317, 2: 0.059}
PUBLISHED_RUIN_COEFFS = {"half_sigma": 0.156, "one_minus_two_rho_odd": -0.413, "denominator": 0.915}


# -----------------------------------------------------------------------------
# pipeline pieces
# -----------------------------------------------------------------------------

def load_spec(path: str) -> tuple[dict, IncrementDistribution]:
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec {path!r} is not valid JSON: {exc}") from exc
    return spec, from_spec(spec)


def describe(dist: IncrementDistribution) -> dict:
    return {
        "min_support": dist.min_support,
        "probabilities": list(dist.probabilities),
        "truncation_defect": dist.truncation_defect,
        "family_tag": dist.family_tag,
    }


def _new_report(command, spec, dist) -> Report:
    report = Report(command, input_spec=spec, distribution=None if dist is None else describe(dist))
    if dist is not None and dist.truncation_defect > 0.0:
        report.diagnostics.append(f"truncation_defect={dist.truncation_defect:.3g}")
    return report


def _analytic(report: Report, dist, k_list):
    summary = summarize(dist)
    report.walk_summary = summary.to_dict()
    report.diagnostics.extend(summary.diagnostics)
    parity = {}
    for k in k_list:
        pp = prob_negative_parity(dist, k, summary)
        parity[k] = pp
        report.parity.append(pp.to_dict())
        closed = chains.closed_form_parity(summary, k)
        via_chain = chains.chain_parity(summary, k)
        for name in ("p_even", "p_odd", "p_both"):
            report.add_check(check_reference("chain", name, k, getattr(closed, name), getattr(via_chain, name), "chain"))
        for which in ("even", "odd"):
            spec = parity_chain(summary, k, which)
            report.chains.append({
                "k": k,
                "parity": which,
                "states": ["start", "at -1, wrong parity", "escape", f"negative at {which} time"],
                "transition_matrix": spec.transition_matrix().tolist(),
                "absorption": chains.absorb(spec).tolist(),
            })
    return summary, parity


def _oracle(report: Report, dist, summary):
    brackets = {"rho": oracle.rho_series(dist), "rho_odd": oracle.rho_odd_series(dist, rho=summary.rho)}
    for name, bracket in brackets.items():
        report.oracle_brackets[name] = bracket.to_dict()
        report.add_check(check_series(name, None, getattr(summary, name), bracket))
        if bracket.width > WIDE_BRACKET:
            report.diagnostics.append(f"wide_bracket:{name} width={bracket.width:.3g}")


def _simulate(report: Report, dist, k_list, cfg):
    estimates = []
    for k in k_list:
        for est in simulate_summary(dist, k, cfg):
            # walk-from-0 quantities do not depend on k; keep the first run's
            if est.k is None and k != k_list[0]:
                continue
            estimates.append(est)
    report.simulation = {
        "trials": cfg.trials,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "estimates": [e.to_dict() for e in estimates],
    }
    censored = max((e.censored_fraction for e in estimates), default=0.0)
    if censored > 0.0:
        report.diagnostics.append(f"censored_fraction up to {censored:.3g} at horizon {cfg.horizon}")
    return estimates


def analytic_values(summary, parity) -> dict:
    values = {(q, None): getattr(summary, q) for q in ("rho", "rho_odd", "sigma", "tau", "tau_odd")}
    for k, pp in parity.items():
        values[("p_even", k)] = pp.p_even
        values[("p_odd", k)] = pp.p_odd
        values[("p_both", k)] = pp.p_both
        values[("p_neg", k)] = pp.p_even + pp.p_odd - pp.p_both
    return values


# -----------------------------------------------------------------------------
# commands
# -----------------------------------------------------------------------------

def cmd_analyze(spec_path, k_list) -> Report:
    spec, dist = load_spec(spec_path)
    report = _new_report("analyze", spec, dist)
    _analytic(report, dist, k_list)
    return report


def cmd_simulate(spec_path, k_list, trials, horizon, seed, streams) -> Report:
    spec, dist = load_spec(spec_path)
    cfg = SimulationConfig(trials, horizon, seed, streams)
    report = _new_report("simulate", spec, dist)
    _simulate(report, dist, k_list, cfg)
    return report


def cmd_compare(spec_path, k_list, trials, horizon, seed, streams) -> Report:
    spec, dist = load_spec(spec_path)
    cfg = SimulationConfig(trials, horizon, seed, streams)
    report = _new_report("compare", spec, dist)
    summary, parity = _analytic(report, dist, k_list)
    _oracle(report, dist, summary)
    values = analytic_values(summary, parity)
    for est in _simulate(report, dist, k_list, cfg):
        report.add_check(check_mc(est.quantity, est.k, values[(est.quantity, est.k)], est))
    return report


def cmd_paper_examples() -> Report:
    dist = make_poisson_shifted(1.5)
    report = _new_report("paper-examples", {"family": "poisson_shifted", "lambda": 1.5}, dist)
    summary, _ = _analytic(report, dist, sorted(PUBLISHED_RUIN))
    for name, ref in PUBLISHED_HITTING.items():
        report.add_check(check_reference("published_hitting", name, None, getattr(summary, name), ref, "published_hitting"))
    # the separable walk with X + 2 ~ Poi(3) is driven by two Poi(1.5) - 1 summands
    for k, ref in PUBLISHED_RUIN.items():
        report.add_check(check_reference("published_ruin", "ruin", k, separable_ruin(dist, k, summary), ref, "published_ruin"))
    coeffs = {
        "half_sigma": summary.sigma / 2.0,
        "one_minus_two_rho_odd": 1.0 - 2.0 * summary.rho_odd,
        "denominator": 1.0 - summary.tau * (1.0 - summary.tau_odd),
    }
    for name, ref in PUBLISHED_RUIN_COEFFS.items():
        report.add_check(check_reference("published_ruin", name, None, coeffs[name], ref, "published_ruin"))
    return report


# -----------------------------------------------------------------------------
# output
# -----------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "PASS" if v else "FAIL"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def report_table(report: Report) -> tuple[list[str], list[list]]:
    """Header and rows of the human-facing table for ``report``."""
    if report.command == "simulate":
        header = ["quantity", "k", "estimate", "std_error", "ci95_low", "ci95_high", "censored"]
        rows = [[e["quantity"], e["k"], e["estimate"], e["std_error"], *e["ci95"], e["censored_fraction"]]
                for e in report.simulation["estimates"]]
        return header, rows
    if report.command == "analyze":
        header = ["quantity", "k", "value"]
        s = report.walk_summary
        rows = [[q, None, s[q]] for q in ("rho", "sigma", "tau", "rho_odd", "tau_odd", "y_star")]
        for pp in report.parity:
            rows += [[q, pp["start_k"], pp[q]] for q in ("p_even", "p_odd", "p_both")]
        return header, rows
    if report.command == "compare":
        header = ["quantity", "k", "analytic", "series_low", "series_high",
                  "mc_estimate", "mc_ci95_low", "mc_ci95_high", "censored", "agree"]
        rows = {}
        for c in report.checks:
            if c["kind"] not in ("series", "mc"):
                continue
            row = rows.setdefault((c["quantity"], c["k"]), [c["quantity"], c["k"], c["value"]] + [None] * 6 + [True])
            row[-1] = row[-1] and report.agreement_flags[flag_name(c)]
            if c["kind"] == "series":
                row[3], row[4] = c["lower"], c["upper"]
        for e in report.simulation["estimates"]:
            row = rows.get((e["quantity"], e["k"]))
            if row is not None:
                row[5], (row[6], row[7]), row[8] = e["estimate"], e["ci95"], e["censored_fraction"]
        return header, list(rows.values())
    header = ["check", "quantity", "k", "computed", "reference", "delta", "tolerance", "agree"]
    rows = []
    for c in report.checks:
        if c["kind"] == "chain":
            continue
        rows.append([c["kind"], c["quantity"], c["k"], c["value"], c["reference"],
                     c["value"] - c["reference"], report.tolerances[c["tolerance"]],
                     report.agreement_flags[flag_name(c)]])
    return header, rows


def render_text(header, rows) -> str:
    cells = [header] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(v.rjust(w) if j > 0 else v.ljust(w) for j, (v, w) in enumerate(zip(r, widths))) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -----------------------------------------------------------------------------
# entry point
# -----------------------------------------------------------------------------

def parse_k_list(text: str) -> list[int]:
    try:
        ks = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k expects a comma-separated list of integers, got {text!r}") from None
    if not ks or any(k < 0 or k > chains.K_MAX for k in ks):
        raise argparse.ArgumentTypeError(f"--k values must lie in [0, {chains.K_MAX}]")
    return sorted(set(ks))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skipfree", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_spec=True):
        if with_spec:
            p.add_argument("--spec", required=True, metavar="PATH", help="distribution spec JSON")
            p.add_argument("--k", type=parse_k_list, default=[0], metavar="LIST", help="start states, e.g. 0,1,2")
        p.add_argument("--out", metavar="PATH", help="write the JSON report here ('-' for stdout)")
        p.add_argument("--csv", action="store_true", help="print the table as CSV")

    def sim(p, trials):
        p.add_argument("--trials", type=int, default=trials, metavar="N")
        p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, metavar="N")
        p.add_argument("--seed", type=int, default=0, metavar="N")
        p.add_argument("--streams", type=int, default=1, metavar="N", help="worker threads; output does not depend on it")

    common(sub.add_parser("analyze", help="closed-form probabilities and parity chains"))
    p = sub.add_parser("simulate", help="Monte Carlo estimates")
    common(p)
    sim(p, DEFAULT_TRIALS)
    p = sub.add_parser("compare", help="analytic vs series oracle vs Monte Carlo")
    common(p)
    sim(p, DEFAULT_TRIALS)
    common(sub.add_parser("paper-examples", help="reproduce the two worked examples"), with_spec=False)
    return parser


def run(args) -> Report:
    if args.command == "analyze":
        return cmd_analyze(args.spec, args.k)
    if args.command == "simulate":
        return cmd_simulate(args.spec, args.k, args.trials, args.horizon, args.seed, args.streams)
    if args.command == "compare":
        return cmd_compare(args.spec, args.k, args.trials, args.horizon, args.seed, args.streams)
    return cmd_paper_examples()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = run(args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnalyticError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    header, rows = report_table(report)
    sys.stdout.write(render_csv(header, rows) if args.csv else render_text(header, rows))
    for line in report.diagnostics:
        print(f"note: {line}", file=sys.stderr)
    if args.out == "-":
        sys.stdout.write(report.to_json())
    elif args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(report.to_json())
        except OSError as exc:
            print(f"error: cannot write {args.out!r}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    return EXIT_OK if report.all_agree else EXIT_DISAGREE


if __name__ == "__main__":
    sys.exit(main())
