"""Self-auditing JSON report shared by the CLI commands.

Every agreement flag is stored next to the numbers and the tolerance it was
decided from, so :meth:`Report.audit` can recompute it from the report alone.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "series": 1e-8,  # analytic value may sit this far outside the series bracket
    "mc_sigmas": 3.0,  # analytic vs Monte Carlo, in standard errors
    "mc_abs": 1e-12,
    "chain": 1e-10,  # closed form vs chain absorption
    "published_hitting": 1e-5,
    "published_ruin": 1e-3,  # published to 3 decimals
}


def check_series(quantity, k, value, bracket, tol_key="series"):
    return {"kind": "series", "quantity": quantity, "k": k, "value": value,
            "lower": bracket.lower, "upper": bracket.upper, "tolerance": tol_key}


def check_reference(kind, quantity, k, value, reference, tol_key):
    return {"kind": kind, "quantity": quantity, "k": k, "value": value,
            "reference": reference, "tolerance": tol_key}


def check_mc(quantity, k, value, est):
    lo, hi = est.bracket()
    return {"kind": "mc", "quantity": quantity, "k": k, "value": value,
            "estimate": est.estimate, "std_error": est.std_error,
            "lower": lo, "upper": hi, "tolerance": "mc_sigmas"}


def evaluate(check: dict, tolerances: dict) -> bool:
    """Pass/fail of one check row under ``tolerances``."""
    kind, v = check["kind"], check["value"]
    if kind == "series":
        tol = tolerances[check["tolerance"]]
        ok = check["lower"] - tol <= v <= check["upper"] + tol
    elif kind == "mc":
        slack = tolerances["mc_sigmas"] * check["std_error"] + tolerances["mc_abs"]
        ok = check["lower"] - slack <= v <= check["upper"] + slack
    else:
        ok = abs(v - check["reference"]) <= tolerances[check["tolerance"]]
    return bool(ok)  # numpy scalars compare to numpy.bool_, which json rejects


def flag_name(check: dict) -> str:
    name = f"{check['kind']}:{check['quantity']}"
    return name if check["k"] is None else f"{name}[k={check['k']}]"


@dataclass
class Report:
    """Plain-JSON report; all fields hold JSON-native values."""

    command: str
    input_spec: dict | None = None
    distribution: dict | None = None
    walk_summary: dict | None = None
    parity: list = field(default_factory=list)
    chains: list = field(default_factory=list)
    oracle_brackets: dict = field(default_factory=dict)
    simulation: dict | None = None
    checks: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    agreement_flags: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def add_check(self, check: dict) -> bool:
        self.checks.append(check)
        ok = evaluate(check, self.tolerances)
        self.agreement_flags[flag_name(check)] = ok
        return ok

    def audit(self) -> dict:
        """Flags recomputed from the stored checks and tolerances."""
        return {flag_name(c): evaluate(c, self.tolerances) for c in self.checks}

    @property
    def all_agree(self) -> bool:
        return all(self.agreement_flags.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"schema_version": d.pop("schema_version"), **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        d = dict(d)
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {version!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))
