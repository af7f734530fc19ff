"""Structured results for verification runs.

Every verifier returns a CheckReport: an ordered list of named checks with
residual statistics against explicit thresholds, plus the hypotheses that
were assumed rather than verified.  Reports aggregate deterministically
(checks keep insertion order; statistics are over seeded samples in sample
order) and serialize to JSON that round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Tolerances:
    """Named residual thresholds.

    exact: identities that hold to rounding (closedness, d after d, signs)
    solve: linear-solve round trips and flat/Reeb/Hamiltonian residuals
    default: generic structural residuals; the CLI --tol flag rebinds this
    bracket: bracket-heavy identities (Jacobi and friends)
    deriv_check: symbolic vs finite-difference comparisons
    floor: nondegeneracy margins (volume coefficient, rank pivots, orbit size)
    match: solved-vs-supplied closed-form agreement
    """

    exact: float = 1e-12
    solve: float = 1e-10
    default: float = 1e-9
    bracket: float = 1e-8
    deriv_check: float = 1e-6
    floor: float = 1e-9
    match: float = 1e-12

    def with_default(self, tol: float) -> "Tolerances":
        return replace(self, default=float(tol))


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_residual: float = 0.0
    mean_residual: float = 0.0
    threshold: float = 0.0
    samples: int = 0
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "CheckResult":
        return CheckResult(**d)


@dataclass
class CheckReport:
    title: str
    seed: int = 0
    samples: int = 0
    checks: list[CheckResult] = field(default_factory=list)
    assumed: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    def add_residual(self, name: str, values, threshold: float,
                     detail: str = "") -> CheckResult:
        """Record max/mean absolute residual over samples; non-finite fails."""
        arr = np.atleast_1d(np.asarray(values, dtype=np.float64)).ravel()
        if arr.size == 0:
            return self.add(CheckResult(name, True, 0.0, 0.0, threshold, 0, detail or "no samples"))
        finite = bool(np.isfinite(arr).all())
        mx = float(np.max(np.abs(arr))) if finite else float("inf")
        mean = float(np.mean(np.abs(arr))) if finite else float("inf")
        ok = finite and mx <= threshold
        if not finite:
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            detail = (detail + "; " if detail else "") + f"non-finite residual at sample {bad}"
        return self.add(CheckResult(name, ok, mx, mean, threshold, int(arr.size), detail))

    def add_floor(self, name: str, values, floor: float, detail: str = "") -> CheckResult:
        """Pass when every |value| stays above the floor (nondegeneracy)."""
        arr = np.atleast_1d(np.asarray(values, dtype=np.float64)).ravel()
        finite = bool(np.isfinite(arr).all()) and arr.size > 0
        mn = float(np.min(np.abs(arr))) if finite else 0.0
        ok = finite and mn > floor
        note = f"min |value| {mn:.3e} vs floor {floor:.1e}"
        return self.add(CheckResult(name, ok, mn, mn, floor, int(arr.size),
                                    (detail + "; " if detail else "") + note))

    def add_exact(self, name: str, ok: bool, detail: str = "") -> CheckResult:
        return self.add(CheckResult(name, bool(ok), 0.0 if ok else 1.0, 0.0 if ok else 1.0,
                                    0.0, 0, detail))

    def assume(self, hypothesis: str):
        if hypothesis not in self.assumed:
            self.assumed.append(hypothesis)

    def merge(self, other: "CheckReport", prefix: str = ""):
        for c in other.checks:
            named = replace(c, name=f"{prefix}{c.name}") if prefix else c
            self.checks.append(named)
        for h in other.assumed:
            self.assume(h)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "seed": self.seed,
            "samples": self.samples,
            "passed": self.passed,
            "assumed": list(self.assumed),
            "checks": [c.to_dict() for c in self.checks],
        }

    @staticmethod
    def from_dict(d: dict) -> "CheckReport":
        rep = CheckReport(d["title"], d["seed"], d["samples"],
                          [CheckResult.from_dict(c) for c in d["checks"]],
                          list(d["assumed"]))
        return rep


@dataclass
class SectionOutcome:
    """One manifest check directive: expectation vs observed verdict."""

    name: str
    expect: str  # "pass" or "fail"
    report: CheckReport
    runtime_s: float = 0.0

    @property
    def matched(self) -> bool:
        return self.report.passed == (self.expect == "pass")

    def to_dict(self) -> dict:
        # runtimes are excluded so reports with equal seeds are byte-identical
        return {
            "name": self.name,
            "expect": self.expect,
            "matched": self.matched,
            "report": self.report.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "SectionOutcome":
        return SectionOutcome(d["name"], d["expect"],
                              CheckReport.from_dict(d["report"]))


@dataclass
class RunReport:
    target: str
    seed: int
    samples: int
    backend: str
    sections: list[SectionOutcome] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def verdict(self) -> str:
        return "pass" if all(s.matched for s in self.sections) else "fail"

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "target": self.target,
            "seed": self.seed,
            "samples": self.samples,
            "backend": self.backend,
            "verdict": self.verdict,
            "sections": [s.to_dict() for s in self.sections],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "RunReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return RunReport(
            d["target"], d["seed"], d["samples"], d["backend"],
            [SectionOutcome.from_dict(s) for s in d["sections"]],
            d["schema_version"],
        )

    @staticmethod
    def from_json(text: str) -> "RunReport":
        return RunReport.from_dict(json.loads(text))


def format_report(run: RunReport, quiet: bool = False) -> str:
    lines = [f"{run.target}: verdict {run.verdict} "
             f"(seed {run.seed}, samples {run.samples}, backend {run.backend})"]
    for sec in run.sections:
        mark = "ok" if sec.matched else "MISMATCH"
        lines.append(f"  [{mark}] {sec.name}: {'pass' if sec.report.passed else 'fail'} "
                     f"(expected {sec.expect}, {sec.runtime_s:.2f}s)")
        if quiet:
            continue
        for c in sec.report.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(
                f"      {status} {c.name}: max {c.max_residual:.3e} "
                f"thr {c.threshold:.1e} n={c.samples}"
                + (f" [{c.detail}]" if c.detail else "")
            )
        for h in sec.report.assumed:
            lines.append(f"      assumed: {h}")
    return "\n".join(lines)
