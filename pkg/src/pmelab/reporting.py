"""Check reports and their file formats.

A report records one verified estimate: the measured statistic, the
theoretical bound, the signed margin (positive = slack), a discretization
tolerance, and the pass flag.  The pass rule is

    upper bound:  pass  <=>  statistic <= bound + tolerance
    lower bound:  pass  <=>  statistic >= bound - tolerance

Serialized records carry exactly the fields
(name, params, statistic, bound, margin, tolerance, pass); emission is
deterministic and byte-stable for a fixed input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, float):
        return value
    if hasattr(value, "item"):  # numpy scalars
        return _jsonable(value.item())
    return str(value)


@dataclass
class CheckReport:
    name: str
    params: dict
    statistic: float
    bound: float
    tolerance: float
    direction: str  # "upper" or "lower"
    series: list = dc_field(default_factory=list)  # (t, statistic, bound) rows

    def __post_init__(self):
        if self.direction not in ("upper", "lower"):
            raise ValueError(f"direction must be 'upper' or 'lower', got {self.direction!r}")

    @property
    def margin(self) -> float:
        if self.direction == "upper":
            return self.bound - self.statistic
        return self.statistic - self.bound

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    def record(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "statistic": float(self.statistic),
            "bound": float(self.bound),
            "margin": float(self.margin),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
        }

    def renamed(self, name: str) -> "CheckReport":
        return CheckReport(name, self.params, self.statistic, self.bound,
                           self.tolerance, self.direction, self.series)


def upper_check(name: str, params: dict, statistic: float, bound: float,
                tolerance: float, series: list | None = None) -> CheckReport:
    return CheckReport(name, params, float(statistic), float(bound),
                       float(tolerance), "upper", series or [])


def lower_check(name: str, params: dict, statistic: float, bound: float,
                tolerance: float, series: list | None = None) -> CheckReport:
    return CheckReport(name, params, float(statistic), float(bound),
                       float(tolerance), "lower", series or [])


def is_negative_control(report_or_name) -> bool:
    name = report_or_name if isinstance(report_or_name, str) else report_or_name.name
    return name.startswith("control_")


def sorted_reports(reports: Sequence[CheckReport]) -> list[CheckReport]:
    def key(r: CheckReport):
        m = r.params.get("m", float("-inf"))
        try:
            m = float(m)
        except (TypeError, ValueError):
            m = float("-inf")
        return (r.name, m, json.dumps(_jsonable(r.params), sort_keys=True))

    return sorted(reports, key=key)


def emit_report(reports: Sequence[CheckReport], out_dir: str | Path) -> list[Path]:
    """Write the record file plus one flat table per check that carries a series.

    Records are sorted by (name, m) and floats use repr, so two runs with the
    same configuration and seed emit byte-identical files.
    """
    if not reports:
        raise ValueError("no reports to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    ordered = sorted_reports(reports)
    summary = out / "reports.jsonl"
    summary.write_text(
        "".join(json.dumps(r.record(), sort_keys=True) + "\n" for r in ordered))
    written.append(summary)

    for r in ordered:
        if not r.series:
            continue
        table = out / f"check_{r.name}.dat"
        lines = ["# t statistic bound margin"]
        for t, stat, bound in r.series:
            row_margin = bound - stat if r.direction == "upper" else stat - bound
            lines.append(f"{float(t)!r} {float(stat)!r} {float(bound)!r} {float(row_margin)!r}")
        table.write_text("\n".join(lines) + "\n")
        written.append(table)
    return written


def overall_exit_code(reports: Sequence[CheckReport]) -> int:
    """0 iff every regular check passes and every negative control fails."""
    for r in reports:
        if is_negative_control(r):
            if r.passed:
                return 1
        elif not r.passed:
            return 1
    return 0
