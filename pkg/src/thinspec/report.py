"""Report assembly: deterministic JSON, CSV, and plain plot data.

The main report carries no timestamps, so identical configurations yield
byte-identical files; wall-clock and environment details go to a separate
metadata file.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

from .checks import CheckRow

_ROW_SORT_KEY = lambda r: (r.check, r.body, -1 if r.k is None else r.k)  # noqa: E731

CSV_FIELDS = [
    "check",
    "body",
    "k",
    "lhs",
    "relation",
    "rhs",
    "margin",
    "tolerance",
    "passed",
    "kind",
    "flags",
]


@dataclass
class ComparisonReport:
    """All rows of one harness run plus the configuration that made them."""

    config: dict
    rows: list[CheckRow] = field(default_factory=list)

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    def sorted_rows(self) -> list[CheckRow]:
        return sorted(self.rows, key=_ROW_SORT_KEY)

    def summary(self) -> dict:
        rows = self.rows
        failed = [r for r in rows if r.kind == "assertion" and not r.passed]
        return {
            "total_rows": len(rows),
            "assertions": sum(1 for r in rows if r.kind == "assertion"),
            "failed_assertions": len(failed),
            "findings": sum(1 for r in rows if r.kind == "finding"),
            "skipped": sum(1 for r in rows if r.kind == "skipped"),
            "info": sum(1 for r in rows if r.kind == "info"),
            "failed_list": [
                {"check": r.check, "body": r.body, "k": r.k, "margin": r.margin}
                for r in sorted(failed, key=_ROW_SORT_KEY)
            ],
        }

    @property
    def ok(self) -> bool:
        return self.summary()["failed_assertions"] == 0

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": self.summary(),
            "rows": [r.to_dict() for r in self.sorted_rows()],
        }


def write_report(report: ComparisonReport, outdir, runtime_s: float | None = None) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    body = json.dumps(report.to_json_dict(), indent=1, sort_keys=True)
    (out / "report.json").write_text(body + "\n")
    with open(out / "report.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for r in report.sorted_rows():
            d = r.to_dict()
            d["flags"] = "|".join(d["flags"])
            writer.writerow({k: d[k] for k in CSV_FIELDS})
    meta = {
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "runtime_seconds": runtime_s,
        "platform": platform.platform(),
        "python": platform.python_version(),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    _write_plot_data(report, out / "plots")
    return out / "report.json"


def _write_plot_data(report: ComparisonReport, plotdir: Path) -> None:
    """Two-column text files for external plotting."""
    plotdir.mkdir(parents=True, exist_ok=True)
    gap_rows = [
        r
        for r in report.sorted_rows()
        if r.check == "mu1-refined-exponent" and r.provenance.get("points")
    ]
    for r in gap_rows:
        lines = ["# eps  mu1_gap"]
        for p in r.provenance["points"]:
            lines.append(f"{p['eps']!r} {p['gap']!r}")
        (plotdir / f"mu1_gap_{r.body}.dat").write_text("\n".join(lines) + "\n")
    sandwich = {}
    for r in report.sorted_rows():
        if r.check == "sandwich-upper":
            sandwich.setdefault(r.body, []).append((r.k, r.lhs, r.rhs))
    for body, rows in sandwich.items():
        lines = ["# k  mu_k_omega  mu_k_segment"]
        for k, lo, hi in sorted(rows):
            lines.append(f"{k} {lo!r} {hi!r}")
        (plotdir / f"spectrum_{body}.dat").write_text("\n".join(lines) + "\n")


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def format_summary(report_dict: dict) -> str:
    s = report_dict["summary"]
    lines = [
        f"rows: {s['total_rows']}  assertions: {s['assertions']}  "
        f"failed: {s['failed_assertions']}  findings: {s['findings']}  "
        f"skipped: {s['skipped']}  info: {s['info']}"
    ]
    for f in s["failed_list"]:
        lines.append(
            f"  FAIL {f['check']} body={f['body']} k={f['k']} margin={f['margin']:.3e}"
        )
    return "\n".join(lines)
