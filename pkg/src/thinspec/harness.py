"""Run the full verification battery over a configured corpus."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

from .checks import (
    CheckRow,
    _row,
    body_rows,
    check_dn,
    check_mu1_refined,
    check_thresholds,
    solve_body,
)
from .config import HarnessConfig
from .families import Body, DomainFamily, generate, make_body, slab_rectangle, slab_subdomains
from .report import ComparisonReport

SQRT_HALF = math.sqrt(0.5)


def _solve_and_check(args) -> list[CheckRow]:
    body, kmax, nodes_1d, factor = args
    sol = solve_body(body, kmax=kmax, nodes_1d=nodes_1d)
    rows = body_rows(sol, kmax=kmax, factor=factor)
    rows.extend(_conjecture_rows(sol, factor))
    return rows


def _conjecture_rows(sol, factor) -> list[CheckRow]:
    """Track the multiplicity-vs-width conjecture as a datapoint table."""
    rows = []
    for cluster in sol.spectrum2d.clusters:
        if 1 in cluster and len(cluster) >= 2:
            rows.append(
                _row(
                    "conjecture-width-datapoint", sol.body.name, 1,
                    sol.body.eps, ">=", SQRT_HALF, 1e-9, kind="info",
                    provenance={"cluster": cluster},
                )
            )
    return rows


def run_all(config: HarnessConfig) -> tuple[ComparisonReport, float]:
    """Execute every check; returns the report and the wall-clock seconds."""
    start = time.perf_counter()
    report = ComparisonReport(config=config.describe())
    bodies: list[Body] = []
    for family in config.families:
        bodies.extend(generate(family))
    jobs = [(b, config.kmax, config.nodes_1d, config.tolerance_factor) for b in bodies]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            for rows in pool.map(_solve_and_check, jobs):
                report.extend(rows)
    else:
        for job in jobs:
            report.extend(_solve_and_check(job))

    for family in config.mu1_families:
        fam_bodies = [
            make_body(family, eps) for eps in sorted(config.mu1_eps_grid, reverse=True)
        ]
        report.extend(
            check_mu1_refined(
                fam_bodies, family, nodes_1d=max(config.nodes_1d, 4000),
                factor=config.tolerance_factor,
            )
        )

    slabs = [slab_rectangle(config.dn_rho1)]
    slabs.extend(slab_subdomains(config.dn_rho1, config.dn_count, config.seed))
    report.extend(check_dn(slabs, factor=config.tolerance_factor))
    report.extend(check_thresholds())
    return report, time.perf_counter() - start
