"""Per-body theorem checks and the cross-module comparison battery.

Every check emits replayable rows carrying (lhs, relation, rhs, margin,
tolerance): margins are oriented so a pass is margin >= -tolerance, and
tolerances follow the central policy of ``factor`` times the sum of the
contributing solver error estimates.  Checks whose standing hypotheses a
body violates are recorded as skipped or downgraded to findings rather
than silently dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .constants import alt_simplicity_threshold, constants, eps_k, kroger_bound
from .eigen import EigenSpectrum
from .families import Body, SlabBody, slab_dirichlet_tag
from .fem import mixed_eigs, neumann_eigs
from .geometry import h_derivative_bound_check
from .mesh import triangulate
from .probes import EPS_LIMIT, eta_decomposition, linf_ratio, probe_eigenfunction
from .segment import segment_from_profile, sl_eigs

NON_C1_FLAG = "non_C1_boundary"
LINF_RATIO_BUDGET = 1.0
NOISE_FLOOR_MU1_GAP = 1e-6
ETA_MISMATCH_LIMIT = 0.02
RATIO_HEADROOM = 0.05


@dataclass(frozen=True)
class CheckRow:
    check: str
    body: str
    k: int | None
    lhs: float
    relation: str
    rhs: float
    margin: float
    tolerance: float
    passed: bool
    kind: str = "assertion"  # assertion | finding | info | skipped
    flags: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _row(check, body, k, lhs, relation, rhs, tolerance, kind="assertion",
         flags=(), provenance=None) -> CheckRow:
    if relation == "<=":
        margin = rhs - lhs
    elif relation == ">=":
        margin = lhs - rhs
    elif relation == "==":
        margin = -abs(lhs - rhs)
    else:
        raise ValueError(f"unknown relation {relation!r}")
    passed = bool(margin >= -tolerance)
    if kind == "assertion" and not passed and NON_C1_FLAG in flags and (
        check.startswith("simplicity")
    ):
        # Simplicity thresholds assume a C^1 boundary; polygon violations
        # are recorded as findings, not failures.
        kind = "finding"
    return CheckRow(
        check=check,
        body=body,
        k=k,
        lhs=float(lhs),
        relation=relation,
        rhs=float(rhs),
        margin=float(margin),
        tolerance=float(tolerance),
        passed=passed,
        kind=kind,
        flags=tuple(flags),
        provenance=provenance or {},
    )


def target_h_for(eps: float) -> float:
    """Mesh-size policy: resolve the short direction, cap the budget."""
    return float(np.clip(eps / 2.5, 0.004, 0.05))


@dataclass
class BodySolution:
    """All solves for one body, shared by every check."""

    body: Body
    spectrum2d: EigenSpectrum
    spectrum1d: EigenSpectrum
    target_h: float
    nodes_1d: int

    @property
    def provenance(self) -> dict:
        return {
            "target_h": self.target_h,
            "h_mesh": self.spectrum2d.meta.get("h_mesh"),
            "nodes_2d": self.spectrum2d.meta.get("nodes"),
            "nodes_1d": self.nodes_1d,
            "eps": self.body.eps,
        }


def solve_body(body: Body, kmax: int = 5, nodes_1d: int = 2000,
               target_h: float | None = None) -> BodySolution:
    th = target_h if target_h is not None else target_h_for(body.eps)
    mesh = triangulate(body.polygon, th)
    spectrum2d = neumann_eigs(mesh, kmax + 1)
    seg = segment_from_profile(body.profile)
    spectrum1d = sl_eigs(seg, kmax + 1, nodes_1d)
    return BodySolution(
        body=body,
        spectrum2d=spectrum2d,
        spectrum1d=spectrum1d,
        target_h=th,
        nodes_1d=nodes_1d,
    )


def check_sandwich(sol: BodySolution, kmax: int, factor: float = 3.0) -> list[CheckRow]:
    """mu_k(N) >= mu_k(Omega) >= (1 - 2 eps (1 + mu_k(N))) mu_k(N)."""
    rows = []
    eps = sol.body.eps
    for k in range(1, kmax + 1):
        mo = sol.spectrum2d.value(k)
        eo = sol.spectrum2d.error(k)
        mn = sol.spectrum1d.value(k)
        en = sol.spectrum1d.error(k)
        rows.append(
            _row(
                "sandwich-upper", sol.body.name, k, mo, "<=", mn,
                factor * (eo + en), flags=(NON_C1_FLAG,),
                provenance=sol.provenance,
            )
        )
        lower = (1.0 - 2.0 * eps * (1.0 + mn)) * mn
        # Sensitivity of the bound to the mu_k(N) estimate.
        dbound = abs(1.0 - 2.0 * eps - 4.0 * eps * mn)
        rows.append(
            _row(
                "sandwich-lower", sol.body.name, k, mo, ">=", lower,
                factor * (eo + dbound * en), flags=(NON_C1_FLAG,),
                provenance=sol.provenance,
            )
        )
    return rows


def check_kroger(sol: BodySolution, kmax: int, factor: float = 3.0) -> list[CheckRow]:
    rows = []
    for k in range(1, kmax + 1):
        mo = sol.spectrum2d.value(k)
        rows.append(
            _row(
                "kroger-ceiling", sol.body.name, k, mo, "<=",
                kroger_bound(2, k), factor * sol.spectrum2d.error(k),
                flags=(NON_C1_FLAG,), provenance=sol.provenance,
            )
        )
    return rows


def check_gap(sol: BodySolution, factor: float = 3.0, kmax: int = 5) -> list[CheckRow]:
    """Any multiplicity cluster among mu_1..mu_kmax sits at >= pi^2/(4 eps^2)."""
    rows = []
    eps = sol.body.eps
    bound = math.pi**2 / (4.0 * eps * eps)
    for cluster in sol.spectrum2d.clusters:
        inside = [k for k in cluster if 1 <= k <= kmax]
        if len(inside) < 2:
            continue
        value = float(np.mean([sol.spectrum2d.value(k) for k in inside]))
        err = float(max(sol.spectrum2d.error(k) for k in inside))
        rows.append(
            _row(
                "gap-cluster", sol.body.name, inside[0], value, ">=", bound,
                factor * err, flags=(NON_C1_FLAG,),
                provenance={**sol.provenance, "cluster": inside},
            )
        )
    return rows


def check_simplicity(sol: BodySolution, kmax: int, factor: float = 3.0) -> list[CheckRow]:
    """Below the eps_k threshold, mu_1..mu_k must be pairwise separated."""
    rows = []
    eps = sol.body.eps
    spec = sol.spectrum2d
    for k in range(1, kmax + 1):
        threshold = eps_k(k)
        if eps >= threshold:
            rows.append(
                _row(
                    "simplicity-threshold", sol.body.name, k, eps, ">=",
                    threshold, 0.0, kind="info", flags=(NON_C1_FLAG,),
                    provenance=sol.provenance,
                )
            )
            continue
        # Simplicity of mu_1..mu_k needs every gap up to (mu_k, mu_{k+1})
        # to exceed the cluster tolerance.
        worst_gap = math.inf
        worst_tol = 0.0
        for i in range(1, k + 1):
            gap = spec.value(i + 1) - spec.value(i)
            tol = max(
                3.0 * (spec.error(i) + spec.error(i + 1)),
                1e-6 * max(1.0, spec.value(i + 1)),
            )
            if gap - tol < worst_gap - worst_tol:
                worst_gap, worst_tol = gap, tol
        rows.append(
            _row(
                "simplicity-gaps", sol.body.name, k, worst_gap, ">=",
                worst_tol, 0.0, flags=(NON_C1_FLAG,),
                provenance={**sol.provenance, "eps_k": threshold},
            )
        )
    return rows


def check_probes(sol: BodySolution, factor: float = 3.0) -> list[CheckRow]:
    """Pointwise eigenfunction checks: derivative bound, range ratio, norms."""
    rows = []
    body = sol.body
    eps = body.eps
    spec = sol.spectrum2d
    probe = probe_eigenfunction(spec, 1)
    c2 = constants(2)
    ratio = probe.sup_u / (-probe.inf_u)
    rows.append(
        _row(
            "range-ratio", body.name, 1, ratio, "<=",
            1.0 / c2.c_n + RATIO_HEADROOM, 0.0, flags=(NON_C1_FLAG,),
            provenance=sol.provenance,
        )
    )
    if eps < EPS_LIMIT:
        rows.append(
            _row(
                "vertical-derivative", body.name, 1, probe.max_abs_dy, "<=",
                48.0 * spec.value(1) * eps, 0.0, flags=(NON_C1_FLAG,),
                provenance={**sol.provenance, "max_abs_grad": probe.max_abs_grad},
            )
        )
    else:
        rows.append(
            _row(
                "vertical-derivative", body.name, 1, probe.max_abs_dy, "<=",
                48.0 * spec.value(1) * eps, math.inf, kind="skipped",
                flags=(NON_C1_FLAG, "eps_out_of_range"),
                provenance=sol.provenance,
            )
        )
    r = linf_ratio(spec, 1)
    rows.append(
        _row(
            "linf-ratio", body.name, 1, r, "<=", LINF_RATIO_BUDGET, 0.0,
            flags=(NON_C1_FLAG,), provenance=sol.provenance,
        )
    )
    hrep = h_derivative_bound_check(body.profile)
    rows.append(
        _row(
            "chord-derivative-bound", body.name, None, hrep.max_violation,
            "<=", 0.0, 1e-9 * max(1.0, float(np.max(body.profile.values))),
            flags=(NON_C1_FLAG,),
            provenance={**sol.provenance, "checked": hrep.checked},
        )
    )
    if eps < EPS_LIMIT:
        # Asserted at the acceptance tolerance only in the eps <= 0.02
        # regime the identity check targets; recorded for thicker thin
        # bodies all the same.
        eta = eta_decomposition(spec, body.profile, eps)
        rows.append(
            _row(
                "eta-identity", body.name, 1, eta.rel_mismatch, "<=",
                ETA_MISMATCH_LIMIT, 0.0,
                kind="assertion" if eps <= 0.0201 else "info",
                flags=(NON_C1_FLAG,),
                provenance={
                    **sol.provenance,
                    "mu_identity": eta.mu_identity,
                    "max_abs_eta": eta.max_abs_eta,
                },
            )
        )
    else:
        rows.append(
            _row(
                "eta-identity", body.name, 1, math.nan, "<=",
                ETA_MISMATCH_LIMIT, math.inf, kind="skipped",
                flags=(NON_C1_FLAG, "eps_out_of_range"),
                provenance=sol.provenance,
            )
        )
    return rows


def check_pi_squared(sol: BodySolution, kmax: int, factor: float = 3.0) -> list[CheckRow]:
    """mu_k(N) >= k^2 pi^2 whenever the weight is certified concave."""
    rows = []
    if not sol.body.profile.concave:
        return [
            _row(
                "segment-pi2", sol.body.name, None, math.nan, ">=", 0.0,
                math.inf, kind="skipped", flags=("weight_not_concave",),
                provenance=sol.provenance,
            )
        ]
    for k in range(1, kmax + 1):
        rows.append(
            _row(
                "segment-pi2", sol.body.name, k, sol.spectrum1d.value(k), ">=",
                k * k * math.pi**2, factor * sol.spectrum1d.error(k),
                provenance=sol.provenance,
            )
        )
    return rows


def body_rows(sol: BodySolution, kmax: int = 5, factor: float = 3.0) -> list[CheckRow]:
    rows = []
    rows.extend(check_sandwich(sol, kmax, factor))
    rows.extend(check_kroger(sol, kmax, factor))
    rows.extend(check_gap(sol, factor, kmax))
    rows.extend(check_simplicity(sol, kmax, factor))
    rows.extend(check_probes(sol, factor))
    rows.extend(check_pi_squared(sol, kmax, factor))
    return rows


def _extrapolated(spec: EigenSpectrum, k: int) -> float:
    fine = spec.meta.get("fine_eigenvalues")
    coarse = spec.value(k)
    if fine is None:
        return coarse
    return (4.0 * fine[k - spec.first_index] - coarse) / 3.0


def check_mu1_refined(
    bodies: list[Body],
    family: str,
    nodes_1d: int = 4000,
    factor: float = 3.0,
) -> list[CheckRow]:
    """Fit mu_1(N) - mu_1(Omega) ~ C eps^p over an eps grid of one family.

    Richardson-extrapolated eigenvalues keep the gap above solver noise;
    gaps below the 1e-6 noise floor are excluded, and with fewer than two
    usable points the fit is reported as skipped (constant-profile bodies
    have no measurable gap).
    """
    gaps = []
    epss = []
    prov: dict = {"family": family, "points": []}
    for body in bodies:
        if body.eps >= EPS_LIMIT:
            continue
        sol = solve_body(body, kmax=1, nodes_1d=nodes_1d)
        mu_omega = _extrapolated(sol.spectrum2d, 1)
        mu_segment = _extrapolated(sol.spectrum1d, 1)
        gap = mu_segment - mu_omega
        prov["points"].append(
            {"eps": body.eps, "gap": gap, "mu_omega": mu_omega, "mu_segment": mu_segment}
        )
        if gap > NOISE_FLOOR_MU1_GAP:
            gaps.append(gap)
            epss.append(body.eps)
    name = f"{family}-family"
    if len(gaps) < 2:
        return [
            _row(
                "mu1-refined-exponent", name, None, math.nan, ">=", 1.7,
                math.inf, kind="skipped", flags=("gap_below_noise_floor",),
                provenance=prov,
            )
        ]
    slope, intercept = np.polyfit(np.log(epss), np.log(gaps), 1)
    prov["c_hat"] = float(math.exp(intercept))
    rows = [
        _row(
            "mu1-refined-exponent", name, None, float(slope), ">=", 1.7, 0.0,
            provenance=prov,
        ),
        _row(
            "mu1-refined-exponent-upper", name, None, float(slope), "<=", 2.3,
            0.0, provenance=prov,
        ),
    ]
    return rows


def check_dn(slabs: list[SlabBody], factor: float = 3.0,
             target_h: float | None = None) -> list[CheckRow]:
    """lambda_1 >= pi^2 / (4 rho1^2) for mixed problems in a slab."""
    rows = []
    for slab in slabs:
        bound = math.pi**2 / (4.0 * slab.rho1**2)
        th = target_h if target_h is not None else target_h_for(
            min(slab.rho1, 0.125)
        )
        mesh = triangulate(slab.polygon, th, dirichlet=slab_dirichlet_tag)
        spec = mixed_eigs(mesh, 2)
        lam1 = spec.value(1)
        rows.append(
            _row(
                "dn-heat-kernel", slab.name, 1, lam1, ">=", bound,
                factor * spec.error(1),
                provenance={
                    "rho1": slab.rho1,
                    "nodes": mesh.n_nodes,
                    "target_h": th,
                },
            )
        )
    return rows


def check_thresholds(kmax: int = 10) -> list[CheckRow]:
    """Closed-form threshold comparisons independent of any body."""
    from .bessel import bessel_zero

    rows = []
    for k in range(1, kmax + 1):
        rows.append(
            _row(
                "alt-threshold-weaker", "constants", k,
                alt_simplicity_threshold(k), "<=", eps_k(k), 0.0,
            )
        )
    j01 = bessel_zero(0.0, 1)
    for k in (1, 2, 5, 10):
        ident = eps_k(k) * (j01 + (k - 1) * math.pi / 2.0)
        rows.append(
            _row(
                "eps-k-identity", "constants", k, ident, "==",
                math.pi / 4.0, 1e-12,
            )
        )
    return rows
