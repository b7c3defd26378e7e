"""Eigenfunction post-processing: pointwise bounds, averages, identities.

Cross-sectional averages are computed by slicing the triangulation with
vertical lines: a P1 field is linear along each cut segment, so the
per-triangle trapezoid contributions are exact.  These feed the vertical
derivative bound, the max/min ratio, the sup-norm ratio, and the
cross-sectional eigenvalue identity for thin bodies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenSpectrum
from .errors import HypothesisDeviationError, ThinspecError
from .fem import element_gradients
from .geometry import SliceProfile
from .mesh import TriMesh

EPS_LIMIT = 1.0 / 40.0


@dataclass(frozen=True)
class EigenfunctionProbe:
    """Pointwise diagnostics of one eigenfunction, Lemma-convention scaled."""

    index: int
    eigenvalue: float
    sup_u: float
    inf_u: float
    max_abs_dy: float
    max_abs_grad: float
    strip_edges: np.ndarray
    strip_max_grad: np.ndarray
    nodal_x_range: tuple[float, float]


def _normalized_values(spectrum: EigenSpectrum, index: int) -> np.ndarray:
    u = np.array(spectrum.vector(index), dtype=float)
    if u.max() < -u.min():
        u = -u
    top = u.max()
    if top <= 0.0:
        raise ThinspecError("eigenfunction has no positive part to normalize")
    return u / top


def probe_eigenfunction(
    spectrum: EigenSpectrum, index: int, mesh: TriMesh | None = None, strips: int = 20
) -> EigenfunctionProbe:
    """Gradient and range diagnostics for the index-th eigenfunction."""
    if index < 1:
        raise ThinspecError("probe needs index >= 1 (nonconstant mode)")
    mesh = mesh or spectrum.mesh
    if mesh is None:
        raise ThinspecError("spectrum carries no mesh")
    u = _normalized_values(spectrum, index)
    grads = element_gradients(mesh, u)
    gnorm = np.hypot(grads[:, 0], grads[:, 1])
    centroids = mesh.nodes[mesh.triangles].mean(axis=1)
    x_lo = float(mesh.nodes[:, 0].min())
    x_hi = float(mesh.nodes[:, 0].max())
    edges = np.linspace(x_lo, x_hi, strips + 1)
    strip_max = np.zeros(strips)
    bins = np.clip(np.searchsorted(edges, centroids[:, 0]) - 1, 0, strips - 1)
    np.maximum.at(strip_max, bins, gnorm)
    uv = u[mesh.triangles]
    tol = 1e-12
    sign_change = (uv.max(axis=1) > tol) & (uv.min(axis=1) < -tol)
    if np.any(sign_change):
        xs = mesh.nodes[mesh.triangles[sign_change], 0]
        nodal_range = (float(xs.min()), float(xs.max()))
    else:
        nodal_range = (math.nan, math.nan)
    return EigenfunctionProbe(
        index=index,
        eigenvalue=spectrum.value(index),
        sup_u=float(u.max()),
        inf_u=float(u.min()),
        max_abs_dy=float(np.max(np.abs(grads[:, 1]))),
        max_abs_grad=float(gnorm.max()),
        strip_edges=edges,
        strip_max_grad=strip_max,
        nodal_x_range=nodal_range,
    )


def cross_section_integrals(
    mesh: TriMesh, u: np.ndarray, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(integral of u over the chord, chord length) at each abscissa.

    Query abscissae falling on mesh nodes are nudged so every vertical cut
    passes through triangle interiors, where the cut segments tile the
    chord exactly once.
    """
    node_x = np.unique(mesh.nodes[:, 0])
    xs = np.array(xs, dtype=float)
    span = node_x[-1] - node_x[0]
    for i, x in enumerate(xs):
        j = np.searchsorted(node_x, x)
        near = min(
            abs(x - node_x[j - 1]) if j > 0 else math.inf,
            abs(node_x[j] - x) if j < len(node_x) else math.inf,
        )
        if near < 1e-9 * span:
            xs[i] = x + 2e-9 * span
    t = mesh.triangles
    px = mesh.nodes[:, 0]
    py = mesh.nodes[:, 1]
    tx = px[t]
    t_lo = tx.min(axis=1)
    t_hi = tx.max(axis=1)
    integrals = np.zeros(len(xs))
    chords = np.zeros(len(xs))
    for qi, x in enumerate(xs):
        mask = (t_lo < x) & (t_hi > x)
        if not np.any(mask):
            continue
        tm = t[mask]
        acc_int = 0.0
        acc_len = 0.0
        xm = px[tm]
        ym = py[tm]
        um = u[tm]
        for tri_x, tri_y, tri_u in zip(xm, ym, um):
            pts = []
            for a, b in ((0, 1), (1, 2), (2, 0)):
                xa, xb = tri_x[a], tri_x[b]
                if (xa - x) * (xb - x) < 0.0:
                    s = (x - xa) / (xb - xa)
                    pts.append(
                        (tri_y[a] + s * (tri_y[b] - tri_y[a]),
                         tri_u[a] + s * (tri_u[b] - tri_u[a]))
                    )
            if len(pts) == 2:
                (y0, u0), (y1, u1) = pts
                seg = abs(y1 - y0)
                acc_int += 0.5 * (u0 + u1) * seg
                acc_len += seg
        integrals[qi] = acc_int
        chords[qi] = acc_len
    return integrals, chords


@dataclass(frozen=True)
class EtaIdentityReport:
    """Both sides of the cross-sectional eigenvalue identity."""

    mu_fem: float
    mu_identity: float
    rel_mismatch: float
    eps: float
    intervals: int
    c1: float
    max_abs_eta: float
    dirichlet_energy: float
    weighted_norm: float
    eta_term: float


def eta_decomposition(
    spectrum: EigenSpectrum,
    profile: SliceProfile,
    eps: float,
    intervals: int = 256,
) -> EtaIdentityReport:
    """Evaluate mu = [int h (u~')^2 - int eta u~'] / int h u~^2 numerically.

    u~ is the centered, end-clamped cross-sectional average of the first
    eigenfunction and eta(x) = h u~'(x) + mu int_0^x h u~.  The identity is
    algebraic; its numerical mismatch measures the consistency of the FEM
    eigenpair with the quadrature chain.
    """
    if not 0.0 < eps:
        raise ThinspecError("eps must be positive")
    if eps >= EPS_LIMIT:
        raise HypothesisDeviationError(
            "eps_out_of_range", f"eps={eps} outside the thin regime (< 1/40)"
        )
    mesh = spectrum.mesh
    if mesh is None:
        raise ThinspecError("spectrum carries no mesh")
    mu = spectrum.value(1)
    u = np.array(spectrum.vector(1), dtype=float)
    u = u / np.max(np.abs(u))
    dx = 1.0 / intervals
    mids = (np.arange(intervals) + 0.5) * dx
    ints, chords = cross_section_integrals(mesh, u, mids)
    good = chords > 0.0
    ubar = np.zeros(intervals)
    ubar[good] = ints[good] / chords[good]
    if np.any(~good):
        # Degenerate tips: extend the nearest computed average.
        idx = np.where(good)[0]
        ubar[~good] = np.interp(np.where(~good)[0], idx, ubar[idx])
    clamped_x = np.clip(mids, eps, 1.0 - eps)
    uhat = np.interp(clamped_x, mids, ubar)
    h_mid = profile(mids)
    mass = float(np.sum(h_mid) * dx)
    if mass <= 0.0:
        raise ThinspecError("profile carries no mass")
    c1 = float(np.sum(h_mid * uhat) * dx / mass)
    util = uhat - c1
    # Cumulative integral of h * util by an independent trapezoid rule on
    # interval boundaries: deliberately a different quadrature than the
    # centering above, so the identity cannot telescope exactly and its
    # mismatch genuinely reflects the numerical chain.
    all_bnd = np.arange(0, intervals + 1) * dx
    util_bnd = np.interp(all_bnd, mids, util)
    g_bnd = profile(all_bnd) * util_bnd
    accum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (g_bnd[:-1] + g_bnd[1:]) * dx)]
    )
    boundaries = all_bnd[1:-1]
    h_bnd = profile(boundaries)
    du = np.diff(util) / dx
    eta = h_bnd * du + mu * accum[1:-1]
    dirichlet_energy = float(np.sum(h_bnd * du * du) * dx)
    eta_term = float(np.sum(eta * du) * dx)
    weighted_norm = float(np.sum(h_mid * util * util) * dx)
    if weighted_norm <= 0.0:
        raise ThinspecError("degenerate centered average: zero weighted norm")
    mu_identity = (dirichlet_energy - eta_term) / weighted_norm
    return EtaIdentityReport(
        mu_fem=mu,
        mu_identity=mu_identity,
        rel_mismatch=abs(mu - mu_identity) / abs(mu),
        eps=eps,
        intervals=intervals,
        c1=c1,
        max_abs_eta=float(np.max(np.abs(eta))) if len(eta) else 0.0,
        dirichlet_energy=dirichlet_energy,
        weighted_norm=weighted_norm,
        eta_term=eta_term,
    )


def linf_ratio(spectrum: EigenSpectrum, index: int = 1) -> float:
    """r = |u|_inf sqrt(V) / ((1 + mu) |u|_2) for the index-th eigenfunction.

    Eigenvectors are mass-orthonormal, so |u|_2 = 1 and the ratio reduces
    to the sup norm times sqrt(V).  The constant mode gives exactly 1.
    """
    mesh = spectrum.mesh
    if mesh is None:
        raise ThinspecError("spectrum carries no mesh")
    volume = float(np.sum(mesh.triangle_areas()))
    u = spectrum.vector(index)
    mu = spectrum.value(index)
    return float(np.max(np.abs(u)) * math.sqrt(volume) / (1.0 + mu))
