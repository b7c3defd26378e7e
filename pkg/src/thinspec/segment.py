"""Eigenvalues of the collapsing segment: [0,1] weighted by the slice profile.

The primary solver is a weighted P1 discretization of (h u')' + lambda h u
= 0 with natural boundary conditions: it needs no smoothness and accepts
weights vanishing at the endpoints (triangle tips).  The Liouville route
transforms a smooth strictly positive weight into a Dirichlet problem
-w'' + V w = lambda w with V = (3/4)[(ln H)']^2 - H''/(2H); it serves as a
cross-check only, after optional mollification of piecewise-linear input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigen import EigenSpectrum, cluster_indices, finalize_pairs
from .errors import SolverError, ThinspecError
from .geometry import SliceProfile, profile_from_samples

RICHARDSON_SAFETY = 2.0
_DENSE_CUTOFF = 700


@dataclass(frozen=True)
class WeightedSegment:
    """Unit segment with measure H(x) dx, H normalized to unit mass."""

    profile: SliceProfile
    total_mass: float
    concave: bool

    def weight(self, x) -> np.ndarray:
        return self.profile(x) / self.total_mass


def segment_from_profile(profile: SliceProfile) -> WeightedSegment:
    if profile.mass <= 0.0:
        raise ThinspecError("profile carries no mass")
    t = profile.breakpoints
    if t[0] < -1e-12 or t[-1] > 1.0 + 1e-12:
        raise ThinspecError("segment weights live on [0, 1]")
    return WeightedSegment(
        profile=profile, total_mass=profile.mass, concave=profile.concave
    )


def segment_from_function(fn, samples: int = 2001) -> WeightedSegment:
    """Segment from an analytic weight sampled on a uniform grid."""
    t = np.linspace(0.0, 1.0, samples)
    return segment_from_profile(profile_from_samples(t, np.asarray([fn(x) for x in t], dtype=float)))


def _solve_generalized(K, M, k: int, n: int):
    if n <= _DENSE_CUTOFF:
        return scipy.linalg.eigh(K.toarray(), M.toarray(), subset_by_index=[0, k - 1])
    rng = np.random.default_rng(2024_08_10)
    try:
        return spla.eigsh(
            K,
            k=k,
            M=M,
            sigma=-1.0,
            which="LM",
            v0=rng.standard_normal(n),
            maxiter=max(2000, 40 * k),
            ncv=min(n - 1, max(4 * k, 40)),
        )
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        raise SolverError("1D eigensolver failed to converge") from exc


def _weighted_grid(seg: WeightedSegment, nodes: int) -> np.ndarray:
    grid = np.union1d(
        np.linspace(0.0, 1.0, nodes + 1), np.clip(seg.profile.breakpoints, 0.0, 1.0)
    )
    # Profiles of finely-faceted bodies cluster breakpoints quadratically
    # near tips; elements far below the solver scale only poison the mass
    # matrix conditioning.  Merging at a fraction of the uniform spacing
    # perturbs the weight by O(tol^1.5), far below discretization error.
    tol = max(1e-9, 0.02 / nodes)
    keep = [grid[0]]
    for x in grid[1:-1]:
        if x - keep[-1] >= tol:
            keep.append(x)
    if grid[-1] - keep[-1] < tol:
        keep.pop()
    keep.append(grid[-1])
    return np.asarray(keep)


def _assemble_weighted(seg: WeightedSegment, grid: np.ndarray):
    """Exact element integrals for a weight linear on each element."""
    h = seg.weight(grid)
    dx = np.diff(grid)
    if np.any(dx <= 0.0):
        raise SolverError("non-increasing 1D grid")
    hl, hr = h[:-1], h[1:]
    k_loc = 0.5 * (hl + hr) / dx
    m_ll = dx * (hl / 4.0 + hr / 12.0)
    m_rr = dx * (hl / 12.0 + hr / 4.0)
    m_lr = dx * (hl + hr) / 12.0
    n = len(grid)
    i = np.arange(n - 1)
    rows = np.concatenate([i, i + 1, i, i + 1])
    cols = np.concatenate([i, i + 1, i + 1, i])
    kv = np.concatenate([k_loc, k_loc, -k_loc, -k_loc])
    mv = np.concatenate([m_ll, m_rr, m_lr, m_lr])
    K = sp.coo_matrix((kv, (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((mv, (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _sl_solve(seg: WeightedSegment, m: int, nodes: int):
    grid = _weighted_grid(seg, nodes)
    K, M = _assemble_weighted(seg, grid)
    vals, vecs = _solve_generalized(K, M, m + 1, len(grid))
    vals, vecs, residuals = finalize_pairs(vals, vecs, K, M)
    return grid, vals, vecs, residuals


def sl_eigs(seg: WeightedSegment, m: int, nodes: int = 1000) -> EigenSpectrum:
    """Smallest m+1 weighted-Neumann eigenpairs with node-doubling error bars."""
    if m < 1 or m > 40:
        raise ThinspecError("m must lie in [1, 40]")
    if nodes < 200:
        raise ThinspecError("nodes must be >= 200")
    grid, vals, vecs, residuals = _sl_solve(seg, m, nodes)
    _, vals_f, _, _ = _sl_solve(seg, m, 2 * nodes)
    errors = RICHARDSON_SAFETY * np.abs(vals - vals_f)
    errors = np.maximum(errors, 1e-12 * np.maximum(1.0, np.abs(vals)))
    if abs(vals[0]) > max(1e-8, errors[0]):
        raise SolverError(f"weighted zero mode came out at {vals[0]!r}")
    clusters = cluster_indices(vals, errors, first_index=0)
    return EigenSpectrum(
        eigenvalues=vals,
        vectors=vecs,
        error_estimates=errors,
        residuals=residuals,
        clusters=clusters,
        first_index=0,
        grid=grid,
        meta={
            "nodes": int(nodes),
            "problem": "weighted-segment",
            "fine_eigenvalues": vals_f.tolist(),
        },
    )


def smooth_segment(seg: WeightedSegment, radius: float = 0.02, samples: int = 4001) -> WeightedSegment:
    """Mollify the weight with a C^2 bump of the given radius.

    Perturbs eigenvalues by O(radius^2); intended only to make
    piecewise-linear profiles admissible for the Liouville cross-check.
    The weight is extended by its endpoint values before convolution.
    """
    t = np.linspace(0.0, 1.0, samples)
    dx = t[1] - t[0]
    half = max(1, int(round(radius / dx)))
    s = np.arange(-half, half + 1) * dx
    kernel = (1.0 - (s / (half * dx)) ** 2) ** 3
    kernel = np.clip(kernel, 0.0, None)
    kernel /= kernel.sum()
    values = seg.weight(t)
    padded = np.concatenate(
        [np.full(half, values[0]), values, np.full(half, values[-1])]
    )
    smoothed = np.convolve(padded, kernel, mode="valid")
    return segment_from_profile(profile_from_samples(t, smoothed))


@dataclass(frozen=True)
class SchroedingerProblem:
    """Dirichlet problem -w'' + V w = lambda w on (0,1)."""

    grid: np.ndarray
    potential: np.ndarray
    meta: dict = field(default_factory=dict)


def liouville_transform(seg: WeightedSegment, samples: int = 2001) -> SchroedingerProblem:
    """Potential V = (3/4)[(ln H)']^2 - H''/(2H) by central differences.

    Requires the weight to be bounded below; piecewise-linear profiles
    should pass through :func:`smooth_segment` first.
    """
    t = np.linspace(0.0, 1.0, samples)
    h = seg.weight(t)
    if float(h.min()) < 1e-6:
        raise ThinspecError(
            "weight not bounded below by 1e-6; use the weighted solver "
            "(sl_eigs) or smooth_segment first"
        )
    dx = t[1] - t[0]
    dh = np.gradient(h, dx, edge_order=2)
    d2h = np.empty_like(h)
    d2h[1:-1] = (h[2:] - 2.0 * h[1:-1] + h[:-2]) / dx**2
    d2h[0] = d2h[1]
    d2h[-1] = d2h[-2]
    v = 0.75 * (dh / h) ** 2 - d2h / (2.0 * h)
    if seg.concave:
        floor = float(v.min())
        if floor < -1e-4 * max(1.0, float(np.max(np.abs(v)))):
            raise SolverError(
                f"log-concave weight produced negative potential {floor}"
            )
    return SchroedingerProblem(grid=t, potential=v, meta={"samples": samples})


def _schroedinger_solve(grid: np.ndarray, v: np.ndarray, m: int):
    n = len(grid)
    dx = np.diff(grid)
    i = np.arange(n - 1)
    k_loc = 1.0 / dx
    rows = np.concatenate([i, i + 1, i, i + 1])
    cols = np.concatenate([i, i + 1, i + 1, i])
    kv = np.concatenate([k_loc, k_loc, -k_loc, -k_loc])
    K = sp.coo_matrix((kv, (rows, cols)), shape=(n, n)).tolil()
    # Potential term and mass use the same consistent weighted-P1 integrals.
    vl, vr = v[:-1], v[1:]
    pv = np.concatenate(
        [
            dx * (vl / 4.0 + vr / 12.0),
            dx * (vl / 12.0 + vr / 4.0),
            dx * (vl + vr) / 12.0,
            dx * (vl + vr) / 12.0,
        ]
    )
    P = sp.coo_matrix((pv, (rows, cols)), shape=(n, n))
    ml = np.concatenate([dx / 3.0, dx / 3.0, dx / 6.0, dx / 6.0])
    M = sp.coo_matrix((ml, (rows, cols)), shape=(n, n)).tocsr()
    A = (K.tocsr() + P.tocsr()).tolil()
    # Dirichlet ends eliminated.
    free = np.arange(1, n - 1)
    Af = A.tocsr()[free][:, free]
    Mf = M[free][:, free]
    vals, vecs_f = _solve_generalized(Af.tocsr(), Mf.tocsr(), m, len(free))
    vals, vecs_f, residuals = finalize_pairs(vals, vecs_f, Af.tocsr(), Mf.tocsr())
    vecs = np.zeros((n, m))
    vecs[1:-1] = vecs_f
    return vals, vecs, residuals


def dirichlet_schroedinger_eigs(prob: SchroedingerProblem, m: int) -> EigenSpectrum:
    """Smallest m Dirichlet eigenvalues of -w'' + V w = lambda w."""
    if m < 1 or m > 40:
        raise ThinspecError("m must lie in [1, 40]")
    vals, vecs, residuals = _schroedinger_solve(prob.grid, prob.potential, m)
    fine_grid = np.linspace(0.0, 1.0, 2 * (len(prob.grid) - 1) + 1)
    fine_v = np.interp(fine_grid, prob.grid, prob.potential)
    vals_f, _, _ = _schroedinger_solve(fine_grid, fine_v, m)
    errors = RICHARDSON_SAFETY * np.abs(vals - vals_f)
    errors = np.maximum(errors, 1e-12 * np.maximum(1.0, np.abs(vals)))
    clusters = cluster_indices(vals, errors, first_index=1)
    return EigenSpectrum(
        eigenvalues=vals,
        vectors=vecs,
        error_estimates=errors,
        residuals=residuals,
        clusters=clusters,
        first_index=1,
        grid=prob.grid,
        meta={"problem": "dirichlet-schroedinger"},
    )


@dataclass(frozen=True)
class BoundCheckRow:
    k: int
    value: float
    bound: float
    margin: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class PiSquaredReport:
    rows: tuple[BoundCheckRow, ...]
    skipped: bool
    flag: str | None

    @property
    def passed(self) -> bool:
        return not self.skipped and all(r.passed for r in self.rows)


def pi_squared_bound_check(
    seg: WeightedSegment, m: int, nodes: int = 1000, factor: float = 3.0
) -> PiSquaredReport:
    """Check mu_k(N) >= k^2 pi^2 for k <= m on a log-concave weight."""
    if not seg.concave:
        return PiSquaredReport(rows=(), skipped=True, flag="weight_not_concave")
    spec = sl_eigs(seg, m, nodes)
    rows = []
    for k in range(1, m + 1):
        value = spec.value(k)
        bound = k * k * math.pi * math.pi
        tol = factor * spec.error(k)
        margin = value - bound
        rows.append(
            BoundCheckRow(
                k=k,
                value=value,
                bound=bound,
                margin=margin,
                tolerance=tol,
                passed=bool(margin >= -tol),
            )
        )
    return PiSquaredReport(rows=tuple(rows), skipped=False, flag=None)
