"""P1 finite elements for Neumann and mixed eigenproblems on triangle meshes.

Assembly is exact for piecewise-linear elements: per-triangle constant
gradients give the stiffness matrix, and the consistent mass matrix uses
the area/12 rule.  Eigenpairs come from a dense generalized solve on small
problems and shift-inverted Lanczos (negative shift keeps the operator
positive definite despite the Neumann kernel) on large ones.  Error bars
are Richardson estimates from one uniform mesh refinement.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigen import EigenSpectrum, cluster_indices, finalize_pairs
from .errors import SolverError, ThinspecError
from .mesh import DIRICHLET, TriMesh, refine4

DENSE_CUTOFF = 900
DENSE_FALLBACK_LIMIT = 3000
_EIGSH_SHIFT = -1.0
# Richardson: for O(h^2) eigenvalue convergence the true error of the
# coarse value is (4/3) * (mu_h - mu_{h/2}); the factor below covers it
# with headroom for pre-asymptotic meshes.
RICHARDSON_SAFETY = 2.0


def assemble(mesh: TriMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Stiffness and consistent mass matrices for P1 elements."""
    p = mesh.nodes
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    if np.any(det <= 0.0):
        raise SolverError("inverted or degenerate triangle in assembly")
    area = det / 2.0
    # Gradients of barycentric basis functions.
    gx = np.stack(
        [b[:, 1] - c[:, 1], c[:, 1] - a[:, 1], a[:, 1] - b[:, 1]], axis=1
    ) / det[:, None]
    gy = np.stack(
        [c[:, 0] - b[:, 0], a[:, 0] - c[:, 0], b[:, 0] - a[:, 0]], axis=1
    ) / det[:, None]
    ke = (
        gx[:, :, None] * gx[:, None, :] + gy[:, :, None] * gy[:, None, :]
    ) * area[:, None, None]
    me = (np.ones((3, 3)) + np.eye(3))[None, :, :] * (area / 12.0)[:, None, None]
    rows = np.repeat(t, 3, axis=1).reshape(-1)
    cols = np.tile(t, (1, 3)).reshape(-1)
    n = mesh.n_nodes
    K = sp.coo_matrix((ke.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def element_gradients(mesh: TriMesh, u: np.ndarray) -> np.ndarray:
    """Per-triangle constant gradient of a P1 field, shape (T, 2)."""
    p = mesh.nodes
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    gx = np.stack(
        [b[:, 1] - c[:, 1], c[:, 1] - a[:, 1], a[:, 1] - b[:, 1]], axis=1
    ) / det[:, None]
    gy = np.stack(
        [c[:, 0] - b[:, 0], a[:, 0] - c[:, 0], b[:, 0] - a[:, 0]], axis=1
    ) / det[:, None]
    uv = u[t]
    return np.stack([(gx * uv).sum(axis=1), (gy * uv).sum(axis=1)], axis=1)


def _solve_smallest(K, M, k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    if k >= n:
        raise SolverError(f"requested {k} eigenpairs of an n={n} system")
    if n <= DENSE_CUTOFF:
        vals, vecs = scipy.linalg.eigh(
            K.toarray(), M.toarray(), subset_by_index=[0, k - 1]
        )
        return vals, vecs
    rng = np.random.default_rng(2024_08_10)
    v0 = rng.standard_normal(n)
    try:
        vals, vecs = spla.eigsh(
            K,
            k=k,
            M=M,
            sigma=_EIGSH_SHIFT,
            which="LM",
            v0=v0,
            maxiter=max(2000, 40 * k),
            ncv=min(n - 1, max(4 * k, 40)),
        )
        return vals, vecs
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        if n <= DENSE_FALLBACK_LIMIT:
            vals, vecs = scipy.linalg.eigh(
                K.toarray(), M.toarray(), subset_by_index=[0, k - 1]
            )
            return vals, vecs
        raise SolverError(f"eigensolver failed to converge on n={n}") from exc


def _spectrum_on(mesh: TriMesh, m: int) -> tuple[np.ndarray, np.ndarray, object, object]:
    K, M = assemble(mesh)
    vals, vecs = _solve_smallest(K, M, m + 1, mesh.n_nodes)
    vals, vecs, residuals = finalize_pairs(vals, vecs, K, M)
    return vals, vecs, residuals, (K, M)


def neumann_eigs(mesh: TriMesh, m: int) -> EigenSpectrum:
    """Smallest m+1 Neumann eigenpairs with Richardson error estimates.

    Eigenvalues and vectors live on the given mesh; the error bars come
    from one uniform refinement (mesh-size pair h and h/2).
    """
    if m < 1 or m > 40:
        raise ThinspecError("m must lie in [1, 40]")
    vals, vecs, residuals, _ = _spectrum_on(mesh, m)
    fine = refine4(mesh)
    vals_f, _, _, _ = _spectrum_on(fine, m)
    errors = RICHARDSON_SAFETY * np.abs(vals - vals_f)
    errors = np.maximum(errors, 1e-12 * np.maximum(1.0, np.abs(vals)))
    if abs(vals[0]) > max(1e-6, errors[0]):
        raise SolverError(f"Neumann zero mode came out at {vals[0]!r}")
    spread = float(np.ptp(vecs[:, 0]))
    if spread > 1e-8 * max(1.0, float(np.max(np.abs(vecs[:, 0])))):
        raise SolverError("Neumann ground state is not constant")
    clusters = cluster_indices(vals, errors, first_index=0)
    return EigenSpectrum(
        eigenvalues=vals,
        vectors=vecs,
        error_estimates=errors,
        residuals=residuals,
        clusters=clusters,
        first_index=0,
        mesh=mesh,
        meta={
            "h_mesh": mesh.h_mesh,
            "nodes": mesh.n_nodes,
            "nodes_fine": fine.n_nodes,
            "fine_eigenvalues": vals_f.tolist(),
            "problem": "neumann",
        },
    )


def _dirichlet_nodes(mesh: TriMesh) -> np.ndarray:
    tagged = mesh.boundary_edges[mesh.boundary_tags == DIRICHLET]
    return np.unique(tagged)


def mixed_eigs(mesh: TriMesh, m: int) -> EigenSpectrum:
    """Smallest m eigenpairs with Dirichlet data on tagged boundary edges.

    Dirichlet nodes are eliminated from the system; with no Dirichlet edge
    the problem is pure Neumann and defers to :func:`neumann_eigs`.
    """
    if m < 1 or m > 40:
        raise ThinspecError("m must lie in [1, 40]")
    fixed = _dirichlet_nodes(mesh)
    if len(fixed) == 0:
        return neumann_eigs(mesh, m)
    fine = refine4(mesh)
    vals, vecs, residuals = _constrained_solve(mesh, fixed, m)
    vals_f, _, _ = _constrained_solve(fine, _dirichlet_nodes(fine), m)
    errors = RICHARDSON_SAFETY * np.abs(vals - vals_f)
    errors = np.maximum(errors, 1e-12 * np.maximum(1.0, np.abs(vals)))
    if vals[0] <= 0.0:
        raise SolverError("constrained problem produced a nonpositive eigenvalue")
    clusters = cluster_indices(vals, errors, first_index=1)
    return EigenSpectrum(
        eigenvalues=vals,
        vectors=vecs,
        error_estimates=errors,
        residuals=residuals,
        clusters=clusters,
        first_index=1,
        mesh=mesh,
        meta={
            "h_mesh": mesh.h_mesh,
            "nodes": mesh.n_nodes,
            "dirichlet_nodes": int(len(fixed)),
            "fine_eigenvalues": vals_f.tolist(),
            "problem": "mixed",
        },
    )


def _constrained_solve(mesh: TriMesh, fixed: np.ndarray, m: int):
    K, M = assemble(mesh)
    free = np.setdiff1d(np.arange(mesh.n_nodes), fixed)
    if len(free) <= m:
        raise SolverError("not enough free nodes for the requested eigencount")
    Kf = K[free][:, free].tocsr()
    Mf = M[free][:, free].tocsr()
    vals, vecs_f = _solve_smallest(Kf, Mf, m, len(free))
    vals, vecs_f, residuals = finalize_pairs(vals, vecs_f, Kf, Mf)
    vecs = np.zeros((mesh.n_nodes, vecs_f.shape[1]))
    vecs[free] = vecs_f
    return vals, vecs, residuals


def convergence_order(mesh: TriMesh, m: int, levels: int = 3) -> np.ndarray:
    """Observed eigenvalue convergence order from nested refinements.

    Solves on ``levels`` meshes produced by uniform refinement and returns
    log2 of consecutive-difference ratios for mu_1..mu_m (asymptotically 2
    for P1 elements).
    """
    if levels < 3:
        raise ThinspecError("need at least 3 levels for an observed order")
    meshes = [mesh]
    for _ in range(levels - 1):
        meshes.append(refine4(meshes[-1]))
    values = []
    for msh in meshes:
        vals, _, _, _ = _spectrum_on(msh, m)
        values.append(vals)
    values = np.array(values)
    d1 = values[0, 1:] - values[1, 1:]
    d2 = values[1, 1:] - values[2, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(np.abs(d1) / np.abs(d2))
