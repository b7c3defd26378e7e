"""Graded conforming triangulations of convex polygons.

Point placement follows a local size field: the chord height of the body
(thin parts get at least 4 node layers and near-isotropic cells), the
local boundary edge length (so finely-resolved smooth boundaries meet
matching interior resolution), and the requested target size.  A Delaunay
triangulation of the resulting cloud is automatically conforming and
boundary-exact for convex input.  Boundary edges carry Neumann/Dirichlet
tags assigned by a predicate.

Quality: every conforming triangulation of a polygon with a sharp corner
contains angles no better than the corner itself, and the graded floor
near degenerating tips forfeits the angle bound there as well; such
triangles are marked exempt and reported separately by :meth:`TriMesh.quality`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import SolverError, ThinspecError
from .geometry import ConvexPolygon, boundary_chains, chain_eval

NEUMANN = 0
DIRICHLET = 1
_TAG_NAMES = {NEUMANN: "neumann", DIRICHLET: "dirichlet"}

MAX_NODES = 200_000
SHARP_CORNER_DEG = 30.0
MIN_LAYERS = 4

TagPredicate = Callable[[np.ndarray, np.ndarray], int]


@dataclass
class TriMesh:
    """Conforming triangle mesh with tagged boundary edges."""

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    h_mesh: float
    quality_exempt: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes
        t = self.triangles
        a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
        return 0.5 * (
            (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        )

    def angles_deg(self) -> np.ndarray:
        """Per-triangle interior angles, shape (T, 3)."""
        p = self.nodes
        t = self.triangles
        out = np.empty((len(t), 3))
        verts = [p[t[:, i]] for i in range(3)]
        for i in range(3):
            u = verts[(i + 1) % 3] - verts[i]
            v = verts[(i + 2) % 3] - verts[i]
            dot = np.einsum("ij,ij->i", u, v)
            nu = np.hypot(u[:, 0], u[:, 1])
            nv = np.hypot(v[:, 0], v[:, 1])
            out[:, i] = np.degrees(np.arccos(np.clip(dot / (nu * nv), -1.0, 1.0)))
        return out

    def quality(self) -> dict:
        """Angle statistics, with tip/sharp-corner triangles reported apart."""
        ang = self.angles_deg()
        exempt = (
            self.quality_exempt
            if len(self.quality_exempt) == len(ang)
            else np.zeros(len(ang), dtype=bool)
        )
        regular = ang[~exempt]
        return {
            "min_angle_deg": float(ang.min()),
            "max_angle_deg": float(ang.max()),
            "min_angle_regular_deg": float(regular.min()) if len(regular) else float(ang.min()),
            "max_angle_regular_deg": float(regular.max()) if len(regular) else float(ang.max()),
            "exempt_triangles": int(exempt.sum()),
        }


def _interior_angles_deg(poly: ConvexPolygon) -> np.ndarray:
    v = poly.vertices
    n = len(v)
    out = np.empty(n)
    for i in range(n):
        u = v[(i - 1) % n] - v[i]
        w = v[(i + 1) % n] - v[i]
        cosang = np.dot(u, w) / (np.hypot(*u) * np.hypot(*w))
        out[i] = math.degrees(math.acos(float(np.clip(cosang, -1.0, 1.0))))
    return out


def _march(a: float, b: float, step_of: Callable[[float], float]) -> list[float]:
    """Graded abscissae strictly inside (a, b); the final two steps balance.

    Step growth is capped so neighboring cells differ by a bounded factor,
    which keeps Delaunay from bridging distant points across a tip fan.
    """
    xs: list[float] = []
    x = a
    prev_dx = math.inf
    guard = 0
    while True:
        dx = min(step_of(x), 1.35 * prev_dx)
        remaining = b - x
        if remaining <= 1.5 * dx:
            if remaining > 1.1 * dx:
                xs.append(x + remaining / 2.0)
            break
        x = x + dx
        xs.append(x)
        prev_dx = dx
        guard += 1
        if guard > 100_000:
            raise SolverError("size-field marching failed to terminate")
    return xs


def triangulate(
    poly: ConvexPolygon,
    target_h: float,
    dirichlet: TagPredicate | None = None,
    max_nodes: int = MAX_NODES,
) -> TriMesh:
    """Graded Delaunay mesh of a convex polygon.

    ``dirichlet(midpoint, outward_normal) -> bool`` selects Dirichlet
    boundary edges; everything else is Neumann.
    """
    if not 1e-3 <= target_h <= 0.2:
        raise ThinspecError("target_h must lie in [1e-3, 0.2]")
    v = poly.vertices
    lower, upper = boundary_chains(poly)
    x_lo = float(v[:, 0].min())
    x_hi = float(v[:, 0].max())
    extent = x_hi - x_lo
    if extent <= 0:
        raise ThinspecError("degenerate body: zero x-extent")

    def chord(x: float) -> float:
        xa = np.array([x], dtype=float)
        return float(
            max(chain_eval(upper, xa)[0] - chain_eval(lower, xa)[0], 0.0)
        )

    s_floor = max(2e-5 * max(1.0, extent), target_h / 256.0)

    # Local scale of short boundary edges (fine polygonal approximations of
    # smooth arcs); long edges impose nothing.  The influence decays with a
    # gradation slope, keeping the size field Lipschitz: abrupt cell-size
    # cliffs between neighboring columns would create slivers.
    edge_x = []
    edge_len = []
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        length = float(np.hypot(*(b - a)))
        if length < target_h:
            edge_x.append((min(a[0], b[0]), max(a[0], b[0])))
            edge_len.append(length)

    def s_bnd(x: float) -> float:
        best = math.inf
        for (xa, xb), ln in zip(edge_x, edge_len):
            dist = max(xa - x, x - xb, 0.0)
            best = min(best, 2.0 * ln + 0.5 * dist)
        return best

    tips = [x_tip for x_tip in (x_lo, x_hi) if chord(x_tip) <= 2.0 * s_floor]

    def size(x: float) -> float:
        s = min(target_h, 0.625 * chord(x), s_bnd(x))
        return float(np.clip(s, s_floor, target_h))

    def step_of(x: float) -> float:
        # Inside the scale-floor zone at a degenerate tip (exempt from the
        # quality bound anyway) the step escapes geometrically instead of
        # packing floor-width columns against the corner.
        s = size(x)
        if tips and 0.625 * chord(x) < s_floor:
            dist = min(abs(x - t) for t in tips)
            s = max(s, 0.35 * dist)
        return s

    xs = _march(x_lo, x_hi, step_of)

    # Boundary nodes: vertices plus graded subdivision of long edges.
    boundary_pts: list[np.ndarray] = []
    for i in range(len(v)):
        a = v[i]
        b = v[(i + 1) % len(v)]
        e = b - a
        length = float(np.hypot(*e))
        boundary_pts.append(a)
        if length <= 1.3 * size(0.5 * (a[0] + b[0])):
            continue
        if abs(e[0]) >= 0.25 * abs(e[1]):
            # Graded in x like the interior columns.
            ts = sorted(
                (x - a[0]) / e[0]
                for x in _march(min(a[0], b[0]), max(a[0], b[0]), step_of)
            )
        else:
            # Steep edge: tiny x-span, the size field is constant across it.
            s_mid = size(0.5 * (a[0] + b[0]))
            n_seg = max(1, math.ceil(length / s_mid))
            ts = [j / n_seg for j in range(1, n_seg)]
        boundary_pts.extend(a + t * e for t in ts)
    boundary_arr = np.array(boundary_pts)

    # Interior nodes: per-column layers sized to the local field; Delaunay
    # needs no layer matching between neighboring columns.
    interior: list[tuple[float, float]] = []
    interior_scale: list[float] = []
    for x in xs:
        xa = np.array([x], dtype=float)
        lo = float(chain_eval(lower, xa)[0])
        hi = float(chain_eval(upper, xa)[0])
        h_here = hi - lo
        if h_here <= 1.5 * s_floor:
            continue
        s_here = size(x)
        n_layers = max(MIN_LAYERS, math.ceil(h_here / s_here))
        for j in range(1, n_layers):
            interior.append((x, lo + h_here * j / n_layers))
            interior_scale.append(min(s_here, h_here / n_layers))
        if len(interior) > max_nodes:
            raise ThinspecError(
                f"target_h={target_h} exceeds the {max_nodes}-node budget"
            )
    if interior:
        interior_arr = np.array(interior)
        tree = cKDTree(boundary_arr)
        d, _ = tree.query(interior_arr)
        keep = d > 0.42 * np.asarray(interior_scale)
        pts = np.vstack([boundary_arr, interior_arr[keep]])
    else:
        pts = boundary_arr

    pts = _dedupe_points(pts, 1e-12 * max(1.0, extent))
    if len(pts) > max_nodes:
        raise ThinspecError(f"{len(pts)} nodes exceed the {max_nodes} budget")
    if len(pts) < 3:
        raise ThinspecError("fewer than 3 mesh points")

    tri = Delaunay(pts)
    triangles = tri.simplices.copy()
    a, b, c = (pts[triangles[:, i]] for i in range(3))
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    flip = cross < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    areas = np.abs(cross) / 2.0
    good = areas > 1e-14 * max(1.0, extent) ** 2
    if not np.all(good):
        triangles = triangles[good]
    if np.unique(triangles).size != len(pts):
        raise SolverError("triangulation dropped input points (hanging nodes)")

    boundary_edges, boundary_tags = _extract_boundary(pts, triangles, dirichlet)

    # Quality exemption: triangles pinched into degenerating tips (local
    # chord at the scale floor), caps where a finely-faceted boundary turns
    # vertical (the facet abscissae cluster quadratically there, below any
    # workable size field), or touching a sharp polygon corner.
    centroids = pts[triangles].mean(axis=1)
    chord_at = np.array([chord(x) for x in centroids[:, 0]])
    exempt = chord_at < 4.0 * s_floor
    xs_arr = np.asarray(xs) if len(xs) else np.array([0.5 * (x_lo + x_hi)])
    for x_tip in (x_lo, x_hi):
        if chord(x_tip) > 2.0 * s_floor:
            continue
        i_tip = int(np.argmin(np.abs(v[:, 0] - x_tip)))
        tip = v[i_tip]
        # Fan triangles between the tip vertex and the nearest column split
        # the corner angle; so do needles where a steep finely-faceted cap
        # interleaves with the columns.
        radius = 2.5 * float(np.min(np.abs(xs_arr - x_tip)))
        for j in (i_tip - 1, i_tip):
            e = v[(j + 1) % len(v)] - v[j % len(v)]
            if abs(e[0]) < 0.5 * abs(e[1]):
                radius = max(radius, 5.0 * float(np.hypot(*e)))
        exempt |= (
            np.hypot(centroids[:, 0] - tip[0], centroids[:, 1] - tip[1]) < radius
        )
    angles = _interior_angles_deg(poly)
    sharp = v[angles < SHARP_CORNER_DEG]
    if len(sharp):
        tree = cKDTree(pts)
        sharp_nodes: set[int] = set()
        for corner in sharp:
            sharp_nodes.update(tree.query_ball_point(corner, 1e-9 * max(1.0, extent)))
        touches = np.isin(triangles, list(sharp_nodes)).any(axis=1)
        exempt |= touches

    edges = np.vstack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    lengths = np.hypot(
        pts[edges[:, 0], 0] - pts[edges[:, 1], 0],
        pts[edges[:, 0], 1] - pts[edges[:, 1], 1],
    )
    mesh = TriMesh(
        nodes=pts,
        triangles=triangles,
        boundary_edges=boundary_edges,
        boundary_tags=boundary_tags,
        h_mesh=float(lengths.max()),
        quality_exempt=exempt,
    )
    _check_conforming(mesh)
    return mesh


def _dedupe_points(pts: np.ndarray, tol: float) -> np.ndarray:
    tree = cKDTree(pts)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return pts
    drop = set(int(j) for _, j in pairs)
    keep = [i for i in range(len(pts)) if i not in drop]
    return pts[keep]


def _extract_boundary(
    pts: np.ndarray, triangles: np.ndarray, dirichlet: TagPredicate | None
) -> tuple[np.ndarray, np.ndarray]:
    seen: dict[tuple[int, int], int] = {}
    oriented: dict[tuple[int, int], tuple[int, int]] = {}
    for t in triangles:
        for i, j in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(i, j), max(i, j))
            seen[key] = seen.get(key, 0) + 1
            oriented[key] = (int(i), int(j))
    edges = sorted(oriented[key] for key, n in seen.items() if n == 1)
    edges = np.array(edges, dtype=int)
    tags = np.zeros(len(edges), dtype=np.int8)
    if dirichlet is not None:
        for idx, (i, j) in enumerate(edges):
            mid = 0.5 * (pts[i] + pts[j])
            e = pts[j] - pts[i]
            # CCW interior on the left: outward normal is the right-hand one.
            normal = np.array([e[1], -e[0]])
            nrm = float(np.hypot(*normal))
            if nrm > 0:
                normal = normal / nrm
            if dirichlet(mid, normal):
                tags[idx] = DIRICHLET
    return edges, tags


def _check_conforming(mesh: TriMesh) -> None:
    """No node may sit in the interior of a boundary edge."""
    pts = mesh.nodes
    tree = cKDTree(pts)
    for i, j in mesh.boundary_edges:
        a, b = pts[i], pts[j]
        mid = 0.5 * (a + b)
        edge_len = float(np.hypot(*(b - a)))
        for k in tree.query_ball_point(mid, 0.51 * edge_len):
            if k in (int(i), int(j)):
                continue
            p = pts[k]
            t = float(np.dot(p - a, b - a)) / max(edge_len**2, 1e-300)
            if 1e-9 < t < 1 - 1e-9:
                closest = a + t * (b - a)
                if float(np.hypot(*(p - closest))) < 1e-9 * max(1.0, edge_len):
                    raise SolverError("hanging node on boundary edge")


def refine4(mesh: TriMesh) -> TriMesh:
    """Uniform midpoint refinement: every triangle splits into four.

    Edge midpoints lie on the (straight) polygon edges, so the refined mesh
    is exact for the same body and halves the mesh size.
    """
    node_count = mesh.n_nodes
    midpoint_of: dict[tuple[int, int], int] = {}
    new_pts = [np.array(p) for p in mesh.nodes]

    def midpoint(i: int, j: int) -> int:
        nonlocal node_count
        key = (min(i, j), max(i, j))
        if key not in midpoint_of:
            new_pts.append(0.5 * (mesh.nodes[i] + mesh.nodes[j]))
            midpoint_of[key] = node_count
            node_count += 1
        return midpoint_of[key]

    tris = []
    exempt = []
    has_mask = len(mesh.quality_exempt) == mesh.n_triangles
    for idx, t in enumerate(mesh.triangles):
        m01 = midpoint(t[0], t[1])
        m12 = midpoint(t[1], t[2])
        m20 = midpoint(t[2], t[0])
        tris.extend(
            [
                (t[0], m01, m20),
                (t[1], m12, m01),
                (t[2], m20, m12),
                (m01, m12, m20),
            ]
        )
        if has_mask:
            exempt.extend([mesh.quality_exempt[idx]] * 4)
    edges = []
    tags = []
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        m = midpoint_of[(min(i, j), max(i, j))]
        edges.append((i, m))
        edges.append((m, j))
        tags.extend([tag, tag])
    return TriMesh(
        nodes=np.array(new_pts),
        triangles=np.array(tris, dtype=int),
        boundary_edges=np.array(edges, dtype=int),
        boundary_tags=np.array(tags, dtype=np.int8),
        h_mesh=mesh.h_mesh / 2.0,
        quality_exempt=np.array(exempt, dtype=bool)
        if has_mask
        else np.zeros(0, dtype=bool),
    )


def dump_mesh(mesh: TriMesh, path) -> None:
    """Plain-text mesh dump: nodes, triangles, tagged boundary edges."""
    lines = [f"nodes {mesh.n_nodes}"]
    for x, y in mesh.nodes:
        lines.append(f"{x!r} {y!r}")
    lines.append(f"triangles {mesh.n_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a} {b} {c}")
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        lines.append(f"{i} {j} {_TAG_NAMES[int(tag)]}")
    Path(path).write_text("\n".join(lines) + "\n")
