"""Convex planar bodies: diameter, width, normalization, slice profiles.

Polygons are stored counterclockwise with collinear vertices merged.  The
normalizing transform is the similarity placing the diameter endpoints at
(0,0) and (1,0); in that frame the body lives in [0,1] x [-W, W] and its
vertical chord [h_-(x), h_+(x)] defines the slice profile h = h_+ - h_-,
which is piecewise linear and concave for convex input.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, ThinspecError

MERGE_TOL = 1e-12
FRAME_TOL = 1e-9

_trapz_fn = getattr(np, "trapezoid", None) or np.trapz


def _trapz(y: np.ndarray, x: np.ndarray) -> float:
    return float(_trapz_fn(y, x))


def _merge_vertices(pts: np.ndarray) -> np.ndarray:
    """Drop repeats and collinear vertices at relative tolerance MERGE_TOL."""
    scale = max(1.0, float(np.max(np.abs(pts))))
    keep = list(range(len(pts)))
    changed = True
    while changed and len(keep) >= 3:
        changed = False
        for idx in range(len(keep)):
            i0 = keep[idx - 1]
            i1 = keep[idx]
            i2 = keep[(idx + 1) % len(keep)]
            a, b, c = pts[i0], pts[i1], pts[i2]
            if np.hypot(*(b - a)) <= MERGE_TOL * scale:
                keep.pop(idx)
                changed = True
                break
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(cross) <= MERGE_TOL * scale * scale:
                keep.pop(idx)
                changed = True
                break
    return pts[keep]


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, vertices counterclockwise.

    Construct through :meth:`from_points`, which orients, merges collinear
    runs, canonicalizes the starting vertex, and validates convexity.
    """

    vertices: np.ndarray

    @classmethod
    def from_points(cls, points) -> "ConvexPolygon":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise DegenerateGeometryError("need at least 3 planar points")
        if not np.all(np.isfinite(pts)):
            raise DegenerateGeometryError("non-finite vertex coordinates")
        area2 = 0.0
        for i in range(len(pts)):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % len(pts)]
            area2 += x0 * y1 - x1 * y0
        if area2 < 0.0:
            pts = pts[::-1].copy()
        pts = _merge_vertices(pts)
        if len(pts) < 3:
            raise DegenerateGeometryError("polygon degenerates after merging")
        scale = max(1.0, float(np.max(np.abs(pts))))
        n = len(pts)
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= MERGE_TOL * scale * scale:
                raise DegenerateGeometryError(
                    f"non-convex turn at vertex {i}: cross={cross}"
                )
        start = min(range(n), key=lambda i: (pts[i][0], pts[i][1]))
        pts = np.roll(pts, -start, axis=0)
        pts.setflags(write=False)
        return cls(vertices=pts)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def contains(self, point, tol: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float)
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        cross = (nxt[:, 0] - v[:, 0]) * (p[1] - v[:, 1]) - (nxt[:, 1] - v[:, 1]) * (
            p[0] - v[:, 0]
        )
        scale = max(1.0, float(np.max(np.abs(v))))
        return bool(np.all(cross >= -tol * scale * scale))


def diameter(poly: ConvexPolygon) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Largest pairwise vertex distance with its realizing endpoints.

    Ties resolve to the lexicographically smallest (sorted) endpoint pair.
    """
    v = poly.vertices
    diff = v[:, None, :] - v[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    best = float(np.max(d2))
    pairs = np.argwhere(d2 >= best * (1.0 - 1e-15))
    candidates = []
    for i, j in pairs:
        if i >= j:
            continue
        a, b = v[i], v[j]
        if (a[0], a[1]) > (b[0], b[1]):
            a, b = b, a
        candidates.append((a[0], a[1], b[0], b[1]))
    candidates.sort()
    ax, ay, bx, by = candidates[0]
    return math.sqrt(best), (np.array([ax, ay]), np.array([bx, by]))


def width(poly: ConvexPolygon) -> tuple[float, np.ndarray]:
    """Minimal strip width over directions, by edge-antipodal calipers.

    For polygons the minimum of the projected diameter is attained with the
    strip parallel to an edge, so scanning edges is exact.  The returned
    unit vector is the projection direction achieving the minimum, i.e. it
    points along the minimizing edge, normalized to angle in [0, pi).
    """
    v = poly.vertices
    n = len(v)
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    best = math.inf
    best_dir = None
    for i in range(n):
        e = edges[i] / lengths[i]
        normal = np.array([-e[1], e[0]])
        heights = (v - v[i]) @ normal
        w = float(np.max(heights))
        if w < best:
            best = w
            best_dir = e
    if best_dir[1] < 0.0 or (best_dir[1] == 0.0 and best_dir[0] < 0.0):
        best_dir = -best_dir
    return best, best_dir


def width_by_direction_grid(poly: ConvexPolygon, directions: int) -> float:
    """Brute-force width oracle: minimum strip width over a direction grid."""
    thetas = np.linspace(0.0, math.pi, directions, endpoint=False)
    normals = np.stack([-np.sin(thetas), np.cos(thetas)], axis=1)
    proj = poly.vertices @ normals.T
    return float(np.min(proj.max(axis=0) - proj.min(axis=0)))


@dataclass(frozen=True)
class BodyFrame:
    """Similarity mapping a polygon to the diameter-normalized frame."""

    rotation: float
    translation: np.ndarray
    scale: float
    diameter_endpoints: tuple[np.ndarray, np.ndarray]
    width_direction: np.ndarray

    def apply(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        rot = np.array([[c, -s], [s, c]])
        out = (p - self.translation) @ rot.T * self.scale
        return out if np.asarray(points).ndim == 2 else out[0]

    def invert(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        rot = np.array([[c, s], [-s, c]])
        out = (p / self.scale) @ rot.T + self.translation
        return out if np.asarray(points).ndim == 2 else out[0]


def normalize(poly: ConvexPolygon) -> tuple[ConvexPolygon, BodyFrame]:
    """Map the body so its diameter runs from (0,0) to (1,0) at length 1."""
    length, (a, b) = diameter(poly)
    if length <= 0.0:
        raise DegenerateGeometryError("zero diameter")
    angle = -math.atan2(b[1] - a[1], b[0] - a[0])
    frame = BodyFrame(
        rotation=angle,
        translation=a,
        scale=1.0 / length,
        diameter_endpoints=(a, b),
        width_direction=width(poly)[1],
    )
    mapped = frame.apply(poly.vertices)
    # Snap the diameter endpoints to their exact images.
    for i in range(len(mapped)):
        if np.hypot(*(mapped[i] - (0.0, 0.0))) < FRAME_TOL:
            mapped[i] = (0.0, 0.0)
        elif np.hypot(*(mapped[i] - (1.0, 0.0))) < FRAME_TOL:
            mapped[i] = (1.0, 0.0)
    out = ConvexPolygon.from_points(mapped)
    w_out, _ = width(out)
    xs = out.vertices[:, 0]
    ys = out.vertices[:, 1]
    if xs.min() < -FRAME_TOL or xs.max() > 1.0 + FRAME_TOL:
        raise DegenerateGeometryError("normalized body escapes [0,1] in x")
    if np.max(np.abs(ys)) > w_out + FRAME_TOL:
        raise DegenerateGeometryError("normalized body escapes |y| <= width")
    return out, frame


def boundary_chains(poly: ConvexPolygon) -> tuple[np.ndarray, np.ndarray]:
    """Split the boundary at the x-extremes into lower and upper chains.

    Returns (lower, upper) vertex arrays ordered by increasing x; both
    include the extreme points.  Vertical edges at the extremes contribute
    their endpoints to the respective chains.
    """
    v = poly.vertices
    n = len(v)
    xs = v[:, 0]
    i_min = min(range(n), key=lambda i: (xs[i], v[i][1]))
    i_max = max(range(n), key=lambda i: (xs[i], -v[i][1]))
    # CCW from the bottom of the left extreme to the bottom of the right
    # extreme is the lower chain; the rest is the upper chain (reversed).
    lower = [v[i_min]]
    i = i_min
    while i != i_max:
        i = (i + 1) % n
        lower.append(v[i])
    upper = [v[i_max]]
    while i != i_min:
        i = (i + 1) % n
        upper.append(v[i])
    upper = upper[::-1]
    return _dedupe_chain(np.array(lower), keep="min"), _dedupe_chain(
        np.array(upper), keep="max"
    )


def _dedupe_chain(chain: np.ndarray, keep: str) -> np.ndarray:
    """Collapse duplicate abscissae (vertical extreme edges) in a chain.

    The lower chain keeps the bottom endpoint, the upper chain the top one,
    so linear interpolation returns the correct one-sided chord limit.
    """
    scale = max(1.0, float(np.max(np.abs(chain))))
    out: list[np.ndarray] = []
    for p in chain:
        if out and abs(p[0] - out[-1][0]) <= MERGE_TOL * scale:
            if (keep == "min") == (p[1] < out[-1][1]):
                out[-1] = p
        else:
            out.append(p)
    return np.array(out)


def chain_eval(chain: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Piecewise-linear y(x) along a monotone-in-x chain."""
    cx = chain[:, 0]
    cy = chain[:, 1]
    # Vertical edges at the extremes yield duplicate x values; np.interp
    # picks one endpoint, which is the correct one-sided chord limit.
    return np.interp(x, cx, cy)


@dataclass(frozen=True)
class SliceProfile:
    """Vertical chord profile of a body over its diameter axis.

    ``values`` is h = upper - lower at the ``breakpoints``; linear in
    between, exact for polygons once all vertex abscissae are breakpoints.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    mass: float = field(default=0.0)
    concave: bool = field(default=True)

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.breakpoints, self.values)

    def upper_at(self, x) -> np.ndarray:
        return np.interp(x, self.breakpoints, self.upper)

    def lower_at(self, x) -> np.ndarray:
        return np.interp(x, self.breakpoints, self.lower)


def _concavity_flag(t: np.ndarray, h: np.ndarray, tol: float = 1e-9) -> bool:
    slopes = np.diff(h) / np.diff(t)
    scale = max(1.0, float(np.max(np.abs(h))))
    return bool(np.all(np.diff(slopes) <= tol * scale))


def profile_from_samples(t, h, upper=None, lower=None) -> SliceProfile:
    """Build a profile from explicit samples (synthetic/analytic weights)."""
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    if t.ndim != 1 or t.shape != h.shape or len(t) < 2:
        raise ThinspecError("profile needs matching 1D sample arrays")
    if np.any(np.diff(t) <= 0.0):
        raise ThinspecError("profile breakpoints must be strictly increasing")
    if np.any(h < -1e-12 * max(1.0, float(np.max(np.abs(h))))):
        raise ThinspecError("profile values must be nonnegative")
    h = np.maximum(h, 0.0)
    if upper is None:
        upper = h / 2.0
    upper = np.asarray(upper, dtype=float)
    if lower is None:
        lower = upper - h
    lower = np.asarray(lower, dtype=float)
    mass = _trapz(h, t)
    return SliceProfile(
        breakpoints=t,
        values=h,
        upper=upper,
        lower=lower,
        mass=mass,
        concave=_concavity_flag(t, h),
    )


def is_profile_frame(poly: ConvexPolygon, tol: float = FRAME_TOL) -> bool:
    """True when the body spans x in [0,1] with (0,0) and (1,0) on it.

    This is the slicing frame produced by :func:`normalize`; bodies built
    directly in that position (axis-aligned rectangles, right triangles)
    qualify as well.
    """
    xs = poly.vertices[:, 0]
    if abs(xs.min()) > tol or abs(xs.max() - 1.0) > tol:
        return False
    lower, upper = boundary_chains(poly)
    for x0 in (0.0, 1.0):
        lo = float(chain_eval(lower, np.array([x0]))[0])
        hi = float(chain_eval(upper, np.array([x0]))[0])
        if lo > tol or hi < -tol:
            return False
    return True


def slice_profile(poly: ConvexPolygon, samples: int = 64) -> SliceProfile:
    """Exact piecewise-linear chord profile of a body in the slicing frame."""
    if samples < 16:
        raise ThinspecError("samples must be >= 16")
    if not is_profile_frame(poly):
        raise ThinspecError(
            "slice_profile needs the normalized frame: x in [0,1] with "
            "(0,0), (1,0) on the body"
        )
    lower, upper = boundary_chains(poly)
    grid = np.unique(
        np.concatenate(
            [
                np.clip(poly.vertices[:, 0], 0.0, 1.0),
                np.linspace(0.0, 1.0, samples + 1),
            ]
        )
    )
    lo = chain_eval(lower, grid)
    hi = chain_eval(upper, grid)
    h = np.maximum(hi - lo, 0.0)
    mass = _trapz(h, grid)
    if mass <= 0.0:
        raise DegenerateGeometryError("slice profile carries no mass")
    return SliceProfile(
        breakpoints=grid,
        values=h,
        upper=hi,
        lower=lo,
        mass=mass,
        concave=_concavity_flag(grid, h),
    )


@dataclass(frozen=True)
class BranchBoundReport:
    """Outcome of the one-sided chord-derivative bound check."""

    passed: bool
    max_violation: float
    max_slack: float
    worst_x: float
    checked: int


def h_derivative_bound_check(
    profile: SliceProfile, tol: float = 1e-9
) -> BranchBoundReport:
    """Check |h_+'(x)| <= h_+(x)/min(x, 1-x) and its mirror for h_-.

    One-sided difference quotients are the exact segment slopes of the
    piecewise-linear branches, evaluated at every interior breakpoint.
    """
    t = profile.breakpoints
    scale = max(1.0, float(np.max(np.abs(profile.values))))
    worst = -math.inf
    best_slack = math.inf
    worst_x = 0.5
    checked = 0
    for branch, sign in ((profile.upper, 1.0), (profile.lower, -1.0)):
        y = sign * branch
        slopes = np.diff(y) / np.diff(t)
        for i in range(1, len(t) - 1):
            x = t[i]
            denom = min(x, 1.0 - x)
            if denom <= 0.0:
                continue
            bound = abs(y[i]) / denom
            for s in (slopes[i - 1], slopes[i]):
                violation = abs(s) - bound
                checked += 1
                if violation > worst:
                    worst = violation
                    worst_x = x
                best_slack = min(best_slack, bound - abs(s))
    return BranchBoundReport(
        passed=bool(worst <= tol * scale),
        max_violation=float(worst),
        max_slack=float(best_slack),
        worst_x=float(worst_x),
        checked=checked,
    )


def load_polygon(path) -> ConvexPolygon:
    """Read a polygon from 'x y' lines or a JSON {"vertices": [[x,y],...]}."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return ConvexPolygon.from_points(data["vertices"])
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ThinspecError(f"bad polygon line: {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    return ConvexPolygon.from_points(rows)


def save_polygon(poly: ConvexPolygon, path, fmt: str = "text") -> None:
    if fmt == "json":
        Path(path).write_text(
            json.dumps({"vertices": poly.vertices.tolist()}, indent=2) + "\n"
        )
    else:
        lines = [f"{x!r} {y!r}" for x, y in poly.vertices]
        Path(path).write_text("\n".join(lines) + "\n")
