"""Deterministic test-body generation for the verification harness.

Every generated body is normalized (diameter 1 from (0,0) to (1,0)) and
carries its exact width and slice profile.  Smooth shapes (stadium,
ellipse) are represented by fine polygonal approximations; random bodies
are convex hulls of seeded uniform points in a thin box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, ThinspecError
from .geometry import (
    BodyFrame,
    ConvexPolygon,
    SliceProfile,
    normalize,
    slice_profile,
    width,
)

SMOOTH_VERTICES = 512
KINDS = (
    "rectangle",
    "right-triangle",
    "isoceles-triangle",
    "stadium",
    "ellipse",
    "random-hull",
    "square",
)


@dataclass(frozen=True)
class DomainFamily:
    kind: str
    eps_values: tuple[float, ...] = ()
    seeds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ThinspecError(f"unknown family kind {self.kind!r}")
        if self.kind != "square":
            if not self.eps_values:
                raise ThinspecError(f"family {self.kind} needs eps values")
            for e in self.eps_values:
                if not 0.0 < e < 0.5:
                    raise ThinspecError("eps grid must lie in (0, 1/2)")
        if self.kind == "random-hull" and not self.seeds:
            raise ThinspecError("random-hull family needs seeds")


@dataclass(frozen=True)
class Body:
    """A normalized convex body with its slicing data."""

    name: str
    family: str
    polygon: ConvexPolygon
    frame: BodyFrame
    eps: float
    profile: SliceProfile
    meta: dict = field(default_factory=dict)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counterclockwise."""
    pts = sorted(map(tuple, points))
    if len(pts) <= 2:
        return np.array(pts)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def _stadium(eps: float, vertices: int = SMOOTH_VERTICES) -> ConvexPolygon:
    r = eps / 2.0
    n_arc = vertices // 2
    pts = []
    for j in range(n_arc + 1):
        th = -math.pi / 2 + math.pi * j / n_arc
        pts.append((1.0 - r + r * math.cos(th), r * math.sin(th)))
    for j in range(n_arc + 1):
        th = math.pi / 2 + math.pi * j / n_arc
        pts.append((r + r * math.cos(th), r * math.sin(th)))
    return ConvexPolygon.from_points(pts)


def _ellipse(eps: float, vertices: int = SMOOTH_VERTICES) -> ConvexPolygon:
    th = np.linspace(0.0, 2.0 * math.pi, vertices, endpoint=False)
    return ConvexPolygon.from_points(
        np.column_stack([0.5 + 0.5 * np.cos(th), 0.5 * eps * np.sin(th)])
    )


def _random_hull(eps: float, seed: int, retries: int = 10) -> tuple[ConvexPolygon, int]:
    for attempt in range(retries):
        rng = np.random.default_rng(seed + attempt)
        pts = np.column_stack([rng.random(40), rng.random(40) * eps])
        hull = _convex_hull(pts)
        if len(hull) < 3:
            continue
        try:
            return ConvexPolygon.from_points(hull), seed + attempt
        except DegenerateGeometryError:
            continue
    raise DegenerateGeometryError(
        f"random hull degenerate after {retries} retries from seed {seed}"
    )


def _base_polygon(kind: str, eps: float, seed: int | None) -> tuple[ConvexPolygon, dict]:
    if kind == "rectangle":
        return ConvexPolygon.from_points([(0, 0), (1, 0), (1, eps), (0, eps)]), {}
    if kind == "right-triangle":
        return ConvexPolygon.from_points([(0, 0), (1, 0), (1, eps)]), {}
    if kind == "isoceles-triangle":
        return ConvexPolygon.from_points([(0, 0), (1, 0), (0.5, eps)]), {}
    if kind == "stadium":
        return _stadium(eps), {"smooth_vertices": SMOOTH_VERTICES}
    if kind == "ellipse":
        return _ellipse(eps), {"smooth_vertices": SMOOTH_VERTICES}
    if kind == "square":
        return ConvexPolygon.from_points([(0, 0), (1, 0), (1, 1), (0, 1)]), {}
    if kind == "random-hull":
        poly, used = _random_hull(eps, int(seed))
        return poly, {"seed_used": used}
    raise ThinspecError(f"unknown kind {kind!r}")


def make_body(kind: str, eps: float | None = None, seed: int | None = None,
              profile_samples: int = 64) -> Body:
    raw, meta = _base_polygon(kind, eps if eps is not None else 0.0, seed)
    poly, frame = normalize(raw)
    w, w_dir = width(poly)
    prof = slice_profile(poly, profile_samples)
    if eps is not None:
        label = f"{kind}-eps{eps:g}"
    else:
        label = kind
    if seed is not None:
        label += f"-s{seed}"
    meta = dict(meta)
    meta.update({"eps_nominal": eps, "width_direction": w_dir.tolist()})
    return Body(
        name=label,
        family=kind,
        polygon=poly,
        frame=frame,
        eps=w,
        profile=prof,
        meta=meta,
    )


def generate(family: DomainFamily) -> list[Body]:
    """All bodies of a family, deterministic in the seeds and grids."""
    bodies: list[Body] = []
    if family.kind == "square":
        bodies.append(make_body("square"))
        return bodies
    for eps in family.eps_values:
        if family.kind == "random-hull":
            for seed in family.seeds:
                bodies.append(make_body("random-hull", eps, seed))
        else:
            bodies.append(make_body(family.kind, eps))
    return bodies


DEFAULT_FAMILIES: tuple[DomainFamily, ...] = (
    DomainFamily("rectangle", (0.2, 0.1, 0.05, 0.025, 0.02)),
    DomainFamily("right-triangle", (0.2, 0.1, 0.05, 0.025, 0.02)),
    DomainFamily("isoceles-triangle", (0.2, 0.1, 0.05, 0.025, 0.02)),
    DomainFamily("stadium", (0.2, 0.1, 0.05, 0.02)),
    DomainFamily("ellipse", (0.2, 0.1, 0.05, 0.02)),
    DomainFamily("random-hull", (0.1, 0.05), seeds=(1, 2, 3, 4, 5, 6)),
    DomainFamily("square"),
)


def default_corpus() -> list[Body]:
    out: list[Body] = []
    for fam in DEFAULT_FAMILIES:
        out.extend(generate(fam))
    return out


@dataclass(frozen=True)
class SlabBody:
    """Convex subdomain of the horizontal slab {0 <= y <= rho1}.

    Boundary edges with outward normal pointing upward are Dirichlet; the
    rest (normal with nonpositive vertical component) stay Neumann.
    """

    name: str
    polygon: ConvexPolygon
    rho1: float


def slab_rectangle(rho1: float, length: float = 0.8) -> SlabBody:
    poly = ConvexPolygon.from_points(
        [(0, 0), (length, 0), (length, rho1), (0, rho1)]
    )
    return SlabBody(name=f"slab-rect-rho{rho1:g}", polygon=poly, rho1=rho1)


def slab_subdomains(rho1: float, count: int, seed: int = 0) -> list[SlabBody]:
    """Seeded convex hulls inside the slab, each touching its full height."""
    out = []
    made = 0
    attempt = 0
    while made < count:
        rng = np.random.default_rng(seed + 1000 + attempt)
        attempt += 1
        pts = np.column_stack([rng.random(25) * 1.2, rng.random(25) * rho1])
        # Anchor the full slab height so rho1 is the honest height bound.
        pts = np.vstack([pts, [[0.55, 0.0], [0.62, rho1]]])
        hull = _convex_hull(pts)
        if len(hull) < 3:
            continue
        try:
            poly = ConvexPolygon.from_points(hull)
        except DegenerateGeometryError:
            continue
        out.append(SlabBody(name=f"slab-hull-s{seed + attempt - 1}", polygon=poly, rho1=rho1))
        made += 1
    return out


def slab_dirichlet_tag(mid: np.ndarray, normal: np.ndarray) -> bool:
    return bool(normal[1] > 1e-9)
