"""Analytic source models and the geometry predicates built on them.

A source is a real function S on the plane with compact support inside the
disk of radius 2.  Characteristic-type sources are unions of disjoint
regions (annuli and simple polygons, optionally with holes) carrying
constant amplitudes; the smooth test source is a closed-form expression
cut off at radius 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SUPPORT_RADIUS",
    "Annulus",
    "Polygon",
    "Region",
    "RegionUnion",
    "SmoothAnalytic",
    "SourceSum",
    "Circle",
    "Segment",
    "BoundaryDescriptor",
    "point_in_polygon",
    "evaluate_source",
    "boundary_descriptor",
    "annulus_source",
    "disk_source",
    "square_source",
    "cross_source",
    "smiling_bear_source",
    "smooth_source",
    "fixture",
    "source_from_dict",
    "source_to_dict",
]

SUPPORT_RADIUS = 2.0
_ORIENT_TOL = 1e-12


# ---------------------------------------------------------------------------
# boundary primitives


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]


@dataclass(frozen=True)
class BoundaryDescriptor:
    circles: tuple[Circle, ...] = ()
    segments: tuple[Segment, ...] = ()
    vertices: tuple[tuple[float, float], ...] = ()

    @property
    def primitives(self) -> tuple:
        return self.circles + self.segments

    def __add__(self, other: "BoundaryDescriptor") -> "BoundaryDescriptor":
        return BoundaryDescriptor(
            self.circles + other.circles,
            self.segments + other.segments,
            self.vertices + other.vertices,
        )


def _xy(p) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of size 2")
    return arr[..., 0], arr[..., 1]


# ---------------------------------------------------------------------------
# shapes


def _segment_distance(x1, x2, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    t = np.clip(((x1 - ax) * dx + (x2 - ay) * dy) / length2, 0.0, 1.0)
    return np.hypot(x1 - (ax + t * dx), x2 - (ay + t * dy))


def _polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def point_in_polygon(vertices: Sequence[Sequence[float]], p, tol: float = _ORIENT_TOL):
    """Even-odd membership test; points on an edge (within ``tol``) count as inside.

    ``p`` may be a single point or an array of shape (..., 2).
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
        raise ValueError("a polygon needs at least 3 vertices")
    if abs(_polygon_area(v)) <= tol:
        raise ValueError("degenerate polygon (zero area)")
    x1, x2 = _xy(p)
    inside = np.zeros(np.shape(x1), dtype=bool)
    on_edge = np.zeros(np.shape(x1), dtype=bool)
    n = len(v)
    for i in range(n):
        ax, ay = v[i]
        bx, by = v[(i + 1) % n]
        crosses = (ay > x2) != (by > x2)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (x2 - ay) * (bx - ax) / (by - ay)
        inside ^= crosses & (x1 < xint)
        # the orientation test below is the boundary convention
        cross = (bx - ax) * (x2 - ay) - (by - ay) * (x1 - ax)
        within = (
            (np.minimum(ax, bx) - tol <= x1)
            & (x1 <= np.maximum(ax, bx) + tol)
            & (np.minimum(ay, by) - tol <= x2)
            & (x2 <= np.maximum(ay, by) + tol)
        )
        on_edge |= within & (np.abs(cross) <= tol * max(1.0, math.hypot(bx - ax, by - ay)))
    out = inside | on_edge
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Annulus:
    """Closed annulus centre c, radii r_inner <= |p - c| <= r_outer (a disk if r_inner = 0)."""

    center: tuple[float, float]
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (0 <= self.r_inner < self.r_outer):
            raise ValueError("annulus needs 0 <= r_inner < r_outer")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def contains(self, x1, x2, closed: bool = True):
        d = np.hypot(x1 - self.center[0], x2 - self.center[1])
        if closed:
            return (d <= self.r_outer + _ORIENT_TOL) & (
                (self.r_inner == 0) | (d >= self.r_inner - _ORIENT_TOL)
            )
        return (d < self.r_outer - _ORIENT_TOL) & ((self.r_inner == 0) | (d > self.r_inner + _ORIENT_TOL))

    def boundary(self) -> BoundaryDescriptor:
        circles = [Circle(self.center, self.r_outer)]
        if self.r_inner > 0:
            circles.insert(0, Circle(self.center, self.r_inner))
        return BoundaryDescriptor(circles=tuple(circles))

    @property
    def extent(self) -> float:
        return math.hypot(*self.center) + self.r_outer


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by its ordered vertices (closed region)."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        if len(verts) < 3 or abs(_polygon_area(verts)) <= _ORIENT_TOL:
            raise ValueError("degenerate polygon")
        object.__setattr__(self, "vertices", verts)

    def contains(self, x1, x2, closed: bool = True):
        pts = np.stack(np.broadcast_arrays(x1, x2), axis=-1)
        inside = point_in_polygon(self.vertices, pts)
        if closed:
            return inside
        dist = np.min(
            [_segment_distance(x1, x2, s.start, s.end) for s in self.boundary().segments], axis=0
        )
        return inside & (dist > _ORIENT_TOL)

    def boundary(self) -> BoundaryDescriptor:
        v = self.vertices
        segs = tuple(Segment(v[i], v[(i + 1) % len(v)]) for i in range(len(v)))
        return BoundaryDescriptor(segments=segs, vertices=v)

    @property
    def extent(self) -> float:
        return max(math.hypot(a, b) for a, b in self.vertices)


Amplitude = float | Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Region:
    """A shape minus the interiors of its holes, carrying an amplitude."""

    shape: Annulus | Polygon
    amplitude: Amplitude = 1.0
    holes: tuple[Annulus | Polygon, ...] = ()

    def contains(self, x1, x2):
        inside = self.shape.contains(x1, x2)
        for hole in self.holes:
            inside = inside & ~hole.contains(x1, x2, closed=False)
        return inside

    def amplitude_at(self, x1, x2):
        if callable(self.amplitude):
            return self.amplitude(x1, x2)
        return np.full(np.broadcast(x1, x2).shape, float(self.amplitude))

    def boundary(self) -> BoundaryDescriptor:
        out = self.shape.boundary()
        for hole in self.holes:
            out = out + hole.boundary()
        return out


class _SourceBase:
    name: str = "source"

    def evaluate(self, x1, x2) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, p):
        x1, x2 = _xy(p)
        out = self.evaluate(x1, x2)
        return float(out) if np.ndim(out) == 0 else out

    def __add__(self, other: "_SourceBase") -> "SourceSum":
        return SourceSum((self, other))

    @property
    def constant_amplitude(self) -> bool:
        return False

    def breakpoint_primitives(self) -> tuple:
        """Curves across which S may be discontinuous (used by arc integration)."""
        return boundary_descriptor(self).primitives


@dataclass(frozen=True, eq=False)
class RegionUnion(_SourceBase):
    """Disjoint regions, each with its own amplitude; S = 0 elsewhere."""

    regions: tuple[Region, ...]
    name: str = "regions"

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("RegionUnion needs at least one region")
        extent = max(r.shape.extent for r in self.regions)
        if extent > SUPPORT_RADIUS + 1e-12:
            raise ValueError(f"support must lie in the disk of radius {SUPPORT_RADIUS}")
        if len(self.regions) > 1:
            g = np.linspace(-SUPPORT_RADIUS, SUPPORT_RADIUS, 241)
            x1, x2 = np.meshgrid(g, g)
            count = sum(r.contains(x1, x2).astype(int) for r in self.regions)
            if np.any(count > 1):
                raise ValueError("regions of a RegionUnion must be pairwise disjoint")

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        out = np.zeros(x1.shape)
        free = np.ones(x1.shape, dtype=bool)
        for region in self.regions:
            mask = free & region.contains(x1, x2)
            if mask.any():
                out[mask] = region.amplitude_at(x1[mask], x2[mask])
            free &= ~mask
        return out

    @property
    def constant_amplitude(self) -> bool:
        return not any(callable(r.amplitude) for r in self.regions)

    def region_index(self, x1, x2) -> np.ndarray:
        """Index of the region containing each point, -1 outside the support."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        idx = np.full(x1.shape, -1)
        for i, region in enumerate(self.regions):
            idx[(idx < 0) & region.contains(x1, x2)] = i
        return idx


@dataclass(frozen=True, eq=False)
class SmoothAnalytic(_SourceBase):
    """The smooth three-Gaussian test source, set to zero for |p| >= cutoff."""

    cutoff: float = SUPPORT_RADIUS
    name: str = "smooth"

    @staticmethod
    def formula(y1, y2):
        a1 = 1.5 * np.asarray(y1, float)
        a2 = 1.5 * np.asarray(y2, float)
        return (
            0.3 * (1.0 - a2) ** 2 * np.exp(-(a1**2 + (a2 + 1.0) ** 2))
            - 0.03 * np.exp(-((a1 + 1.0) ** 2 + a2**2))
            - (0.3 * np.asarray(y1, float) - a1**3 - a2**5) * np.exp(-(a1**2 + a2**2))
        )

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.where(np.hypot(x1, x2) < self.cutoff, self.formula(x1, x2), 0.0)

    def breakpoint_primitives(self) -> tuple:
        return (Circle((0.0, 0.0), self.cutoff),)


@dataclass(frozen=True, eq=False)
class SourceSum(_SourceBase):
    """Pointwise sum of sources (used for superposition checks)."""

    terms: tuple[_SourceBase, ...]
    name: str = "sum"

    def evaluate(self, x1, x2):
        return sum(t.evaluate(x1, x2) for t in self.terms)

    def breakpoint_primitives(self) -> tuple:
        return tuple(p for t in self.terms for p in t.breakpoint_primitives())


def evaluate_source(model: _SourceBase, p) -> float | np.ndarray:
    """S(p) for a point or an array of points with trailing dimension 2."""
    return model(p)


def boundary_descriptor(model: _SourceBase) -> BoundaryDescriptor:
    """Exact boundary curves (circles, segments) and polygon vertices of ``model``."""
    if isinstance(model, SmoothAnalytic):
        raise TypeError("a smooth source has no sharp boundary")
    if isinstance(model, SourceSum):
        out = BoundaryDescriptor()
        for t in model.terms:
            out = out + boundary_descriptor(t)
        return out
    out = BoundaryDescriptor()
    for region in model.regions:
        out = out + region.boundary()
    return out


# ---------------------------------------------------------------------------
# catalogue


def annulus_source(center=(0.0, 0.0), r_inner=0.5, r_outer=1.5, amplitude=1.0) -> RegionUnion:
    return RegionUnion((Region(Annulus(center, r_inner, r_outer), amplitude),), name="annulus")


def disk_source(center=(0.0, 0.0), radius=1.0, amplitude=1.0) -> RegionUnion:
    return RegionUnion((Region(Annulus(center, 0.0, radius), amplitude),), name="disk")


def square_source(lower=(0.0, 0.0), side=1.0, amplitude=1.0) -> RegionUnion:
    a, b = lower
    verts = ((a, b), (a + side, b), (a + side, b + side), (a, b + side))
    return RegionUnion((Region(Polygon(verts), amplitude),), name="square")


def smooth_source() -> SmoothAnalytic:
    return SmoothAnalytic()


def _load_fixture(name: str) -> dict:
    text = resources.files("biharmonic_isp.fixtures").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def cross_source() -> RegionUnion:
    """Cross-shaped 12-gon approximating the polygonal test source."""
    return source_from_dict(_load_fixture("cross"))


def smiling_bear_source() -> RegionUnion:
    """Piecewise-constant bear face; geometry fixed in fixtures/smiling_bear.json."""
    return source_from_dict(_load_fixture("smiling_bear"))


_FIXTURES = {
    "annulus": annulus_source,
    "disk": disk_source,
    "square": square_source,
    "cross": cross_source,
    "smiling_bear": smiling_bear_source,
    "smooth": smooth_source,
}


def fixture(name: str) -> _SourceBase:
    try:
        return _FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown source fixture {name!r}; known: {sorted(_FIXTURES)}") from None


# ---------------------------------------------------------------------------
# (de)serialisation used by experiment configs


def _shape_from_dict(d: dict) -> Annulus | Polygon:
    kind = d["kind"]
    if kind == "annulus":
        return Annulus(tuple(d.get("center", (0.0, 0.0))), d.get("r_inner", 0.0), d["r_outer"])
    if kind == "disk":
        return Annulus(tuple(d.get("center", (0.0, 0.0))), 0.0, d["radius"])
    if kind == "polygon":
        return Polygon(tuple(tuple(v) for v in d["vertices"]))
    raise ValueError(f"unknown shape kind {kind!r}")


def _shape_to_dict(s: Annulus | Polygon) -> dict:
    if isinstance(s, Annulus):
        return {"kind": "annulus", "center": list(s.center), "r_inner": s.r_inner, "r_outer": s.r_outer}
    return {"kind": "polygon", "vertices": [list(v) for v in s.vertices]}


def source_from_dict(d: dict) -> _SourceBase:
    """Build a source from a config declaration.

    Accepted forms: ``{"fixture": name}``, ``{"kind": "smooth"}``,
    a single shape ``{"kind": "annulus" | "disk" | "polygon", ..., "amplitude": a}``
    or ``{"kind": "regions", "regions": [{"shape": {...}, "amplitude": a, "holes": [...]}, ...]}``.
    """
    if "fixture" in d:
        return fixture(d["fixture"])
    kind = d.get("kind")
    if kind == "smooth":
        return SmoothAnalytic(cutoff=d.get("cutoff", SUPPORT_RADIUS))
    if kind == "regions":
        regions = tuple(
            Region(
                _shape_from_dict(r["shape"]),
                float(r.get("amplitude", 1.0)),
                tuple(_shape_from_dict(h) for h in r.get("holes", ())),
            )
            for r in d["regions"]
        )
        return RegionUnion(regions, name=d.get("name", "regions"))
    if kind in ("annulus", "disk", "polygon"):
        region = Region(_shape_from_dict(d), float(d.get("amplitude", 1.0)))
        return RegionUnion((region,), name=d.get("name", kind))
    raise ValueError(f"cannot build a source from {d!r}")


def source_to_dict(model: _SourceBase) -> dict:
    if isinstance(model, SmoothAnalytic):
        return {"kind": "smooth", "cutoff": model.cutoff}
    if isinstance(model, RegionUnion):
        if not model.constant_amplitude:
            raise ValueError("only constant-amplitude regions can be serialised")
        return {
            "kind": "regions",
            "name": model.name,
            "regions": [
                {
                    "shape": _shape_to_dict(r.shape),
                    "amplitude": float(r.amplitude),
                    "holes": [_shape_to_dict(h) for h in r.holes],
                }
                for r in model.regions
            ],
        }
    raise ValueError(f"cannot serialise {type(model).__name__}")
