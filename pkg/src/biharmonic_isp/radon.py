"""Circular Radon data seen from one sensor, its derivative, and jump analysis.

For a sensor x the profile

    I_x(r) = int_{|y - x| = r} S(y) ds(y) = int_0^inf 8 k^3 r Im u^s(x, k) J_0(k r) dk

is recovered from multi-frequency data by truncating the k-integral to the
measured band.  Boundaries of piecewise constant sources show up as
singularities of I_x'(r): one-sided 1/sqrt blow-ups where the circle is
tangent to a boundary curve, bounded steps where it crosses a polygon vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.ndimage import gaussian_filter1d

from . import specfun
from .forward import FieldDataset
from .sources import Circle, Segment, boundary_descriptor

__all__ = [
    "RadialProfile",
    "SingularRadius",
    "JumpReport",
    "WindowError",
    "DetectorSettings",
    "circular_radon_exact",
    "exact_profile",
    "radon_from_dataset",
    "differentiate_profile",
    "predicted_singular_radii",
    "detect_jumps",
    "count_vertex",
    "count_annular",
    "KINDS",
]

KINDS = ("annulus-tangency", "edge-tangency", "vertex", "vertex-with-tangency", "unclassified")
TANGENCY_KINDS = ("annulus-tangency", "edge-tangency")
VERTEX_KINDS = ("vertex", "vertex-with-tangency")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples on the uniform grid r_j = j dr, j = 0..n-1.

    ``k_plus`` records the band limit of profiles recovered from data (None
    for exact profiles); the jump detector scales its windows with it.
    """

    sensor: tuple[float, float]
    dr: float
    values: np.ndarray
    k_plus: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "sensor", (float(self.sensor[0]), float(self.sensor[1])))
        if self.dr <= 0:
            raise ValueError("dr must be positive")

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.values.size)

    @property
    def r_max(self) -> float:
        return self.dr * (self.values.size - 1)

    def __len__(self) -> int:
        return self.values.size


def radial_grid(r_max: float = 5.0, dr: float = 0.01) -> np.ndarray:
    n = int(round(r_max / dr))
    return dr * np.arange(n + 1)


# ---------------------------------------------------------------------------
# exact transform


def _circle_crossings(x, r, prim) -> list[float]:
    """Polar angles (about x) where the circle |y - x| = r meets a primitive."""
    if isinstance(prim, Circle):
        cx, cy = prim.center[0] - x[0], prim.center[1] - x[1]
        d = math.hypot(cx, cy)
        rho = prim.radius
        if d == 0 or d > r + rho or d < abs(r - rho):
            return []
        alpha = math.atan2(cy, cx)
        cosb = max(-1.0, min(1.0, (r * r + d * d - rho * rho) / (2 * r * d)))
        b = math.acos(cosb)
        return [alpha - b, alpha + b]
    if isinstance(prim, Segment):
        ax, ay = prim.start[0] - x[0], prim.start[1] - x[1]
        ex, ey = prim.end[0] - prim.start[0], prim.end[1] - prim.start[1]
        qa = ex * ex + ey * ey
        qb = 2 * (ax * ex + ay * ey)
        qc = ax * ax + ay * ay - r * r
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            return []
        sq = math.sqrt(disc)
        out = []
        for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
            if -1e-14 <= t <= 1 + 1e-14:
                out.append(math.atan2(ay + t * ey, ax + t * ex))
        return out
    raise TypeError(f"unknown boundary primitive {prim!r}")


def _arc_integral(f, a: float, b: float, rtol: float) -> float:
    # absolute floor scaled to the integrand, for arcs whose integral is ~0 (tangent circles)
    scale = float(np.abs(f(np.linspace(a, b, 65))).max()) * (b - a)
    val, _ = integrate.quad(lambda t: float(f(np.array([t]))[0]), a, b, epsrel=rtol,
                            epsabs=max(rtol * scale, 1e-300), limit=200)
    return val


def circular_radon_exact(model, x, r: float, rtol: float = 1e-8) -> float:
    """Arc integral of S over the circle of radius r about x.

    The circle is cut at its crossings with the source's breakpoint curves;
    constant-amplitude pieces contribute amplitude times arc length exactly,
    other pieces use adaptive quadrature.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    if r == 0:
        return 0.0
    x = (float(x[0]), float(x[1]))
    cuts = []
    for prim in model.breakpoint_primitives():
        cuts.extend(_circle_crossings(x, r, prim))
    cuts = np.sort(np.mod(np.asarray(cuts, dtype=float), 2 * np.pi))
    if cuts.size >= 2:
        # near-tangent crossings bound slivers worth < 1e-7 r max|S|; merge them into one cut
        gap = np.diff(np.concatenate((cuts, [cuts[0] + 2 * np.pi])))
        cuts = cuts[gap >= 1e-7] if np.any(gap >= 1e-7) else cuts[:1]
    if cuts.size == 0:
        cuts = np.array([0.0])
    edges = np.concatenate((cuts, [cuts[0] + 2 * np.pi]))
    lo, hi = edges[:-1], edges[1:]
    keep = hi - lo > 1e-15
    lo, hi = lo[keep], hi[keep]

    def s_on_arc(phi):
        return model.evaluate(x[0] + r * np.cos(phi), x[1] + r * np.sin(phi))

    if getattr(model, "constant_amplitude", False):
        mid = 0.5 * (lo + hi)
        return float(r * np.sum(s_on_arc(mid) * (hi - lo)))
    total = 0.0
    for a, b in zip(lo, hi):
        m = 0.5 * (a + b)
        probe = s_on_arc(np.array([a + 0.25 * (b - a), m, b - 0.25 * (b - a)]))
        if not np.any(probe) and _zero_arc(s_on_arc, a, b):
            continue
        total += r * _arc_integral(s_on_arc, a, b, rtol)
    return float(total)


def _zero_arc(f, a, b) -> bool:
    return not np.any(f(np.linspace(a, b, 65)[1:-1]))


def exact_profile(model, x, r_max: float = 5.0, dr: float = 0.01) -> RadialProfile:
    r = radial_grid(r_max, dr)
    vals = np.array([circular_radon_exact(model, x, float(rj)) for rj in r])
    return RadialProfile(tuple(x), dr, vals)


# ---------------------------------------------------------------------------
# from data


def radon_from_dataset(dataset: FieldDataset, l: int, r_max: float = 5.0, dr: float = 0.01,
                       weighting: str = "trapezoid") -> RadialProfile:
    """I_x(r_j) ~ sum_m w_m 8 k_m^3 r_j Im u^s(x_l, k_m) J_0(k_m r_j).

    ``weighting="unit"`` gives the plain sum (w_m = 1) instead of trapezoid weights.
    """
    if not 0 <= l < dataset.sensors.L:
        raise IndexError(f"sensor index {l} outside 0..{dataset.sensors.L - 1}")
    k = dataset.freqs.values
    w = dataset.freqs.weights(weighting)
    r = radial_grid(r_max, dr)
    coef = w * 8.0 * k**3 * dataset.u_s[l].imag
    vals = np.zeros(r.size)
    rr = r[1:]
    j0 = specfun.bessel_jy01(k[None, :] * rr[:, None])[0]
    vals[1:] = rr * (j0 @ coef)
    sensor = dataset.sensors.positions[l]
    return RadialProfile((sensor[0], sensor[1]), dr, vals, float(k[-1]))


def differentiate_profile(profile: RadialProfile) -> RadialProfile:
    """Central differences inside, one-sided first differences at the ends."""
    v = profile.values
    if v.size < 3:
        raise ValueError("need at least 3 samples to differentiate")
    return RadialProfile(profile.sensor, profile.dr, np.gradient(v, profile.dr, edge_order=1), profile.k_plus)


# ---------------------------------------------------------------------------
# geometry of singular radii


@dataclass(frozen=True)
class SingularRadius:
    r0: float
    bounded: float = math.nan
    singular: float = math.nan
    kind: str = "unclassified"


def predicted_singular_radii(model, x, tol: float = 1e-9) -> list[SingularRadius]:
    """Radii where I_x' is singular, from the exact boundary of ``model``.

    Circle tangencies |x - c| +- rho, edge tangencies (perpendicular foot inside
    the edge) and polygon vertex distances.  Coincident radii are merged.
    """
    desc = boundary_descriptor(model)
    x = np.asarray(x, float)
    found: list[tuple[float, str]] = []
    for c in desc.circles:
        d = float(np.hypot(*(np.asarray(c.center) - x)))
        for r0 in (d - c.radius, d + c.radius):
            if r0 > tol:
                found.append((abs(r0), "annulus-tangency"))
    for s in desc.segments:
        a, b = np.asarray(s.start), np.asarray(s.end)
        e = b - a
        t = float(np.dot(x - a, e) / np.dot(e, e))
        if -tol <= t <= 1 + tol:
            found.append((float(np.linalg.norm(a + t * e - x)), "edge-tangency"))
    for v in desc.vertices:
        found.append((float(np.linalg.norm(np.asarray(v) - x)), "vertex"))
    found.sort()
    merged: list[SingularRadius] = []
    for r0, kind in found:
        if merged and abs(merged[-1].r0 - r0) <= 1e-9:
            prev = merged[-1]
            if prev.kind == kind:
                continue
            if {prev.kind, kind} & set(VERTEX_KINDS):
                kind = "vertex-with-tangency"
            merged[-1] = SingularRadius(prev.r0, kind=kind)
        else:
            merged.append(SingularRadius(r0, kind=kind))
    return merged


# ---------------------------------------------------------------------------
# jump detection


class WindowError(ValueError):
    """Fit window shorter than the minimum of 4 samples."""


@dataclass(frozen=True)
class JumpReport:
    sensor: tuple[float, float]
    jumps: tuple[SingularRadius, ...] = ()
    r_max: float = math.inf
    dr: float = 0.01

    @property
    def radii(self) -> np.ndarray:
        return np.array([j.r0 for j in self.jumps])

    def of_kind(self, kinds) -> list[SingularRadius]:
        kinds = (kinds,) if isinstance(kinds, str) else tuple(kinds)
        return [j for j in self.jumps if j.kind in kinds]

    def __len__(self) -> int:
        return len(self.jumps)


@dataclass(frozen=True)
class DetectorSettings:
    """Tuning of :func:`detect_jumps`; all lengths are in samples.

    Lengths refer to data with k_plus = 50 on dr = 0.01 and are stretched in
    proportion to the resolution length pi / k_plus for other band limits.

    ``smoothing``   Gaussian width used for the jump locator |I_x''|
    ``separation``  half-width of the non-maximum suppression neighbourhood
    ``dominance``   a peak survives when no neighbour is larger than peak / dominance
    ``floor``       peaks below floor * (largest peak) are ignored
    ``skip``        samples next to r0 left out of the sqrt fit
    ``blowup``      |I_x'| overshoot ratio at or above which a jump is singular
    ``step``        overshoot ratio at or below which a jump is bounded
    """

    smoothing: float = 1.0
    separation: int = 12
    dominance: float = 0.7
    floor: float = 0.25
    skip: int = 2
    blowup: float = 2.35
    step: float = 2.05


def _fit_side(r, d, r0, side, skip, window):
    if side > 0:
        idx = np.nonzero(r > r0 + 1e-12)[0][skip:skip + window]
        eps = r[idx] - r0
    else:
        idx = np.nonzero(r < r0 - 1e-12)[0][::-1][skip:skip + window]
        eps = r0 - r[idx]
    if idx.size < 2:
        return None
    design = np.stack([np.ones(idx.size), 1.0 / np.sqrt(eps)], axis=1)
    return np.linalg.lstsq(design, d[idx], rcond=None)[0]


def _vertex_offset(t, j):
    a, b, c = t[j - 1], t[j], t[j + 1]
    den = a - 2 * b + c
    return 0.5 * (a - c) / den if den != 0 else 0.0


def detect_jumps(profile: RadialProfile, window: int = 8, threshold: float = 6.0,
                 settings: DetectorSettings | None = None) -> JumpReport:
    """Singular radii of I_x' with their bounded / singular amplitudes.

    Candidates are peaks of the smoothed |I_x''| above ``threshold`` times its
    median, thinned by non-maximum suppression so that the k-truncation side
    lobes around a strong singularity are not reported.  Each survivor is
    fitted on both sides by a + b/sqrt(|r - r0|) (``window`` samples per side)
    giving P1 = a_right - a_left and P2 = b + c.  The type follows from how
    far |I_x'| overshoots the level it settles to on the far side: a bounded
    step overshoots only by the Gibbs ratio, a 1/sqrt blow-up by much more.
    """
    if window < 4:
        raise WindowError("fit window must hold at least 4 samples")
    cfg = settings or DetectorSettings()
    dr = profile.dr
    r = profile.r
    n = r.size
    d = np.gradient(profile.values, dr)
    scale = 1.0 if profile.k_plus is None else max(1.0, 1.0 / (2.0 * profile.k_plus * dr))
    if cfg.smoothing > 0:
        t = np.abs(_gaussian_derivative(d, cfg.smoothing * scale)) / dr
    else:
        t = np.abs(np.gradient(d, dr))
    margin = cfg.skip + window + 1
    if n <= 2 * margin + 2:
        return JumpReport(profile.sensor, (), profile.r_max, dr)
    inner = t[margin:n - margin]
    med = float(np.median(inner))
    top = float(inner.max())
    if top <= 0:
        return JumpReport(profile.sensor, (), profile.r_max, dr)
    peaks = [
        j for j in range(margin, n - margin)
        if t[j] >= t[j - 1] and t[j] > t[j + 1] and t[j] > threshold * med and t[j] >= cfg.floor * top
    ]
    sep = int(round(cfg.separation * scale))
    near, far_off = int(round(6 * scale)), int(round(10 * scale))
    survivors = [j for j in peaks if not any(i != j and abs(i - j) <= sep and cfg.dominance * t[i] > t[j]
                                             for i in peaks)]
    found = []
    for j in survivors:
        rj = (j + _vertex_offset(t, j)) * dr
        lo, hi = max(1, j - sep), min(n - 1, j + sep + 1)
        k = lo + int(np.argmax(np.abs(d[lo:hi])))
        side = 1 if k > j else -1
        opp = d[np.clip(j - side * np.arange(near, near + 2 * window), 0, n - 1)]
        far = d[np.clip(j + side * np.arange(far_off, far_off + 2 * window), 0, n - 1)]
        base = float(np.median(opp))
        settle = float(np.median(far)) - base
        overshoot = abs(d[k] - base) / max(abs(settle), 1e-12 * max(1.0, abs(d[k])))
        if overshoot >= cfg.blowup:
            kind = "tangency"
        elif overshoot <= cfg.step:
            kind = "vertex"
        else:
            kind = "vertex-with-tangency"
        if kind != "vertex" and 0 < k < n - 1:
            rk = (k + _vertex_offset(np.abs(d), k)) * dr
            r0 = 0.5 * (rj + rk)
        else:
            r0 = rj
        right = _fit_side(r, d, r0, 1, cfg.skip, window)
        left = _fit_side(r, d, r0, -1, cfg.skip, window)
        if right is None or left is None:
            found.append(SingularRadius(r0, kind="unclassified"))
            continue
        found.append(SingularRadius(r0, float(right[0] - left[0]), float(right[1] + left[1]), kind))
    has_vertex = any(f.kind in VERTEX_KINDS for f in found)
    label = "edge-tangency" if has_vertex else "annulus-tangency"
    jumps = tuple(sorted(
        (SingularRadius(f.r0, f.bounded, f.singular, label) if f.kind == "tangency" else f for f in found),
        key=lambda s: s.r0,
    ))
    jumps = tuple(s for s in jumps if 0 < s.r0 < profile.r_max)
    return JumpReport(profile.sensor, jumps, profile.r_max, dr)


def _gaussian_derivative(y: np.ndarray, sigma: float) -> np.ndarray:
    return gaussian_filter1d(y, sigma, order=1, mode="nearest")


# ---------------------------------------------------------------------------
# counting functionals


def _sensor_array(reports) -> np.ndarray:
    return np.array([rep.sensor for rep in reports], dtype=float).reshape(-1, 2)


def _hits(reports, targets: np.ndarray, tol: np.ndarray, kinds) -> np.ndarray:
    """Per-sensor booleans: a jump of one of ``kinds`` lies within tol of targets[l, ...]."""
    out = np.zeros(targets.shape, dtype=bool)
    for l, rep in enumerate(reports):
        radii = np.array([j.r0 for j in rep.jumps if kinds is None or j.kind in kinds])
        if radii.size == 0:
            continue
        diff = np.abs(targets[l][..., None] - radii)
        out[l] = np.any(diff <= tol[l] + 1e-12, axis=-1)
    return out


def count_vertex(candidate, reports, tol: float | None = None) -> int | np.ndarray:
    """F_vertex: sensors whose report has a vertex-type jump at |x_l - candidate|.

    ``candidate`` may be one point or an array of points (..., 2); the
    tolerance defaults to 2 dr of each report.
    """
    reports = list(reports)
    cand = np.asarray(candidate, dtype=float)
    if not reports:
        return 0 if cand.ndim == 1 else np.zeros(cand.shape[:-1], dtype=int)
    xs = _sensor_array(reports)
    dist = np.stack([np.hypot(cand[..., 0] - x[0], cand[..., 1] - x[1]) for x in xs])
    tols = np.array([2 * rep.dr if tol is None else tol for rep in reports])
    hits = _hits(reports, dist, tols, VERTEX_KINDS)
    total = hits.sum(axis=0)
    return int(total) if cand.ndim == 1 else total


def count_annular(center, d, reports, tol: float | None = None) -> int | np.ndarray:
    """F_annular: jumps at |x_l - y| + d plus jumps at |x_l - y| - d, summed over sensors.

    ``center`` may be an array of points and ``d`` an array of radii; they
    broadcast against each other.
    """
    reports = list(reports)
    cen = np.asarray(center, dtype=float)
    rad = np.asarray(d, dtype=float)
    shape = np.broadcast_shapes(cen.shape[:-1], rad.shape)
    if not reports:
        return 0 if shape == () else np.zeros(shape, dtype=int)
    xs = _sensor_array(reports)
    tols = np.array([2 * rep.dr if tol is None else tol for rep in reports])
    total = np.zeros(shape, dtype=int)
    for sign in (1.0, -1.0):
        dist = np.stack([np.broadcast_to(np.hypot(cen[..., 0] - x[0], cen[..., 1] - x[1]) + sign * rad, shape)
                         for x in xs])
        total = total + _hits(reports, dist, tols, None).sum(axis=0)
    return int(total) if shape == () else total
