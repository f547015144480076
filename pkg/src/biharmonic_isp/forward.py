"""Synthetic multi-frequency data for the biharmonic wave equation.

The scattered field of a source S is u^s(x, k) = int Phi_k(x, y) S(y) dy with

    Phi_k(x, y) = i / (8 k^2) * (H_0^(1)(k|x-y|) + 2i/pi K_0(k|x-y|)),

which already satisfies the radiation condition, so no PDE is solved.  The
area integral is a tensor midpoint rule over the box [-2, 2]^2.  Two
evaluations of that same rule are offered:

``direct``
    sum the kernel over every cell (reference path, one point at a time);
``binned``
    deposit the cell weights of each sensor onto a fine grid of distances
    with 4-point Lagrange weights, then contract with the kernel sampled on
    that grid.  The kernel depends on |x - y| only, so the kernel table is
    shared by all sensors and the whole (sensor x frequency) matrix costs one
    matrix product.  The interpolation error is O((k h_bin)^4).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import specfun
from ._tables import lagrange4
from .sources import Circle, _SourceBase as SourceModelLike, _segment_distance, source_to_dict

__all__ = [
    "SensorArray",
    "FrequencyGrid",
    "ForwardQuadrature",
    "FieldDataset",
    "QuadratureResolutionError",
    "SingularArgumentError",
    "fundamental_solution",
    "laplacian_fundamental_solution",
    "add_noise",
    "scattered_field",
    "laplacian_scattered_field",
    "field_matrices",
    "simulate_dataset",
    "noise_draws",
    "write_dataset",
    "read_dataset",
    "DATASET_FORMAT_VERSION",
]

log = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
_SINGULAR_TOL = 1e-12


class QuadratureResolutionError(ValueError):
    """The quadrature grid has fewer than 10 cells per wavelength."""


class SingularArgumentError(ValueError):
    """The fundamental solution was requested at coincident points."""


@dataclass(frozen=True)
class SensorArray:
    """L sensors at angles theta0 + 2 pi l / L on the circle of radius ``radius``."""

    L: int
    radius: float = 3.0
    theta0: float = 0.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("sensor count L must be a positive integer")
        if self.radius <= 0:
            raise ValueError("measurement radius must be positive")

    @property
    def angles(self) -> np.ndarray:
        return self.theta0 + 2.0 * np.pi * np.arange(self.L) / self.L

    @property
    def positions(self) -> np.ndarray:
        a = self.angles
        return self.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)

    @property
    def normals(self) -> np.ndarray:
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    def __len__(self) -> int:
        return self.L


@dataclass(frozen=True)
class FrequencyGrid:
    """Wavenumbers k_m = k_minus + (m - 1) dk, m = 1..N_max, ending at k_plus."""

    k_minus: float
    k_plus: float
    dk: float

    def __post_init__(self):
        if not (0 < self.k_minus <= self.k_plus) or self.dk <= 0:
            raise ValueError("need 0 < k_minus <= k_plus and dk > 0")
        steps = (self.k_plus - self.k_minus) / self.dk
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("(k_plus - k_minus) / dk must be an integer")

    @property
    def count(self) -> int:
        return int(round((self.k_plus - self.k_minus) / self.dk)) + 1

    @property
    def values(self) -> np.ndarray:
        k = self.k_minus + self.dk * np.arange(self.count)
        k[-1] = self.k_plus
        return k

    def weights(self, kind: str = "trapezoid") -> np.ndarray:
        """Quadrature weights over the grid: ``trapezoid`` or ``unit`` (plain sum)."""
        if kind == "unit":
            return np.ones(self.count)
        if kind != "trapezoid":
            raise ValueError(f"unknown k-weighting {kind!r}")
        w = np.full(self.count, self.dk)
        if self.count > 1:
            w[0] = w[-1] = 0.5 * self.dk
        return w

    def __len__(self) -> int:
        return self.count


@dataclass(frozen=True)
class ForwardQuadrature:
    """Tensor midpoint rule on [-half_width, half_width]^2.

    ``subsample > 1`` replaces the centre value by an s x s sub-cell average
    in cells cut by a curve across which S may jump (region boundaries, the
    truncation circle of the smooth source).
    """

    n_cells: int = 400
    half_width: float = 2.0
    method: str = "binned"
    bin_width: float = 5e-4
    subsample: int = 1

    def __post_init__(self):
        if self.method not in ("direct", "binned"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.n_cells < 1 or self.subsample < 1 or self.bin_width <= 0:
            raise ValueError("invalid quadrature parameters")

    @property
    def cell(self) -> float:
        return 2.0 * self.half_width / self.n_cells

    def check(self, k_max: float) -> None:
        if self.cell > (2.0 * np.pi / k_max) / 10.0:
            raise QuadratureResolutionError(
                f"cell size {self.cell:g} exceeds a tenth of the wavelength at k = {k_max:g}"
            )

    def cells(self, model: SourceModelLike):
        """Centres and weights S(c) h^2 of the cells where S is non-zero."""
        h = self.cell
        g = -self.half_width + h * (np.arange(self.n_cells) + 0.5)
        c1, c2 = np.meshgrid(g, g, indexing="ij")
        vals = np.asarray(model.evaluate(c1, c2), dtype=float)
        if self.subsample > 1:
            vals = self._refine(model, g, vals)
        w = vals * h * h
        nz = w != 0
        return c1[nz], c2[nz], w[nz]

    def _refine(self, model, g, vals):
        h = self.cell
        c1, c2 = np.meshgrid(g, g, indexing="ij")
        mixed = _near_breakpoints(model, c1, c2, 0.5 * math.sqrt(2.0) * h)
        i, j = np.nonzero(mixed)
        if i.size == 0:
            return vals
        s = self.subsample
        off = h * ((np.arange(s) + 0.5) / s - 0.5)
        o1, o2 = np.meshgrid(off, off, indexing="ij")
        out = vals.copy()
        for a in range(0, i.size, 4096):
            ii, jj = i[a:a + 4096], j[a:a + 4096]
            p1 = g[ii][:, None] + o1.ravel()[None, :]
            p2 = g[jj][:, None] + o2.ravel()[None, :]
            out[ii, jj] = np.asarray(model.evaluate(p1, p2), dtype=float).mean(axis=1)
        return out


def _near_breakpoints(model, x1, x2, tol: float) -> np.ndarray:
    """Cells whose centre lies within ``tol`` of a curve where S may jump."""
    near = np.zeros(x1.shape, dtype=bool)
    for prim in model.breakpoint_primitives():
        if isinstance(prim, Circle):
            d = np.abs(np.hypot(x1 - prim.center[0], x2 - prim.center[1]) - prim.radius)
        else:
            d = _segment_distance(x1, x2, prim.start, prim.end)
        near |= d <= tol
    return near


# ---------------------------------------------------------------------------
# kernels


def _radial_kernels(t: np.ndarray, k: float | np.ndarray, laplacian: bool):
    """Phi_k and Delta Phi_k as functions of t = k |x - y| > 0."""
    j0, _, y0, _ = specfun.bessel_jy01(t)
    k0 = specfun.macdonald_k0(t)
    phi = (1j * j0 - y0 - (2.0 / np.pi) * k0) / (8.0 * np.asarray(k) ** 2)
    if not laplacian:
        return phi, None
    lap = -(1j * j0 - y0 + (2.0 / np.pi) * k0) / 8.0
    return phi, lap


def _distance(x, y) -> np.ndarray:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d = np.hypot(x[..., 0] - y[..., 0], x[..., 1] - y[..., 1])
    if np.any(d < _SINGULAR_TOL):
        raise SingularArgumentError("fundamental solution is singular at x = y")
    return d


def fundamental_solution(x, y, k: float):
    """Phi_k(x, y) = i/(8k^2) (H_0^(1)(k|x-y|) + 2i/pi K_0(k|x-y|))."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    phi, _ = _radial_kernels(k * _distance(x, y), k, laplacian=False)
    return complex(phi) if np.ndim(phi) == 0 else phi


def laplacian_fundamental_solution(x, y, k: float):
    """Delta_x Phi_k(x, y) = -(1/8) (i H_0^(1)(k|x-y|) + 2/pi K_0(k|x-y|))."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    _, lap = _radial_kernels(k * _distance(x, y), k, laplacian=True)
    return complex(lap) if np.ndim(lap) == 0 else lap


# ---------------------------------------------------------------------------
# fields


def _direct_field(model, x, k, quad: ForwardQuadrature, laplacian: bool) -> complex:
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    quad.check(k)
    c1, c2, w = quad.cells(model)
    if w.size == 0:
        return 0j
    d = np.hypot(x[0] - c1, x[1] - c2)
    if np.any(d < _SINGULAR_TOL):
        raise SingularArgumentError("evaluation point coincides with a quadrature node")
    phi, lap = _radial_kernels(k * d, k, laplacian)
    kern = lap if laplacian else phi
    return complex(np.sum(kern * w))


def scattered_field(model, x, k: float, quadrature: ForwardQuadrature | None = None) -> complex:
    """u^s(x, k) by the direct midpoint sum."""
    quad = quadrature or ForwardQuadrature(method="direct")
    if quad.method == "binned":
        ds = _binned_matrices(model, np.atleast_2d(np.asarray(x, float)), np.array([k]), quad, False)
        return complex(ds[0][0, 0])
    return _direct_field(model, np.asarray(x, float), k, quad, laplacian=False)


def laplacian_scattered_field(model, x, k: float, quadrature: ForwardQuadrature | None = None) -> complex:
    """Delta_x u^s(x, k) by the direct midpoint sum."""
    quad = quadrature or ForwardQuadrature(method="direct")
    if quad.method == "binned":
        ds = _binned_matrices(model, np.atleast_2d(np.asarray(x, float)), np.array([k]), quad, True)
        return complex(ds[1][0, 0])
    return _direct_field(model, np.asarray(x, float), k, quad, laplacian=True)


def _binned_matrices(model, points: np.ndarray, ks: np.ndarray, quad: ForwardQuadrature, laplacian: bool,
                     chunk: int = 64):
    quad.check(float(np.max(ks)))
    c1, c2, w = quad.cells(model)
    n_pts = points.shape[0]
    u = np.zeros((n_pts, ks.size), dtype=complex)
    lap = np.zeros((n_pts, ks.size), dtype=complex) if laplacian else None
    if w.size == 0:
        return u, lap

    dists = [np.hypot(p[0] - c1, p[1] - c2) for p in points]
    dmin = min(float(d.min()) for d in dists)
    if dmin < 10 * quad.bin_width:
        raise SingularArgumentError("binned quadrature needs points away from the source support")
    dmax = max(float(d.max()) for d in dists)
    hb = quad.bin_width
    rho0 = dmin - 2 * hb
    n_bins = int(math.ceil((dmax - rho0) / hb)) + 3
    rho = rho0 + hb * np.arange(n_bins)

    weights = np.zeros((n_bins, n_pts))
    for i, d in enumerate(dists):
        t = (d - rho0) / hb
        j = np.floor(t).astype(np.int64)
        for offset, lw in zip((-1, 0, 1, 2), lagrange4(t - j)):
            weights[:, i] += np.bincount(j + offset, weights=w * lw, minlength=n_bins)

    for start in range(0, ks.size, chunk):
        kc = ks[start:start + chunk]
        t = kc[:, None] * rho[None, :]
        phi, dphi = _radial_kernels(t, kc[:, None], laplacian)
        u[:, start:start + chunk] = (phi @ weights).T
        if laplacian:
            lap[:, start:start + chunk] = (dphi @ weights).T
    return u, lap


def field_matrices(model, sensors: SensorArray, freqs: FrequencyGrid,
                   quadrature: ForwardQuadrature | None = None, with_laplacian: bool = False):
    """Noiseless u^s (and optionally Delta u^s) as (L, N_max) complex matrices."""
    quad = quadrature or ForwardQuadrature()
    ks = freqs.values
    pts = sensors.positions
    if quad.method == "binned":
        return _binned_matrices(model, pts, ks, quad, with_laplacian)
    u = np.array([[_direct_field(model, p, k, quad, False) for k in ks] for p in pts])
    lap = None
    if with_laplacian:
        lap = np.array([[_direct_field(model, p, k, quad, True) for k in ks] for p in pts])
    return u, lap


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True, eq=False)
class FieldDataset:
    sensors: SensorArray
    freqs: FrequencyGrid
    u_s: np.ndarray
    laplacian_u_s: np.ndarray | None = None
    delta: float = 0.0
    seed: int = 0
    source: str = ""

    def __post_init__(self):
        shape = (self.sensors.L, self.freqs.count)
        if self.u_s.shape != shape:
            raise ValueError(f"u_s has shape {self.u_s.shape}, expected {shape}")
        if self.laplacian_u_s is not None and self.laplacian_u_s.shape != shape:
            raise ValueError("laplacian_u_s must have the same shape as u_s")

    @property
    def has_laplacian(self) -> bool:
        return self.laplacian_u_s is not None

    def scaled(self, c: float) -> "FieldDataset":
        lap = None if self.laplacian_u_s is None else c * self.laplacian_u_s
        return FieldDataset(self.sensors, self.freqs, c * self.u_s, lap, self.delta, self.seed, self.source)

    def __add__(self, other: "FieldDataset") -> "FieldDataset":
        if self.sensors != other.sensors or self.freqs != other.freqs:
            raise ValueError("datasets live on different sensor/frequency grids")
        lap = None
        if self.has_laplacian and other.has_laplacian:
            lap = self.laplacian_u_s + other.laplacian_u_s
        return FieldDataset(self.sensors, self.freqs, self.u_s + other.u_s, lap, 0.0, 0, "sum")

    def select_sensors(self, indices) -> "FieldDataset":
        """Sub-dataset restricted to some sensors; only valid for radial-profile work."""
        idx = np.atleast_1d(np.asarray(indices, dtype=int))
        sub = _SensorSubset(self.sensors, tuple(int(i) for i in idx))
        lap = None if self.laplacian_u_s is None else self.laplacian_u_s[idx]
        return FieldDataset(sub, self.freqs, self.u_s[idx], lap, self.delta, self.seed, self.source)


@dataclass(frozen=True)
class _SensorSubset(SensorArray):
    """Arbitrary subset of a uniform array (not a full circle)."""

    parent: SensorArray = None
    indices: tuple[int, ...] = ()

    def __init__(self, parent: SensorArray, indices: tuple[int, ...]):
        object.__setattr__(self, "L", len(indices))
        object.__setattr__(self, "radius", parent.radius)
        object.__setattr__(self, "theta0", parent.theta0)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "indices", indices)

    @property
    def angles(self) -> np.ndarray:
        return self.parent.angles[list(self.indices)]


def noise_draws(seed: int, L: int, N: int) -> np.ndarray:
    """Uniform(-1, 1) draws of shape (L, N, 2): channel 0 for u^s, 1 for Delta u^s.

    PCG64 with the draw order sensor-major, frequency-minor, field before
    Laplacian; the u^s draws do not depend on whether Laplacian data is kept.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-1.0, 1.0, size=(L, N, 2))


def simulate_dataset(model, sensors: SensorArray, freqs: FrequencyGrid, delta: float = 0.0,
                     seed: int = 0, with_laplacian: bool = False,
                     quadrature: ForwardQuadrature | None = None, source: str | None = None) -> FieldDataset:
    """Noisy data u^{s,delta} = u^s (1 + delta xi) on the sensor/frequency grid."""
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    u, lap = field_matrices(model, sensors, freqs, quadrature, with_laplacian)
    if source is None:
        try:
            source = json.dumps(source_to_dict(model), sort_keys=True)
        except ValueError:
            source = getattr(model, "name", type(model).__name__)
    return add_noise(FieldDataset(sensors, freqs, u, lap, 0.0, int(seed), source), delta, seed)


def add_noise(clean: FieldDataset, delta: float, seed: int) -> FieldDataset:
    """Multiplicative noise on noiseless data; same draws as :func:`simulate_dataset`."""
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    u, lap = clean.u_s, clean.laplacian_u_s
    if delta > 0:
        xi = noise_draws(seed, clean.sensors.L, clean.freqs.count)
        u = u * (1.0 + delta * xi[:, :, 0])
        if lap is not None:
            lap = lap * (1.0 + delta * xi[:, :, 1])
    return FieldDataset(clean.sensors, clean.freqs, u, lap, float(delta), int(seed), clean.source)


# ---------------------------------------------------------------------------
# file format

_HEADER_KEYS = ("format_version", "L", "R_meas", "k_minus", "k_plus", "dk", "delta", "seed",
                "laplacian", "source")


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset(dataset: FieldDataset, path) -> Path:
    """Header block of ``# key: value`` lines, then CSV rows l, m, Re u, Im u[, Re Lu, Im Lu]."""
    path = Path(path)
    s, f = dataset.sensors, dataset.freqs
    header = {
        "format_version": DATASET_FORMAT_VERSION,
        "L": s.L,
        "R_meas": _g17(s.radius),
        "k_minus": _g17(f.k_minus),
        "k_plus": _g17(f.k_plus),
        "dk": _g17(f.dk),
        "delta": _g17(dataset.delta),
        "seed": dataset.seed,
        "laplacian": int(dataset.has_laplacian),
        "source": dataset.source.replace("\n", " "),
    }
    if s.theta0:
        header["theta0"] = _g17(s.theta0)
    lines = [f"# {k}: {v}" for k, v in header.items()]
    cols = ["l", "m", "re_u", "im_u"] + (["re_lap", "im_lap"] if dataset.has_laplacian else [])
    lines.append(",".join(cols))
    u = dataset.u_s
    lap = dataset.laplacian_u_s
    for l in range(s.L):
        for m in range(f.count):
            row = [str(l), str(m + 1), _g17(u[l, m].real), _g17(u[l, m].imag)]
            if lap is not None:
                row += [_g17(lap[l, m].real), _g17(lap[l, m].imag)]
            lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


class DatasetFormatError(ValueError):
    pass


def read_dataset(path) -> FieldDataset:
    header: dict[str, str] = {}
    rows: list[list[str]] = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
            elif line and not line.startswith("l,"):
                rows.append(line.split(","))
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise DatasetFormatError(f"dataset header lacks {missing}")
    if int(header["format_version"]) != DATASET_FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported dataset format {header['format_version']}")
    sensors = SensorArray(int(header["L"]), float(header["R_meas"]), float(header.get("theta0", 0.0)))
    freqs = FrequencyGrid(float(header["k_minus"]), float(header["k_plus"]), float(header["dk"]))
    has_lap = bool(int(header["laplacian"]))
    L, N = sensors.L, freqs.count
    if len(rows) != L * N:
        raise DatasetFormatError(f"expected {L * N} rows, found {len(rows)}")
    u = np.zeros((L, N), dtype=complex)
    lap = np.zeros((L, N), dtype=complex) if has_lap else None
    for row in rows:
        l, m = int(row[0]), int(row[1]) - 1
        u[l, m] = complex(float(row[2]), float(row[3]))
        if has_lap:
            lap[l, m] = complex(float(row[4]), float(row[5]))
    return FieldDataset(sensors, freqs, u, lap, float(header["delta"]), int(header["seed"]), header["source"])
