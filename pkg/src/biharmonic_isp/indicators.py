"""Sampling indicators evaluated on a rectangular grid of points z.

All three share one structure: for each sensor x_l the z-dependence enters
only through rho = |z - x_l| and the directional factor nu_l . (z - x_l)/rho.
Each sensor's radial function is therefore tabulated once on a fine rho grid
(a matrix product against the frequency data) and interpolated at the grid
points, so the cost per grid point is O(L).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import specfun
from ._tables import RadialTable
from .forward import FieldDataset, fundamental_solution, laplacian_fundamental_solution

__all__ = [
    "SamplingGrid",
    "IndicatorField",
    "QuadratureSpec",
    "MissingChannelError",
    "indicator_boundary",
    "indicator_source_1",
    "indicator_source_2",
    "reciprocity_check",
    "FAST_GRID",
    "DEFAULT_GRID",
]

log = logging.getLogger(__name__)


class MissingChannelError(ValueError):
    """The dataset lacks a data channel the indicator needs."""


@dataclass(frozen=True)
class SamplingGrid:
    """Nodes x1_i, x2_j spanning ``domain`` = (x1_min, x1_max, x2_min, x2_max) inclusive."""

    domain: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    shape: tuple[int, int] = (401, 401)

    def __post_init__(self):
        a, b, c, d = self.domain
        if not (a < b and c < d) or min(self.shape) < 2:
            raise ValueError("grid needs a non-empty domain and at least 2 nodes per axis")

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], self.shape[0])

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(self.domain[2], self.domain[3], self.shape[1])

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def sample(self, model) -> "IndicatorField":
        """Ground truth S on the grid nodes."""
        z1, z2 = self.mesh()
        return IndicatorField(self, np.asarray(model.evaluate(z1, z2), float), "truth")


DEFAULT_GRID = SamplingGrid()
FAST_GRID = SamplingGrid(shape=(101, 101))


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """Values[i, j] at (x1_i, x2_j) of ``grid``."""

    grid: SamplingGrid
    values: np.ndarray
    kind: str = "field"

    def __post_init__(self):
        if self.values.shape != tuple(self.grid.shape):
            raise ValueError(f"values have shape {self.values.shape}, grid is {self.grid.shape}")

    @property
    def resolution(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def domain(self):
        return self.grid.domain


@dataclass(frozen=True)
class QuadratureSpec:
    """Spectral and radial steps of the inversion integrals in :func:`indicator_source_1`."""

    lambda_plus: float = 40.0
    d_lambda: float = 0.05
    dr: float = 0.01
    r_upper: float = 6.0
    k_weighting: str = "trapezoid"

    def __post_init__(self):
        if self.lambda_plus <= 0 or self.d_lambda <= 0 or self.dr <= 0 or self.r_upper <= 0:
            raise ValueError("quadrature steps and limits must be positive")
        if self.k_weighting not in ("trapezoid", "unit"):
            raise ValueError(f"unknown k-weighting {self.k_weighting!r}")

    @property
    def lambdas(self) -> np.ndarray:
        n = int(round(self.lambda_plus / self.d_lambda))
        return self.d_lambda * np.arange(1, n + 1)

    @property
    def lambda_weights(self) -> np.ndarray:
        w = np.full(self.lambdas.size, self.d_lambda)
        w[-1] *= 0.5
        return w

    @property
    def radii(self) -> np.ndarray:
        n = int(round(self.r_upper / self.dr))
        return self.dr * np.arange(1, n + 1)

    @property
    def radius_weights(self) -> np.ndarray:
        w = np.full(self.radii.size, self.dr)
        w[-1] *= 0.5
        return w


# ---------------------------------------------------------------------------
# shared geometry


def _check_sensors(dataset: FieldDataset) -> None:
    if dataset.sensors.L < 1:
        raise ValueError("indicator needs at least one sensor")


def _rho_range(dataset: FieldDataset, grid: SamplingGrid) -> tuple[float, float]:
    """Bounds of |z - x_l| over the grid rectangle and all sensors."""
    a, b, c, d = grid.domain
    lo, hi = np.inf, 0.0
    for x1, x2 in dataset.sensors.positions:
        dx = max(a - x1, 0.0, x1 - b)
        dy = max(c - x2, 0.0, x2 - d)
        lo = min(lo, np.hypot(dx, dy))
        hi = max(hi, np.hypot(max(abs(a - x1), abs(b - x1)), max(abs(c - x2), abs(d - x2))))
    if lo < 1e-6:
        raise ValueError("sampling grid reaches a sensor; indicators need |z - x_l| >= 1e-6")
    return lo, hi


def _sensor_sum(dataset: FieldDataset, grid: SamplingGrid, tables, directional: bool,
                transform=None, chunk: int = 8):
    """sum_l f_l(z) with f_l = [nu_l . e_l] * table_l(|z - x_l|), per table in ``tables``."""
    z1, z2 = grid.mesh()
    x = dataset.sensors.positions
    nu = dataset.sensors.normals
    out = [np.zeros(grid.shape) for _ in tables]
    for s in range(0, len(x), chunk):
        xs, ns = x[s:s + chunk], nu[s:s + chunk]
        dz1 = z1[None] - xs[:, 0, None, None]
        dz2 = z2[None] - xs[:, 1, None, None]
        rho = np.hypot(dz1, dz2)
        cols = np.arange(s, s + len(xs)).reshape(-1, 1, 1)
        fac = (dz1 * ns[:, 0, None, None] + dz2 * ns[:, 1, None, None]) / rho if directional else 1.0
        for acc, table in zip(out, tables):
            f = fac * table(rho, cols)
            acc += (transform(f) if transform else f).sum(axis=0)
    return out


def _table_nodes(rho_range: tuple[float, float], kmax: float):
    h = min(2e-3, 0.1 / kmax)
    return RadialTable.nodes(rho_range[0], rho_range[1], h) + (h,)


def _full_circle(dataset: FieldDataset) -> None:
    if type(dataset.sensors).__name__ == "_SensorSubset":
        raise ValueError("this indicator needs the full uniform sensor circle")


# ---------------------------------------------------------------------------
# indicators


def indicator_boundary(dataset: FieldDataset, grid: SamplingGrid = DEFAULT_GRID,
                       sum_abs: bool = False, k_weighting: str = "trapezoid") -> IndicatorField:
    """|sum_l I_integral(x_l, z)| normalised to max 1 on the grid.

    I_integral(x, z) = sum_m w_m 8 k^3 Im u^s(x, k_m) [J_0(k rho) - k rho J_1(k rho)],
    rho = |x - z|, i.e. the k-integral for d/dr [r J_0(k r)] at r = rho.
    ``sum_abs`` sums the absolute values over sensors instead (extension; not
    subject to cancellation between sensors).
    """
    _check_sensors(dataset)
    rr = _rho_range(dataset, grid)
    k = dataset.freqs.values
    coef = dataset.freqs.weights(k_weighting) * 8.0 * k**3 * dataset.u_s.imag  # (L, N)
    rho0, nodes, h = _table_nodes(rr, k.max())
    t = nodes[:, None] * k[None, :]
    j0, j1, _, _ = specfun.bessel_jy01(t)
    table = RadialTable(rho0, h, ((j0 - t * j1) @ coef.T))
    (vals,) = _sensor_sum(dataset, grid, [table], False, np.abs if sum_abs else None)
    if not sum_abs:
        vals = np.abs(vals)
    top = vals.max()
    if top > 0:
        vals = vals / top
    return IndicatorField(grid, vals, "boundary")


def indicator_source_1(dataset: FieldDataset, grid: SamplingGrid = DEFAULT_GRID,
                       quad: QuadratureSpec | None = None) -> IndicatorField:
    """Source reconstruction from u^s alone via the inverse circular Radon transform.

    With G_l(r) = sum_m w_m k_m^3 Im u^s(x_l, k_m) J_0(k_m r) (so I_x(r) = 8 r G),

        H^J_l(lam) = int_0^{r_upper} r J_0(lam r) G_l(r) dr,  H^Y_l likewise with Y_0,
        Q_l(rho)   = int_0^{lam_+} lam^2 [Y_1(lam rho) H^J_l - J_1(lam rho) H^Y_l] dlam,
        I(z)       = R / pi * sum_l (2 pi / L) (nu_l . (z - x_l)/|z - x_l|) Q_l(|z - x_l|).
    """
    quad = quad or QuadratureSpec()
    _full_circle(dataset)
    k = dataset.freqs.values
    if quad.lambda_plus < k.max():
        warnings.warn(f"lambda_plus = {quad.lambda_plus:g} is below k_plus = {k.max():g}", stacklevel=2)
    _check_sensors(dataset)
    rr = _rho_range(dataset, grid)
    L = dataset.sensors.L
    R = dataset.sensors.radius

    r = quad.radii
    coef = dataset.freqs.weights(quad.k_weighting) * k**3 * dataset.u_s.imag  # (L, N)
    G = coef @ _chunked(lambda kk: specfun.bessel_jy01(kk[:, None] * r[None, :])[0], k)  # (L, n_r)

    lam = quad.lambdas
    rw = quad.radius_weights * r
    lr = lam[:, None] * r[None, :]
    j0, _, y0, _ = specfun.bessel_jy01(lr)
    HJ = (G * rw) @ j0.T  # (L, n_lam)
    HY = (G * rw) @ y0.T
    del j0, y0, lr

    lw = quad.lambda_weights * lam**2
    rho0, nodes, h = _table_nodes(rr, lam.max())
    _, j1, _, y1 = specfun.bessel_jy01(nodes[:, None] * lam[None, :])
    table = RadialTable(rho0, h, (y1 * lw) @ HJ.T - (j1 * lw) @ HY.T)
    (vals,) = _sensor_sum(dataset, grid, [table], True)
    vals *= (R / np.pi) * (2.0 * np.pi / L)
    return IndicatorField(grid, vals, "source1")


def _chunked(fn, k: np.ndarray, size: int = 256) -> np.ndarray:
    return np.concatenate([fn(k[i:i + size]) for i in range(0, k.size, size)], axis=0)


def indicator_source_2(dataset: FieldDataset, grid: SamplingGrid = DEFAULT_GRID,
                       k_weighting: str = "trapezoid", imag_tolerance: float = 0.05) -> IndicatorField:
    """Source reconstruction from u^s and Delta u^s.

        I(z) = R/(2 pi) sum_l (2 pi/L) sum_m w_m k^2 (nu_l . e_l)
               [k^2 J_1(k rho) u^s - 2 k^2 i H_1(k rho) Im u^s - J_1(k rho) Delta u^s],

    rho = |z - x_l|, e_l = (z - x_l)/rho.  The real part is returned; the
    imaginary part vanishes for exact data and is logged as a diagnostic.
    """
    if not dataset.has_laplacian:
        raise MissingChannelError("indicator source2 requires Δu^s (Laplacian data)")
    _full_circle(dataset)
    _check_sensors(dataset)
    rr = _rho_range(dataset, grid)
    L = dataset.sensors.L
    R = dataset.sensors.radius
    k = dataset.freqs.values
    w = dataset.freqs.weights(k_weighting) * k**2
    u = dataset.u_s
    lap = dataset.laplacian_u_s
    a = w * (k**2 * u - lap)  # multiplies J_1
    b = w * (-2.0j * k**2 * u.imag)  # multiplies H_1 = J_1 + i Y_1

    rho0, nodes, h = _table_nodes(rr, k.max())
    _, j1, _, y1 = specfun.bessel_jy01(nodes[:, None] * k[None, :])
    q = j1 @ (a + b).T + 1j * (y1 @ b.T)
    re, im = _sensor_sum(dataset, grid, [RadialTable(rho0, h, q.real), RadialTable(rho0, h, q.imag)], True)
    scale = (R / (2.0 * np.pi)) * (2.0 * np.pi / L)
    vals = scale * re
    resid = scale * im
    top = np.abs(vals).max()
    ratio = np.abs(resid).max() / top if top > 0 else 0.0
    log.info("source2 imaginary residue %.3g of max |Re|", ratio)
    if dataset.delta == 0 and ratio > imag_tolerance:
        log.warning("source2 imaginary residue %.3g exceeds %.3g on noiseless data", ratio, imag_tolerance)
    return IndicatorField(grid, vals, "source2")


# ---------------------------------------------------------------------------
# reciprocity of the boundary functional


def reciprocity_check(k: float, y, z, n_quad: int = 1024, R: float = 3.0,
                      simplified: bool = False) -> tuple[complex, complex]:
    """Return (I(y, z), I(z, y)) by n_quad-point trapezoid on |x| = R.

    I(y, z) = int [Delta Phi_k(x, y) d_nu J_0(k|z - x|) + Phi_k(x, y) d_nu Delta J_0(k|z - x|)] ds(x)
    with d_nu J_0(k|z - x|) = -k J_1(k|z - x|) ((x - z)/|x - z|) . nu and
    Delta J_0 = -k^2 J_0.  ``simplified`` uses the equivalent kernel -(i/4) H_0(k|x - y|).
    """
    if n_quad < 256:
        raise ValueError("n_quad must be at least 256")
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    if np.hypot(*y) >= R or np.hypot(*z) >= R:
        raise ValueError("both points must lie inside the measurement circle")
    theta = 2.0 * np.pi * np.arange(n_quad) / n_quad
    nu = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    x = R * nu

    def functional(p, q):
        diff = x - q
        dist = np.hypot(diff[:, 0], diff[:, 1])
        dnu_j0 = -k * specfun.bessel_j(1, k * dist) * np.sum(diff * nu, axis=1) / dist
        if simplified:
            kern = -0.25j * specfun.hankel1(0, k * np.hypot(*(x - p).T))
        else:
            kern = laplacian_fundamental_solution(x, p, k) - k**2 * fundamental_solution(x, p, k)
        return complex(np.sum(kern * dnu_j0) * (2.0 * np.pi * R / n_quad))

    return functional(y, z), functional(z, y)
