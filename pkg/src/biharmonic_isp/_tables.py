"""Uniform-grid cubic tables used for radial kernels."""

from __future__ import annotations

import numpy as np


def lagrange4(frac: np.ndarray):
    """Weights of the 4-point Lagrange stencil at nodes -1, 0, 1, 2 for offset ``frac`` in [0, 1)."""
    f = frac
    return (
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    )


class RadialTable:
    """Samples of a family of functions on rho_i = rho0 + i h, evaluated by cubic interpolation.

    ``values`` has shape (n_rho, n_funcs); :meth:`__call__` takes rho of any
    shape plus the column index per point (or a scalar column).
    """

    def __init__(self, rho0: float, h: float, values: np.ndarray):
        self.rho0 = float(rho0)
        self.h = float(h)
        self.values = np.asarray(values)

    @staticmethod
    def nodes(rho_min: float, rho_max: float, h: float) -> tuple[float, np.ndarray]:
        rho0 = rho_min - 2.0 * h
        n = int(np.ceil((rho_max - rho0) / h)) + 4
        return rho0, rho0 + h * np.arange(n)

    def __call__(self, rho: np.ndarray, column) -> np.ndarray:
        t = (np.asarray(rho, float) - self.rho0) / self.h
        j = np.floor(t).astype(np.int64)
        if j.size and (j.min() < 1 or j.max() > self.values.shape[0] - 3):
            raise ValueError("radius outside the tabulated range")
        out = 0.0
        for offset, w in zip((-1, 0, 1, 2), lagrange4(t - j)):
            out = out + w * self.values[j + offset, column]
        return out
