"""Cylinder functions J_n, Y_n, H_n^(1) and K_0 for real positive arguments.

Everything here is vectorised over ``x`` with numpy.  Three branches:

* x < 2: ascending power series;
* 2 <= x < 13: Miller's downward recurrence for J_n normalised by
  J_0 + 2 sum J_2k = 1, with Y_0, Y_1 from their Neumann series in J_n
  (every term is bounded, so there is none of the cancellation the power
  series suffers near x ~ 10);
* x >= 13: Hankel asymptotic expansion.

Y_n for n >= 2 comes from upward recurrence (stable for Y).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "DomainError",
    "MAX_ORDER",
    "J_MAX_ARGUMENT",
    "bessel_j",
    "bessel_y",
    "hankel1",
    "macdonald_k0",
    "bessel_jy01",
]

EULER_GAMMA = 0.57721566490153286061
MAX_ORDER = 8
J_MAX_ARGUMENT = 1.0e4
K0_UNDERFLOW = 700.0

# branch crossovers and term counts (see tests/test_specfun.py for the overlap check)
_JY_CROSSOVER = 13.0
_JY_SERIES_MAX = 2.0
_MILLER_START = 56
_JY_SERIES_TERMS = 38
_JY_ASYM_TERMS = 13
_K_CROSSOVER = 8.0
_K_SERIES_TERMS = 34
_K_ASYM_TERMS = 16


class DomainError(ValueError):
    """Argument outside the range on which a function is defined or validated."""


def _asym_coefficients(n: int, count: int) -> np.ndarray:
    """a_k(n) = prod_{j=1..k} (4n^2 - (2j-1)^2) / (k! 8^k)."""
    mu = 4.0 * n * n
    a = np.empty(count)
    a[0] = 1.0
    for k in range(1, count):
        a[k] = a[k - 1] * (mu - (2 * k - 1) ** 2) / (k * 8.0)
    return a


_A0 = _asym_coefficients(0, 2 * _JY_ASYM_TERMS)
_A1 = _asym_coefficients(1, 2 * _JY_ASYM_TERMS)
_AK = _asym_coefficients(0, _K_ASYM_TERMS)

_HARMONIC = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, 64))))


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _check_order(n: int) -> int:
    if int(n) != n or n < 0 or n > MAX_ORDER:
        raise DomainError(f"order must be an integer in [0, {MAX_ORDER}], got {n}")
    return int(n)


# ---------------------------------------------------------------------------
# power series branch


def _series_jn(n: int, x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    q = -half * half
    term = half**n / math.factorial(n)
    total = term.copy()
    for k in range(1, _JY_SERIES_TERMS):
        term = term * q / (k * (k + n))
        total += term
    return total


def _series_jy01(x: np.ndarray):
    """J0, J1, Y0, Y1 from the ascending series (x > 0, moderate)."""
    half = 0.5 * x
    q = -half * half
    log_term = np.log(half) + EULER_GAMMA

    t0 = np.ones_like(x)  # (-x^2/4)^k / (k!)^2
    t1 = half.copy()  # (-x^2/4)^k (x/2) / (k!(k+1)!)
    j0 = t0.copy()
    j1 = t1.copy()
    # sum_k [psi(k+1) + psi(k+2)] t1_k, with psi(m+1) = H_m - gamma
    s0 = np.zeros_like(x)
    s1 = (2.0 * _HARMONIC[0] + 1.0) * t1
    for k in range(1, _JY_SERIES_TERMS):
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        j0 += t0
        j1 += t1
        s0 += _HARMONIC[k] * t0
        s1 += (_HARMONIC[k] + _HARMONIC[k + 1]) * t1
    y0 = (2.0 / np.pi) * (log_term * j0 - s0)
    # psi terms carry -2*gamma; fold it into the log factor
    y1 = -2.0 / (np.pi * x) + (2.0 / np.pi) * log_term * j1 - s1 / np.pi
    return j0, j1, y0, y1


# ---------------------------------------------------------------------------
# Miller recurrence branch


def _miller(x: np.ndarray, nmax: int):
    """J_0..J_nmax by downward recurrence, plus the Neumann series for Y_0, Y_1."""
    jp = np.zeros_like(x)  # J_{m+1}
    jm = np.full_like(x, 1e-30)  # J_m
    m = _MILLER_START
    js = {m: jm}
    norm = 2.0 * jm if m % 2 == 0 else np.zeros_like(x)
    s0 = np.zeros_like(x)  # sum_k (-1)^k J_2k / k
    s1 = np.zeros_like(x)  # sum_k (-1)^k (J_{2k-1} - J_{2k+1}) / k
    if m % 2 == 0:
        s0 += (1.0 if (m // 2) % 2 == 0 else -1.0) * jm / (m // 2)
    for m in range(_MILLER_START, 0, -1):
        jp, jm = jm, (2.0 * m / x) * jm - jp  # jm is now J_{m-1}
        n = m - 1
        if n <= nmax + 1:
            js[n] = jm
        if n % 2 == 0 and n > 0:
            k = n // 2
            sign = 1.0 if k % 2 == 0 else -1.0
            norm = norm + 2.0 * jm
            s0 = s0 + sign * jm / k
        elif n % 2 == 1:
            # J_n = J_{2k-1} enters term k with +, term k-1 with - (as J_{2(k-1)+1})
            k = (n + 1) // 2
            sign = 1.0 if k % 2 == 0 else -1.0
            s1 = s1 + sign * jm / k
            if k > 1:
                s1 = s1 + sign * jm / (k - 1)
    norm = norm + jm  # + J_0
    inv = 1.0 / norm
    j = [js[n] * inv for n in range(max(nmax, 1) + 1)]
    log_term = np.log(0.5 * x) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (log_term * j[0] - 2.0 * s0 * inv)
    y1 = (2.0 / np.pi) * (log_term * j[1] - j[0] / x + s1 * inv)
    return j, y0, y1


# ---------------------------------------------------------------------------
# Hankel asymptotic branch


def _pq(a: np.ndarray, inv: np.ndarray):
    inv2 = inv * inv
    p = np.zeros_like(inv)
    q = np.zeros_like(inv)
    for j in range(_JY_ASYM_TERMS - 1, -1, -1):
        sign = -1.0 if j % 2 else 1.0
        p = p * inv2 + sign * a[2 * j]
        q = q * inv2 + sign * a[2 * j + 1]
    return p, q * inv


def _asym_jy01(x: np.ndarray):
    inv = 1.0 / x
    amp = np.sqrt(2.0 / (np.pi * x))
    p0, q0 = _pq(_A0, inv)
    p1, q1 = _pq(_A1, inv)
    c = np.cos(x)
    s = np.sin(x)
    # chi0 = x - pi/4, chi1 = x - 3pi/4
    r = math.sqrt(0.5)
    c0, s0 = r * (c + s), r * (s - c)
    c1, s1 = r * (s - c), -r * (c + s)
    j0 = amp * (p0 * c0 - q0 * s0)
    y0 = amp * (p0 * s0 + q0 * c0)
    j1 = amp * (p1 * c1 - q1 * s1)
    y1 = amp * (p1 * s1 + q1 * c1)
    return j0, j1, y0, y1


def _jy01(x: np.ndarray):
    """J0, J1, Y0, Y1 for a flat array of positive arguments."""
    out = [np.empty_like(x) for _ in range(4)]
    small = x < _JY_SERIES_MAX
    if small.any():
        for dst, val in zip(out, _series_jy01(x[small])):
            dst[small] = val
    mid = (~small) & (x < _JY_CROSSOVER)
    if mid.any():
        j, y0, y1 = _miller(x[mid], 1)
        for dst, val in zip(out, (j[0], j[1], y0, y1)):
            dst[mid] = val
    large = x >= _JY_CROSSOVER
    if large.any():
        for dst, val in zip(out, _asym_jy01(x[large])):
            dst[large] = val
    return out


def bessel_jy01(x):
    """Return ``(J0, J1, Y0, Y1)`` evaluated at ``x > 0`` in one pass.

    This is the hot path used by the forward model and the indicators.
    No validation beyond positivity is performed.
    """
    arr, scalar = _as_array(x)
    flat = arr.ravel()
    if flat.size and not np.all(flat > 0):
        raise DomainError("bessel_jy01 requires x > 0")
    vals = [v.reshape(arr.shape) for v in _jy01(flat)]
    if scalar:
        return tuple(float(v) for v in vals)
    return tuple(vals)


# ---------------------------------------------------------------------------
# public API


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x) for 0 <= x <= 1e4."""
    n = _check_order(n)
    arr, scalar = _as_array(x)
    flat = arr.ravel()
    if np.any(flat < 0) or np.any(flat > J_MAX_ARGUMENT) or np.any(np.isnan(flat)):
        raise DomainError(f"bessel_j requires 0 <= x <= {J_MAX_ARGUMENT:g}")
    out = np.empty_like(flat)
    small = flat < _JY_SERIES_MAX
    if small.any():
        out[small] = _series_jn(n, flat[small])
    mid = (~small) & (flat < _JY_CROSSOVER)
    if mid.any():
        out[mid] = _miller(flat[mid], n)[0][n]
    large = flat >= _JY_CROSSOVER
    if large.any():
        xl = flat[large]
        j0, j1, _, _ = _asym_jy01(xl)
        if n == 0:
            out[large] = j0
        else:
            prev, cur = j0, j1
            for m in range(1, n):
                prev, cur = cur, (2.0 * m / xl) * cur - prev
            out[large] = cur
    out = out.reshape(arr.shape)
    return float(out) if scalar else out


def bessel_y(n: int, x):
    """Bessel function of the second kind Y_n(x) (Neumann function), x > 0."""
    n = _check_order(n)
    arr, scalar = _as_array(x)
    flat = arr.ravel()
    if not np.all(flat > 0):
        raise DomainError("bessel_y requires x > 0")
    _, _, y0, y1 = _jy01(flat)
    if n == 0:
        out = y0
    else:
        prev, cur = y0, y1
        for m in range(1, n):
            prev, cur = cur, (2.0 * m / flat) * cur - prev
        out = cur
    out = out.reshape(arr.shape)
    return float(out) if scalar else out


def hankel1(n: int, x):
    """Hankel function of the first kind H_n^(1)(x) = J_n(x) + i Y_n(x)."""
    arr, scalar = _as_array(x)
    if not np.all(arr > 0):
        raise DomainError("hankel1 requires x > 0")
    out = bessel_j(n, arr) + 1j * bessel_y(n, arr)
    return complex(out) if scalar else out


def _k0_series(x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    q = half * half
    term = np.ones_like(x)
    i0 = term.copy()
    tail = np.zeros_like(x)
    for k in range(1, _K_SERIES_TERMS):
        term = term * q / (k * k)
        i0 += term
        tail += _HARMONIC[k] * term
    return -(np.log(half) + EULER_GAMMA) * i0 + tail


def _k0_asym(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    total = np.zeros_like(x)
    for k in range(_K_ASYM_TERMS - 1, -1, -1):
        total = total * inv + _AK[k]
    return np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) * total


def macdonald_k0(x):
    """Modified Bessel function of the second kind K_0(x), x > 0.

    Returns exactly 0 beyond x = 700 where the value underflows.
    """
    arr, scalar = _as_array(x)
    flat = arr.ravel()
    if not np.all(flat > 0):
        raise DomainError("macdonald_k0 requires x > 0")
    out = np.zeros_like(flat)
    small = flat < _K_CROSSOVER
    if small.any():
        out[small] = _k0_series(flat[small])
    mid = (~small) & (flat <= K0_UNDERFLOW)
    if mid.any():
        out[mid] = _k0_asym(flat[mid])
    out = out.reshape(arr.shape)
    return float(out) if scalar else out
