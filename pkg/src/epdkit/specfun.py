"""Gamma, Bessel functions of the first kind, their zeros, and zero quotients.

Everything here works on real orders and non-negative real arguments in
double precision.  The Bessel routines are vectorized over the argument;
the order is always a scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

__all__ = [
    "ZeroTable",
    "ZeroQuotient",
    "gamma_fn",
    "bessel_j",
    "normalized_bessel",
    "bessel_zeros",
    "is_zero_quotient",
    "SERIES_SWITCH",
]

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

SERIES_SWITCH = 12.0


def _gamma_pos(x):
    # valid for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS[0])
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc = acc + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    # split the power to postpone overflow
    half = t ** ((z + 0.5) / 2.0)
    return math.sqrt(2.0 * math.pi) * half * np.exp(-t) * half * acc


def _sinpi(x):
    n = np.round(x)
    r = x - n
    sign = np.where(np.mod(n, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(np.pi * r)


def gamma_fn(x):
    """Gamma function for real arguments (scalar or array).

    Uses a Lanczos approximation for ``x >= 1/2`` and the reflection
    formula below that.  Raises ``ValueError`` at the poles
    ``x = 0, -1, -2, ...``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0) & (xa == np.round(xa))):
        raise ValueError(f"gamma_fn has a pole at non-positive integer argument {x!r}")
    out = np.empty_like(xa)
    big = xa >= 0.5
    out[big] = _gamma_pos(xa[big])
    small = ~big
    if np.any(small):
        xs = xa[small]
        out[small] = np.pi / (_sinpi(xs) * _gamma_pos(1.0 - xs))
    # exact factorials at small positive integers
    ints = (xa == np.round(xa)) & (xa >= 1) & (xa <= 23)
    if np.any(ints):
        out[ints] = [float(math.factorial(int(v) - 1)) for v in np.atleast_1d(xa[ints])]
    if out.ndim == 0:
        return float(out)
    return out


def _check_order(nu):
    nu = float(nu)
    if not nu > -1.0:
        raise ValueError(f"Bessel order must satisfy nu > -1, got {nu}")
    return nu


def _series_normalized(nu, r):
    """sum_m (-r^2/4)^m / (m! (nu+1)_m), i.e. j_nu(r) by its power series."""
    x2 = -0.25 * r * r
    term = np.ones_like(r)
    total = np.ones_like(r)
    m = 0
    while True:
        m += 1
        term = term * x2 / (m * (m + nu))
        total = total + term
        if m > 4 and np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
        if m > 400:
            break
    return total


def _hankel(mu, r):
    """Large-argument expansion of J_mu(r), truncated at the smallest term."""
    four_mu2 = 4.0 * mu * mu
    p = np.ones_like(r)
    q = np.zeros_like(r)
    term = np.ones_like(r)
    prev = np.full_like(r, np.inf)
    active = np.ones(r.shape, dtype=bool)
    for k in range(1, 80):
        term = term * (four_mu2 - (2 * k - 1) ** 2) / (k * 8.0 * r)
        mag = np.abs(term)
        active &= mag < prev
        if not active.any():
            break
        contrib = np.where(active, term, 0.0)
        if k % 2 == 1:
            q = q + (1 if (k // 2) % 2 == 0 else -1) * contrib
        else:
            p = p + (1 if (k // 2) % 2 == 0 else -1) * contrib
        prev = np.where(active, mag, prev)
        active &= mag > 1e-17
    chi = r - (0.5 * mu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * r)) * (p * np.cos(chi) - q * np.sin(chi))


def _large_arg(nu, r):
    """J_nu(r) for r >= SERIES_SWITCH.

    Low orders come straight from the Hankel expansion; higher orders are
    reached by upward recurrence while it is stable (nu < r) and by a
    Miller backward recurrence anchored on the two lowest orders otherwise.
    """
    shift = int(math.floor(nu)) if nu >= 1.0 else 0
    mu = nu - shift
    j0 = _hankel(mu, r)
    if shift == 0:
        return j0
    j1 = _hankel(mu + 1.0, r)
    out = np.empty_like(r)
    up = r > nu
    if np.any(up):
        a, b = j0[up], j1[up]
        rr = r[up]
        for k in range(1, shift):
            a, b = b, 2.0 * (mu + k) / rr * b - a
        out[up] = b
    down = ~up
    if np.any(down):
        rr = r[down]
        top = shift + int(20 + math.sqrt(40.0 * nu) + nu)
        y_next = np.zeros_like(rr)
        y = np.full_like(rr, 1e-30)
        y_target = np.zeros_like(rr)
        for k in range(top, 0, -1):
            # y is the unnormalized value at order mu + k
            if k == shift:
                y_target = y.copy()
            y_prev = 2.0 * (mu + k) / rr * y - y_next
            y_next, y = y, y_prev
            big = np.abs(y) > 1e250
            if np.any(big):
                scale = np.where(big, 1e-250, 1.0)
                y, y_next, y_target = y * scale, y_next * scale, y_target * scale
        # y is order mu, y_next is order mu + 1
        scale = (j0[down] * y + j1[down] * y_next) / (y * y + y_next * y_next)
        out[down] = scale * y_target
    return out


def bessel_j(nu, r):
    """Bessel function of the first kind J_nu(r) for nu > -1 and r >= 0.

    The power series is used below ``SERIES_SWITCH`` and the large-argument
    route above it.
    """
    nu = _check_order(nu)
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0):
        raise ValueError("bessel_j requires r >= 0")
    flat = np.atleast_1d(ra).ravel()
    out = np.empty_like(flat)
    small = flat < SERIES_SWITCH
    if np.any(small):
        rs = flat[small]
        with np.errstate(divide="ignore"):
            pref = np.where(rs > 0, (0.5 * rs) ** nu, 1.0 if nu == 0 else (0.0 if nu > 0 else np.inf))
        out[small] = pref / gamma_fn(nu + 1.0) * _series_normalized(nu, rs)
    if np.any(~small):
        out[~small] = _large_arg(nu, flat[~small])
    out = out.reshape(ra.shape)
    return float(out) if out.ndim == 0 else out


def normalized_bessel(nu, r):
    """Normalized Bessel function j_nu(r) = Gamma(nu+1) (r/2)^(-nu) J_nu(r).

    Equal to 1 at r = 0 (the removable singularity is handled by the power
    series) and decaying like r^(-nu-1/2).
    """
    nu = _check_order(nu)
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0):
        raise ValueError("normalized_bessel requires r >= 0")
    flat = np.atleast_1d(ra).ravel()
    out = np.empty_like(flat)
    small = flat < SERIES_SWITCH
    if np.any(small):
        out[small] = _series_normalized(nu, flat[small])
    if np.any(~small):
        rl = flat[~small]
        out[~small] = gamma_fn(nu + 1.0) * (0.5 * rl) ** (-nu) * _large_arg(nu, rl)
    out = out.reshape(ra.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ZeroTable:
    """First positive zeros of J_nu, strictly increasing."""

    nu: float
    zeros: tuple[float, ...]
    tol: float = 1e-12

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, i):
        return self.zeros[i]

    def as_array(self):
        return np.array(self.zeros)


_SCAN_STEP = np.pi / 4


def bessel_zeros(nu, m):
    """First ``m`` positive zeros of J_nu as a :class:`ZeroTable`.

    Sign changes are located on a scan with step pi/4 (consecutive zeros of
    J_nu are always further apart than that for nu > -1), then each bracket
    is refined with Brent's method to an absolute tolerance of 1e-12.
    """
    nu = _check_order(nu)
    m = int(m)
    if m < 1:
        raise ValueError("need at least one zero")
    return _zero_table(nu, m)


@lru_cache(maxsize=128)
def _zero_table(nu, m):
    tol = 1e-12
    start = max(nu, 0.0) + 1e-8
    found: list[float] = []
    lo = start
    # McMahon-style estimate of the m-th zero, plus slack
    span = (m + 0.5 * abs(nu) + 2.0) * np.pi
    f = lambda z: float(bessel_j(nu, z))
    while len(found) < m:
        grid = lo + _SCAN_STEP * np.arange(int(span / _SCAN_STEP) + 2)
        vals = bessel_j(nu, grid)
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                found.append(float(a))
            elif fa * fb < 0:
                found.append(optimize.brentq(f, a, b, xtol=tol * 0.1, rtol=4 * np.finfo(float).eps, maxiter=200))
            if len(found) >= m:
                break
        lo = grid[-1]
    zeros = tuple(found[:m])
    if any(b - a <= tol for a, b in zip(zeros, zeros[1:])):
        raise RuntimeError("zero scan produced non-separated zeros")
    return ZeroTable(nu=nu, zeros=zeros, tol=tol)


@dataclass(frozen=True)
class ZeroQuotient:
    """Outcome of :func:`is_zero_quotient`.

    Truthy when a quotient was found.  ``i`` and ``j`` are 1-based indices
    into the zero table, so the witness is ``zeros[i-1] / zeros[j-1]``.
    A falsy result only means no quotient exists among the zeros scanned.
    """

    found: bool
    i: int | None = None
    j: int | None = None
    zi: float | None = None
    zj: float | None = None
    gap: float | None = None

    def __bool__(self):
        return self.found

    @property
    def witness(self):
        return None if not self.found else (self.i, self.j)


def is_zero_quotient(rho1, rho2, nu, m=100, tol=1e-9):
    """Test whether rho1/rho2 equals z_i/z_j for zeros of J_nu among the first m."""
    if not (rho1 > 0 and rho2 > 0):
        raise ValueError("radii must be positive")
    z = bessel_zeros(nu, m).as_array()
    gap = np.abs(rho1 / rho2 - z[:, None] / z[None, :])
    hits = np.argwhere(gap <= tol)
    if len(hits):
        # smallest-index witness
        i, j = min(hits.tolist(), key=lambda ij: (ij[0] + ij[1], ij[0]))
        return ZeroQuotient(True, i + 1, j + 1, float(z[i]), float(z[j]), float(gap[i, j]))
    return ZeroQuotient(False, gap=float(gap.min()))
