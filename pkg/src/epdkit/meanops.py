"""Euler-Poisson-Darboux mean operators M_t^alpha.

For alpha > 0,

    (M_t^alpha f)(x) = Gamma(alpha + n/2) / (pi^(n/2) Gamma(alpha))
                       * int_{|y|<1} (1 - |y|^2)^(alpha-1) f(x - t y) dy,

alpha = 0 is the spherical mean, and on the Fourier side M_t^alpha is the
multiplier j_nu(t |xi|) with nu = n/2 + alpha - 1 for every admissible alpha.
u(x, t) = M_t^alpha f(x) solves

    Delta_x u - u_tt - (n + 2 alpha - 1)/t u_t = 0,   u(x, 0) = f,  u_t(x, 0) = 0.

Two evaluation paths are provided.  The spectral path is the reference and is
the only one defined for alpha < 0; the spatial path (spline interpolation and
nested Gauss-Jacobi quadrature) exists for alpha >= 0 and is used to
cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quadrature import SPLINE_ORDER, SplineShifter
from .grid import Field, dft_forward, dft_inverse, interior_slices
from .specfun import gamma_fn, normalized_bessel

__all__ = [
    "DomainError",
    "UnsupportedRepresentationError",
    "OperatorSpec",
    "spherical_mean",
    "ball_mean",
    "epd_mean_spatial",
    "epd_mean_spectral",
    "epd_solution",
    "epd_kernel",
    "kernel_constant",
]

REFINE_RTOL = 1e-8
MAX_NODES = 96


class DomainError(ValueError):
    """The requested operator would sample outside the grid."""


class UnsupportedRepresentationError(ValueError):
    """The requested representation does not exist for this alpha."""


@dataclass(frozen=True)
class OperatorSpec:
    """Dimension, order alpha and radius t of an EPD mean.

    ``alpha < (1 - n)/2`` is accepted (the multiplier still makes sense as
    long as nu > -1) but lies outside the regime where u = M_t^alpha f is the
    unique solution of the Cauchy problem; see :attr:`unique_regime`.
    """

    n: int
    alpha: float
    radius: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("dimension must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.nu > -1.0:
            raise ValueError(f"nu = n/2 + alpha - 1 must exceed -1, got {self.nu}")

    @property
    def nu(self):
        return 0.5 * self.n + self.alpha - 1.0

    @property
    def unique_regime(self):
        return self.alpha >= 0.5 * (1 - self.n)

    def with_radius(self, t):
        return OperatorSpec(self.n, self.alpha, t)


def kernel_constant(n, alpha):
    """Gamma(alpha + n/2) / (pi^(n/2) Gamma(alpha))."""
    return gamma_fn(alpha + 0.5 * n) / (math.pi ** (0.5 * n) * gamma_fn(alpha))


def epd_kernel(spec, y):
    """Pointwise kernel m_t^alpha(y) = c t^-n (1 - |y/t|^2)_+^(alpha-1), alpha > 0.

    ``y`` has shape (..., n); the result has shape (...).
    """
    if spec.alpha <= 0:
        raise UnsupportedRepresentationError("the EPD kernel is a function only for alpha > 0")
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (spec.n,):
        raise ValueError(f"points must have trailing dimension {spec.n}")
    s = 1.0 - np.sum(y * y, axis=-1) / spec.radius**2
    c = kernel_constant(spec.n, spec.alpha) / spec.radius**spec.n
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s > 0, c * np.abs(s) ** (spec.alpha - 1.0), 0.0)
    return out


def _multiplier(grid, nu, t):
    return normalized_bessel(nu, t * grid.frequency_radius())


def epd_mean_spectral(f, spec):
    """M_t^alpha f as the Fourier multiplier j_nu(t|xi|).

    The result is periodic on the grid box; keep f compactly supported (or
    apodized) well inside it.
    """
    _check_dim(f, spec)
    F = dft_forward(f)
    out = dft_inverse(F.with_values(F.values * _multiplier(f.grid, spec.nu, spec.radius)))
    return out.with_values(out.values, meta={"path": "spectral", "nu": spec.nu, "t": spec.radius})


def epd_solution(f, alpha, ts):
    """u(., t) = M_t^alpha f for each t in ``ts`` (spectral path, one forward transform)."""
    ts = list(np.atleast_1d(np.asarray(ts, dtype=float)))
    if not ts:
        return []
    specs = [OperatorSpec(f.grid.dim, alpha, t) for t in ts]
    F = dft_forward(f)
    xi = f.grid.frequency_radius()
    out = []
    for s in specs:
        u = dft_inverse(F.with_values(F.values * normalized_bessel(s.nu, s.radius * xi)), real=not f.is_complex)
        out.append(u.with_values(u.values, meta={"path": "spectral", "nu": s.nu, "t": s.radius}))
    return out


def _check_dim(f, spec):
    if f.grid.dim != spec.n:
        raise ValueError(f"field is {f.grid.dim}-dimensional, operator expects n = {spec.n}")


def _band_estimate(f, thresh=1e-8):
    """Radius in frequency beyond which |f^| is negligible."""
    F = np.abs(dft_forward(f).values)
    peak = F.max()
    if peak == 0:
        return 0.0
    xi = f.grid.frequency_radius()
    return float(xi[F > thresh * peak].max())


def _region(grid, region):
    if region is None or region == "full":
        return [(0, N) for N in grid.samples]
    if region == "interior":
        return [(s.start, s.stop) for s in interior_slices(grid)]
    return [(int(lo), int(hi)) for lo, hi in region]


def _spatial(f, alpha, t, nodes=None, region=None, rtol=REFINE_RTOL, order=SPLINE_ORDER):
    if f.is_complex:
        re = _spatial(f.real(), alpha, t, nodes, region, rtol, order)
        im = _spatial(f.with_values(f.values.imag), alpha, t, nodes, region, rtol, order)
        return re.with_values(re.values + 1j * im.values, meta=re.meta)
    grid = f.grid
    if not t > 0:
        raise ValueError("radius must be positive")
    if t > 0.5 * min(grid.half_extent):
        raise DomainError(f"radius {t} exceeds half of the smallest half-extent {min(grid.half_extent)}")
    reg = _region(grid, region)
    pad = int(math.ceil(t / min(grid.spacing))) + 1
    shifter = SplineShifter(f.values, grid.spacing, pad, degree=order)
    # alpha = 0 in 1-D is the exact two-point average
    trivial = grid.dim == 1 and alpha == 0
    if nodes is not None or trivial:
        m = int(nodes or 1)
        vals = shifter.mean(t, alpha, m, reg)
        meta = {"nodes": m, "converged": None}
    else:
        band = _band_estimate(f)
        m = max(4, int(math.ceil(0.5 * t * band)) + 3)
        prev = shifter.mean(t, alpha, m, reg)
        # relative to the input so that near-null outputs still converge
        scale = max(np.abs(f.values).max(), 1e-300)
        converged = False
        delta = float("inf")
        while m < MAX_NODES:
            m_next = min(MAX_NODES, m + max(2, m // 3))
            cur = shifter.mean(t, alpha, m_next, reg)
            delta = float(np.abs(cur - prev).max() / scale)
            m, prev = m_next, cur
            if delta <= rtol:
                converged = True
                break
        vals = prev
        meta = {"nodes": m, "converged": converged, "refine_delta": delta}
    full = np.full(grid.shape, np.nan)
    full[tuple(slice(lo, hi) for lo, hi in reg)] = vals
    meta.update(path="spatial", alpha=alpha, t=t, spline_order=order)
    return Field(grid, full, "spatial", meta)


def spherical_mean(f, t, *, nodes=None, region=None, rtol=REFINE_RTOL):
    """Average of f over spheres of radius t (normalized surface measure).

    Computed by spline interpolation of f and nested Gauss-Jacobi rules over
    the sphere.  With ``nodes=None`` the rule is refined until two successive
    levels agree to ``rtol`` times sup|f|.  ``region="interior"`` restricts the
    work to the central box (other entries are NaN).
    """
    return _spatial(f, 0.0, t, nodes, region, rtol)


def ball_mean(f, t, *, nodes=None, region=None, rtol=REFINE_RTOL):
    """Average of f over balls of radius t; the alpha = 1 EPD mean."""
    return _spatial(f, 1.0, t, nodes, region, rtol)


def epd_mean_spatial(f, spec, *, nodes=None, region=None, rtol=REFINE_RTOL):
    """M_t^alpha f by spatial quadrature, alpha >= 0.

    The endpoint weight (1 - |y|^2)^(alpha-1) is absorbed into the
    Gauss-Jacobi rules, so 0 < alpha < 1 is handled without special care.
    """
    _check_dim(f, spec)
    if spec.alpha < 0:
        raise UnsupportedRepresentationError(
            f"alpha = {spec.alpha} < 0 is only defined by continuation; use epd_mean_spectral"
        )
    return _spatial(f, spec.alpha, spec.radius, nodes, region, rtol)
