"""Recovering f from EPD means and from shifted line-integral sinograms.

``single_radius_invert`` divides by the multiplier j_nu(rho |xi|) away from
its zeros.  ``two_radius_invert`` forms g1 + i g2 from data at two radii,
whose multiplier j_nu(rho1 |xi|) + i j_nu(rho2 |xi|) has no real zeros when
rho1/rho2 is not a quotient of Bessel zeros, and divides with a
Gauss-Weierstrass factor exp(-eps |xi|^2).  ``shifted_sinogram_invert``
undoes the strip/line-pair averaging per angle and then applies filtered
backprojection.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft
from scipy import ndimage

from .classify import AdmissibilityQuery, AdmissibilityReport, classify
from .grid import Field, Grid, dft_forward, dft_inverse, interior
from .meanops import OperatorSpec
from .specfun import is_zero_quotient, normalized_bessel

__all__ = [
    "ReconParams",
    "Reconstruction",
    "IllPosedWarning",
    "InadmissibleRadiiError",
    "single_radius_invert",
    "two_radius_invert",
    "epsilon_sweep",
    "shifted_sinogram_invert",
    "filtered_backprojection",
    "relative_l2",
    "make_report",
    "write_report",
    "classify",
    "AdmissibilityQuery",
    "AdmissibilityReport",
]

EPSILON_SWEEP = (1e-2, 1e-3, 1e-4)
TINY_DENOMINATOR = 1e-12


class IllPosedWarning(UserWarning):
    """Most of the data energy sits in discarded spectral bands."""


class InadmissibleRadiiError(ValueError):
    """rho1/rho2 is a quotient of Bessel zeros."""


@dataclass(frozen=True)
class ReconParams:
    """Regularization settings.

    ``floor`` is the smallest multiplier magnitude that is divided by (the
    multiplier is 1 at the origin); ``max_band`` is an absolute spectral
    cutoff, defaulting to ``band_fraction`` times the grid Nyquist frequency.
    """

    epsilon: float = 1e-4
    floor: float = 0.05
    max_band: float | None = None
    band_fraction: float = 0.8

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.floor < 1:
            raise ValueError("floor must lie in (0, 1)")
        if self.max_band is not None and not self.max_band > 0:
            raise ValueError("max_band must be positive")
        if not 0 < self.band_fraction <= 1:
            raise ValueError("band_fraction must lie in (0, 1]")

    def band(self, grid):
        return self.max_band if self.max_band is not None else self.band_fraction * grid.nyquist


@dataclass
class Reconstruction:
    field: Field
    mask: np.ndarray
    discarded_band_energy: float
    ill_posed: bool = False
    diagnostics: dict = dc_field(default_factory=dict)


def relative_l2(a, b):
    """||a - b|| / ||b|| over whole grids (arrays or Fields)."""
    a = a.values if isinstance(a, Field) else np.asarray(a)
    b = b.values if isinstance(b, Field) else np.asarray(b)
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / nb) if nb > 0 else float(np.linalg.norm(a))


def _discarded(G, keep):
    total = float(np.sum(np.abs(G) ** 2))
    return 0.0 if total == 0 else float(np.sum(np.abs(G[~keep]) ** 2) / total)


def _finish(g, F, keep, diagnostics):
    G = dft_forward(g).values if not isinstance(g, tuple) else g[1]
    grid = g.grid if not isinstance(g, tuple) else g[0]
    frac = _discarded(G, keep)
    ill = frac > 0.5
    if ill:
        warnings.warn(f"{100 * frac:.1f}% of the data energy lies in discarded bands", IllPosedWarning, stacklevel=3)
    out = dft_inverse(Field(grid, F, "spectral"), real=True)
    return Reconstruction(out, keep, frac, ill, diagnostics)


def single_radius_invert(g, spec, params=ReconParams()):
    """f from g = M_rho^alpha f by spectral division where |j_nu(rho |xi|)| >= floor.

    Frequencies near multiplier zeros and beyond the band limit are set to
    zero; ``mask`` marks the kept lattice points.
    """
    if g.grid.dim != spec.n:
        raise ValueError("data and operator dimensions differ")
    grid = g.grid
    xi = grid.frequency_radius()
    mult = normalized_bessel(spec.nu, spec.radius * xi)
    keep = (np.abs(mult) >= params.floor) & (xi <= params.band(grid))
    G = dft_forward(g).values
    F = np.zeros_like(G)
    F[keep] = G[keep] / mult[keep]
    diag = {"nu": spec.nu, "rho": spec.radius, "kept_fraction": float(keep.mean())}
    return _finish((grid, G), F, keep, diag)


def two_radius_invert(g1, g2, rho1, rho2, alpha, params=ReconParams(), *, force=False, check_m=100):
    """f from g_i = M_{rho_i}^alpha f through m_eps = exp(-eps|xi|^2) / (j(rho1|xi|) + i j(rho2|xi|)).

    The pair is checked with :func:`~epdkit.specfun.is_zero_quotient`; an
    inadmissible pair raises unless ``force=True``, in which case the
    violation is recorded in the diagnostics.  Lattice points where the
    complex denominator falls below ``params.floor`` are discarded like in
    the single-radius case, and any denominator below 1e-12 is reported
    with its location.
    """
    if g1.grid != g2.grid:
        raise ValueError("g1 and g2 must live on the same grid")
    grid = g1.grid
    nu = 0.5 * grid.dim + alpha - 1.0
    quo = is_zero_quotient(rho1, rho2, nu, m=check_m)
    diag = {"nu": nu, "rho1": rho1, "rho2": rho2, "epsilon": params.epsilon,
            "admissible": not bool(quo), "forced": bool(force and quo)}
    if quo:
        diag["quotient_witness"] = [quo.i, quo.j]
        if not force:
            raise InadmissibleRadiiError(
                f"rho1/rho2 = {rho1 / rho2:.12g} equals z_{quo.i}/z_{quo.j} for J_{nu:g}; set force to override"
            )
    xi = grid.frequency_radius()
    den = normalized_bessel(nu, rho1 * xi) + 1j * normalized_bessel(nu, rho2 * xi)
    tiny = np.abs(den) < TINY_DENOMINATOR
    if tiny.any():
        diag["tiny_denominator_xi"] = sorted({round(float(x), 12) for x in xi[tiny]})
    diag["min_denominator"] = float(np.abs(den[xi <= params.band(grid)]).min())
    keep = (np.abs(den) >= params.floor) & (xi <= params.band(grid))
    G1 = dft_forward(g1).values
    G2 = dft_forward(g2).values
    G = G1 + 1j * G2
    F = np.zeros_like(G)
    F[keep] = np.exp(-params.epsilon * xi[keep] ** 2) * G[keep] / den[keep]
    return _finish((grid, G), F, keep, diag)


def epsilon_sweep(g1, g2, rho1, rho2, alpha, reference, params=ReconParams(), epsilons=EPSILON_SWEEP, force=False):
    """Relative L2 errors of the two-radius reconstruction for each epsilon."""
    out = []
    for eps in epsilons:
        p = ReconParams(eps, params.floor, params.max_band, params.band_fraction)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllPosedWarning)
            rec = two_radius_invert(g1, g2, rho1, rho2, alpha, p, force=force)
        out.append({"epsilon": eps, "l2_rel": relative_l2(rec.field, reference)})
    return out


# -- filtered backprojection ---------------------------------------------------------


def _ramlak(npad, tau, rolloff=0.8):
    # discrete Ram-Lak kernel, raised-cosine taper from rolloff * Nyquist
    n = np.fft.fftfreq(npad, 1.0 / npad).astype(int)
    h = np.zeros(npad)
    h[n == 0] = 1.0 / (4.0 * tau * tau)
    odd = n % 2 == 1
    h[odd] = -1.0 / (np.pi * n[odd] * tau) ** 2
    H = np.real(scipy.fft.fft(h)) * tau
    w = np.abs(np.fft.fftfreq(npad, tau)) * 2.0 * np.pi
    nyq = np.pi / tau
    a = rolloff * nyq
    if a >= nyq:
        return H
    win = np.where(w <= a, 1.0, 0.5 * (1.0 + np.cos(np.pi * np.clip((w - a) / (nyq - a), 0.0, 1.0))))
    return H * win


def filtered_backprojection(phi, t_axis, angles, out_grid, rolloff=0.8):
    """f on ``out_grid`` from line integrals phi[j, i] over {x.theta_j = t_i}, theta in [0, pi).

    The offsets must cover the circumscribed disc of ``out_grid``: the
    ramp-filtered projections are not compactly supported, so truncating
    them biases the corners.
    """
    phi = np.asarray(phi, dtype=float)
    nt = len(t_axis)
    tau = float(t_axis[1] - t_axis[0])
    npad = 1 << int(math.ceil(math.log2(2 * nt)))
    H = _ramlak(npad, tau, rolloff)
    P = scipy.fft.fft(phi, n=npad, axis=1)
    Q = np.real(scipy.fft.ifft(P * H[None, :], axis=1))[:, :nt]
    X, Y = out_grid.coords()
    out = np.zeros(out_grid.shape)
    for q, th in zip(Q, angles):
        s = X * math.cos(th) + Y * math.sin(th)
        idx = (s - t_axis[0]) / tau
        coef = ndimage.spline_filter1d(q, order=3, mode="mirror")
        out += ndimage.map_coordinates(coef, idx.ravel()[None, :], order=3, mode="constant", cval=0.0,
                                       prefilter=False).reshape(out_grid.shape)
    return out * (math.pi / len(angles))


def shifted_sinogram_invert(s1, params=ReconParams(), s2=None, out_grid=None, *, force=False):
    """Two-stage inversion of strip / line-pair sinograms in the plane.

    Stage 1 recovers the line integrals phi_v(t) frame by frame: from one
    radius by single-radius division, or from two sinograms of the same
    frames at different radii by the two-radius method.  Stage 2 is
    filtered backprojection onto ``out_grid``.  Frames must be uniform
    angles pi j / F on a regular offset grid.
    """
    if s1.meta.get("n") != 2 or s1.meta.get("k") != 1:
        raise ValueError("the sinogram pipeline handles n = 2, k = 1")
    if s1.offset_grid is None:
        raise ValueError("stage 1 needs sinogram offsets on a regular grid")
    if s1.frames is None:
        raise ValueError("stage 2 needs the sinogram frames")
    angles = np.array([math.atan2(fr.v[1, 0], fr.v[0, 0]) for fr in s1.frames])
    alpha = float(s1.meta["alpha"])
    rho1 = float(s1.meta["rho"])
    og = s1.offset_grid
    if out_grid is None:
        L = og.half_extent[0] / math.sqrt(2.0)
        out_grid = Grid((og.samples[0], og.samples[0]), (L, L))
    phi = np.empty_like(s1.values)
    energies = []
    diag = {"stage1": "two-radius" if s2 is not None else "single-radius"}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllPosedWarning)
        for i in range(len(s1.frames)):
            g1 = s1.frame_field(i)
            if s2 is None:
                rec = single_radius_invert(g1, OperatorSpec(1, alpha, rho1), params)
            else:
                rec = two_radius_invert(g1, s2.frame_field(i), rho1, float(s2.meta["rho"]), alpha, params, force=force)
            phi[i] = rec.field.values.ravel()
            energies.append(rec.discarded_band_energy)
            diag.update({k: v for k, v in rec.diagnostics.items() if k not in diag})
    t_axis = og.axes()[0]
    reach = float(np.linalg.norm(out_grid.half_extent))
    if reach > og.half_extent[0]:
        diag["coverage_warning"] = f"offsets reach {og.half_extent[0]:g} < {reach:g}; grid corners are biased"
    vals = filtered_backprojection(phi, t_axis, angles, out_grid)
    diag["stage1_phi"] = phi
    frac = float(np.max(energies)) if energies else 0.0
    f = Field(out_grid, vals, "spatial", {"path": "shifted-sinogram"})
    return Reconstruction(f, np.ones(out_grid.shape, dtype=bool), frac, frac > 0.5, diag)


# -- reports ---------------------------------------------------------------------------


def make_report(verdict, clause, params, *, reconstruction=None, reference=None, sweep=None):
    """Reconstruction report as a JSON-ready dict."""
    errors = {"l2_rel": None, "sup_interior": None}
    if reconstruction is not None and reference is not None:
        errors["l2_rel"] = relative_l2(reconstruction.field, reference)
        diff = interior(reconstruction.field) - interior(reference)
        errors["sup_interior"] = float(np.max(np.abs(diff)))
    return {
        "verdict": verdict,
        "clause": clause,
        "params": params,
        "errors": errors,
        "epsilon_sweep": list(sweep or []),
        "discarded_band_energy": None if reconstruction is None else reconstruction.discarded_band_energy,
    }


def write_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
