"""k-plane transforms and their shifted (mean-value) variants.

A plane is {x : v^T x = t} with v an n x (n-k) Stiefel matrix and t in
R^(n-k); its k-plane integral is

    phi_v(t) = int_{v-perp} f(v t + u) du.

The shifted transforms average phi_v over an (n-k)-dimensional sphere or ball
around t:

    (R^alpha_rho f)(v, t) = (M^alpha_rho phi_v)(t),

with the *normalized* (n-k)-dimensional EPD mean for every alpha >= 0, so
alpha = 0 is the average over the two parallel planes / pipe surface and
alpha = 1 is the average over the strip / slab / solid tube.  The raw
(unnormalized) ball integral is obtained by multiplying with
:func:`raw_ball_factor`.

Sources are either sampled :class:`~epdkit.grid.Field` objects (quintic
spline interpolation, Gauss-Legendre panels over the plane clipped to the
grid) or analytic :class:`~epdkit.phantoms.PhantomSpec` objects, which are
radial about their center and are integrated in in-plane polar coordinates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
from scipy import integrate, ndimage

from ._quadrature import SPLINE_ORDER, nested_rule
from .grid import Field, Grid
from .meanops import _spatial
from .phantoms import PhantomSpec, unit_ball_volume
from .specfun import gamma_fn

__all__ = [
    "SUPPORTED_PAIRS",
    "ABEL_DELTAS",
    "StiefelFrame",
    "PlaneParam",
    "Sinogram",
    "random_frames",
    "uniform_frames",
    "kplane_transform",
    "shifted_kplane",
    "shifted_kplane_ball",
    "shifted_kplane_alpha",
    "sinogram",
    "divergence_demo",
    "raw_ball_factor",
    "write_sinogram_csv",
    "read_sinogram_csv",
]

SUPPORTED_PAIRS = ((2, 1), (3, 1), (3, 2), (4, 1), (4, 2))
ABEL_DELTAS = (1e-2, 5e-3, 2.5e-3)
_GL_FIELD = 3
_GL_ANALYTIC = 8


@dataclass(frozen=True)
class StiefelFrame:
    """n x (n-k) matrix with orthonormal columns."""

    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        n, d = v.shape
        if not 1 <= d <= n - 1:
            raise ValueError("a frame needs 1 <= n - k <= n - 1 columns")
        if np.abs(v.T @ v - np.eye(d)).max() > 1e-12:
            raise ValueError("frame columns are not orthonormal to 1e-12")
        v.flags.writeable = False
        object.__setattr__(self, "v", v)

    @property
    def n(self):
        return self.v.shape[0]

    @property
    def k(self):
        return self.v.shape[0] - self.v.shape[1]

    @cached_property
    def complement(self):
        """Orthonormal basis of the orthogonal complement (n x k)."""
        u, _, _ = np.linalg.svd(self.v, full_matrices=True)
        w = np.ascontiguousarray(u[:, self.v.shape[1] :])
        w.flags.writeable = False
        return w

    def __eq__(self, other):
        return isinstance(other, StiefelFrame) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash(self.v.tobytes())


@dataclass(frozen=True)
class PlaneParam:
    frame: StiefelFrame
    offset: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if t.shape != (self.frame.v.shape[1],):
            raise ValueError("offset must have n - k components")
        object.__setattr__(self, "offset", t)


def random_frames(n, k, count, seed):
    """``count`` frames from QR factorizations of seeded Gaussian matrices."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(int(count)):
        q, r = np.linalg.qr(rng.standard_normal((n, n - k)))
        q = q * np.sign(np.diag(r))
        out.append(StiefelFrame(q))
    return out


def uniform_frames(count):
    """Unit normals at angles pi j / count, j = 0 .. count-1 (lines in R^2)."""
    th = np.pi * np.arange(count) / count
    return [StiefelFrame(np.array([[math.cos(a)], [math.sin(a)]])) for a in th]


def raw_ball_factor(n, k, rho):
    """vol(B^(n-k)) rho^(n-k): raw ball integral = factor * normalized mean."""
    d = n - k
    return unit_ball_volume(d) * rho**d


def _check_pair(n, k):
    if (n, k) not in SUPPORTED_PAIRS:
        raise ValueError(f"(n, k) = ({n}, {k}) is not supported; choose from {SUPPORTED_PAIRS}")


# -- plane integrals -----------------------------------------------------------


def _gauss_panels(lo, hi, width, order):
    npan = max(1, int(math.ceil((hi - lo) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


class _FieldSource:
    def __init__(self, f, order=SPLINE_ORDER):
        if f.tag != "spatial":
            raise ValueError("k-plane transforms need a spatial field")
        self.grid = f.grid
        self.order = order
        self.pad = order + 3
        padded = np.pad(np.asarray(f.values, dtype=float), self.pad, mode="constant")
        self.coef = ndimage.spline_filter(padded, order=order, mode="mirror")
        self.lo = np.array([-L for L in f.grid.half_extent])
        self.hi = np.array([L for L in f.grid.half_extent])
        self.h = np.array(f.grid.spacing)

    def sample(self, x):
        idx = (x - self.lo) / self.h + self.pad
        coords = np.moveaxis(idx, -1, 0).reshape(self.grid.dim, -1)
        out = ndimage.map_coordinates(self.coef, coords, order=self.order, mode="constant", cval=0.0, prefilter=False)
        return out.reshape(x.shape[:-1])

    def phi(self, frame, T, panel=None, gl=_GL_FIELD, chunk=400_000):
        v, W = frame.v, frame.complement
        k = W.shape[1]
        width = panel or float(self.h.min())
        base = T @ v.T  # (M, n) feet of the planes
        if k == 1:
            lo, hi = _slab_interval(base, W[:, 0], self.lo - self.h, self.hi + self.h)
            if hi <= lo:
                return np.zeros(len(T)), np.ones(len(T), dtype=bool)
            u, wu = _gauss_panels(lo, hi, width, gl)
            U, WU = u[:, None], wu
        else:
            R = float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi)) + self.h))
            u1, w1 = _gauss_panels(-R, R, width, gl)
            mesh = np.meshgrid(*([u1] * k), indexing="ij")
            U = np.stack([m.ravel() for m in mesh], axis=-1)
            WU = np.prod(np.meshgrid(*([w1] * k), indexing="ij"), axis=0).ravel()
            keep = np.sum(U * U, axis=1) <= R * R
            U, WU = U[keep], WU[keep]
        inplane = U @ W.T  # (Q, n)
        out = np.empty(len(T))
        step = max(1, chunk // len(U))
        for s in range(0, len(T), step):
            pts = base[s : s + step, None, :] + inplane[None, :, :]
            out[s : s + step] = self.sample(pts) @ WU
        missed = ~_hits_box(base, W, self.lo, self.hi)
        return out, missed


def _slab_interval(base, w, lo, hi):
    # common u-interval covering the line x = b + u w inside the box, over all b
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (lo[None, :] - base) / w[None, :]
        b = (hi[None, :] - base) / w[None, :]
    tmin = np.where(np.abs(w) > 1e-14, np.minimum(a, b), -np.inf)
    tmax = np.where(np.abs(w) > 1e-14, np.maximum(a, b), np.inf)
    inside = np.all((np.abs(w)[None, :] > 1e-14) | ((base >= lo) & (base <= hi)), axis=1)
    enter = tmin.max(axis=1)
    leave = tmax.min(axis=1)
    ok = inside & (leave > enter)
    if not ok.any():
        return 0.0, 0.0
    return float(enter[ok].min()), float(leave[ok].max())


def _hits_box(base, W, lo, hi):
    # conservative: the plane meets the circumscribed ball of the box
    R = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))
    return np.linalg.norm(base, axis=1) <= R


class _AnalyticSource:
    """Phantoms radial about a center, integrated in in-plane polar coordinates."""

    def __init__(self, spec):
        self.spec = spec
        self.center = np.asarray(spec.params.get("center", np.zeros(spec.dim)), dtype=float)

    def phi(self, frame, T, panel=None, gl=_GL_ANALYTIC, damping=None):
        """Plane integrals at offsets T; a tuple ``damping`` gives one row per delta."""
        spec = self.spec
        v = frame.v
        k = frame.k
        c = self.center
        d2 = np.sum((T - c @ v) ** 2, axis=1)
        R = spec.support_radius
        deltas = damping if isinstance(damping, tuple) else (damping,)
        if math.isinf(R):
            if any(d is None for d in deltas):
                raise ValueError(f"{spec.kind} has unbounded support; pass damping (Abel averaging) or use a field")
            r_max = math.sqrt(45.0 / min(deltas))
        else:
            r_max = R
        if panel is None:
            panel = {"gaussian": 0.25 * spec.params.get("sigma", 1.0), "psi": 2.0}.get(spec.kind, 0.5)
        missed = d2 >= R * R if not math.isinf(R) else np.zeros(len(T), dtype=bool)
        if spec.kind == "ball" and spec.params["edge"] == 0:
            # constant inside: integrate exactly over the in-plane disc
            Rb = spec.params["radius"]
            h2 = np.maximum(Rb * Rb - d2, 0.0)
            out = unit_ball_volume(k) * h2 ** (0.5 * k)
            return (np.tile(out, (len(deltas), 1)) if isinstance(damping, tuple) else out), missed
        r, wr = _gauss_panels(0.0, r_max, panel, gl)
        area = 2.0 * math.pi ** (0.5 * k) / gamma_fn(0.5 * k)
        wr = area * wr * r ** (k - 1)
        wmat = np.stack([wr if d is None else wr * np.exp(-d * r * r) for d in deltas], axis=1)
        # radial symmetry about c: evaluate along one in-plane ray per plane
        e0 = frame.complement[:, 0]
        feet = c[None, :] + (T - c @ v) @ v.T
        out = np.empty((len(T), len(deltas)))
        step = max(1, 200_000 // len(r))
        for s in range(0, len(T), step):
            pts = feet[s : s + step, None, :] + r[None, :, None] * e0[None, None, :]
            out[s : s + step] = spec.evaluate(pts) @ wmat
        return (out.T if isinstance(damping, tuple) else out[:, 0]), missed


def _source(f):
    if isinstance(f, Field):
        return _FieldSource(f)
    if isinstance(f, PhantomSpec):
        if f.kind == "zgrn":
            raise ValueError("zgrn plane integrals diverge in the relevant range; use divergence_demo")
        return _AnalyticSource(f)
    raise TypeError("source must be a Field or a PhantomSpec")


def _richardson(values):
    # values at delta, delta/2, delta/4; removes the O(delta) and O(delta^2) terms
    v1, v2, v4 = values
    return (8.0 * v4 - 6.0 * v2 + v1) / 3.0


def _phi(src, frame, T, damping=None, panel=None):
    """phi_v at offsets T (M, n-k).  ``damping='abel'`` extrapolates over ABEL_DELTAS."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if isinstance(src, _FieldSource):
        if damping is not None:
            raise ValueError("Abel damping applies to analytic sources only")
        return src.phi(frame, T, panel=panel)
    if damping == "abel":
        rows, missed = src.phi(frame, T, panel=panel, damping=ABEL_DELTAS)
        return _richardson(rows), missed
    return src.phi(frame, T, panel=panel, damping=damping)


def _auto_damping(f, damping):
    if damping is None and isinstance(f, PhantomSpec) and math.isinf(f.support_radius):
        return "abel"
    return damping


def kplane_transform(f, p, *, damping=None, panel=None, return_info=False):
    """k-plane integral of f over the plane ``p``.

    For unbounded analytic phantoms (psi) the integral is taken in the Abel
    sense by default: the in-plane integrand is damped by exp(-delta |u|^2)
    and the result extrapolated to delta = 0.  A plane that misses the grid
    (or the phantom's support) gives 0 and ``missed=True`` in the info dict.
    """
    _check_pair(p.frame.n, p.frame.k)
    src = _source(f)
    damping = _auto_damping(f, damping)
    val, missed = _phi(src, p.frame, p.offset[None, :], damping, panel)
    value = 0.0 if missed[0] else float(val[0])
    if return_info:
        return value, {"missed": bool(missed[0]), "damping": damping}
    return value


def _shifted_direct(src, frame, T, rho, alpha, nodes=None, damping=None, panel=None, rtol=1e-9, max_nodes=64):
    d = frame.v.shape[1]

    def at(m):
        y, w = nested_rule(d, alpha, m)
        Q = (T[:, None, :] - rho * y[None, :, :]).reshape(-1, d)
        vals, _ = _phi(src, frame, Q, damping, panel)
        return vals.reshape(len(T), len(w)) @ w

    if (d == 1 and alpha == 0) or nodes is not None:
        return at(int(nodes or 1))
    if damping is not None:
        # extrapolated values carry ~1e-6 relative noise; refine only to that level
        rtol = max(rtol, 1e-7)
    m = max(8, int(math.ceil(rho)) + 6)
    prev = at(m)
    while m < max_nodes:
        m += 6
        cur = at(m)
        done = np.abs(cur - prev).max() <= rtol * max(np.abs(cur).max(), 1e-300)
        prev = cur
        if done:
            break
    return prev


def shifted_kplane_alpha(f, p, rho, alpha, *, nodes=None, damping=None, panel=None):
    """(R^alpha_rho f)(v, t) = (M^alpha_rho phi_v)(t) with the normalized (n-k)-dim mean.

    phi_v is evaluated by :func:`kplane_transform` at the nodes of a nested
    Gauss-Jacobi rule over the (n-k)-ball (or sphere for alpha = 0).
    """
    if alpha < 0:
        raise ValueError("shifted k-plane transforms are defined here for alpha >= 0")
    if not rho > 0:
        raise ValueError("rho must be positive")
    _check_pair(p.frame.n, p.frame.k)
    src = _source(f)
    damping = _auto_damping(f, damping)
    return float(_shifted_direct(src, p.frame, p.offset[None, :], rho, alpha, nodes, damping, panel)[0])


def shifted_kplane(f, p, rho, **kw):
    """Average of phi_v over the sphere of radius rho about t (alpha = 0)."""
    return shifted_kplane_alpha(f, p, rho, 0.0, **kw)


def shifted_kplane_ball(f, p, rho, **kw):
    """Normalized average of phi_v over the ball of radius rho about t (alpha = 1)."""
    return shifted_kplane_alpha(f, p, rho, 1.0, **kw)


# -- sinograms --------------------------------------------------------------------


@dataclass
class Sinogram:
    """Transform values over frames x offsets.

    ``values[i, j]`` belongs to ``frames[i]`` and ``offsets[j]``.  When the
    offsets form a regular grid, ``offset_grid`` holds it and ``offsets`` is
    its point list in row-major order.
    """

    frames: list | None
    offsets: np.ndarray
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)
    offset_grid: Grid | None = None

    def __post_init__(self):
        self.offsets = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        nf = self.values.shape[0]
        if self.values.shape != (nf, len(self.offsets)):
            raise ValueError("values must have shape (frames, offsets)")
        if self.frames is not None and len(self.frames) != nf:
            raise ValueError("frame count does not match values")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sinogram contains non-finite values")

    @property
    def n(self):
        return self.meta.get("n")

    @property
    def k(self):
        return self.meta.get("k")

    def frame_field(self, i):
        """Row ``i`` as a Field on the offset grid."""
        if self.offset_grid is None:
            raise ValueError("sinogram offsets are not a regular grid")
        return Field(self.offset_grid, self.values[i].reshape(self.offset_grid.shape))


def _offsets(offsets, d):
    if isinstance(offsets, Grid):
        if offsets.dim != d:
            raise ValueError(f"offset grid must be {d}-dimensional")
        return offsets.points(), offsets
    T = np.asarray(offsets, dtype=float)
    if T.ndim == 1:
        T = T[:, None] if d == 1 else T[None, :]
    if T.shape[1] != d:
        raise ValueError(f"offsets must have {d} components")
    return T, None


def sinogram(f, frames, offsets, rho=0.0, alpha=0.0, *, method="auto", nodes=None, damping=None, panel=None, seed=None):
    """Batch (R^alpha_rho f)(v, t) over frames x offsets (rho = 0 gives phi_v itself).

    ``method="grid"`` samples phi_v on the regular offset grid and applies the
    spatial EPD mean of the meanops module to it; only the central half of the
    offset box is then reliable.  ``method="direct"`` evaluates phi_v at every
    quadrature node.  ``"auto"`` picks grid for field sources on a grid of
    offsets and direct otherwise.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one frame")
    n, k = frames[0].n, frames[0].k
    if any((fr.n, fr.k) != (n, k) for fr in frames):
        raise ValueError("all frames must share n and k")
    _check_pair(n, k)
    d = n - k
    T, og = _offsets(offsets, d)
    src = _source(f)
    damping = _auto_damping(f, damping)
    if method == "auto":
        method = "grid" if (og is not None and isinstance(src, _FieldSource)) else "direct"
    vals = np.empty((len(frames), len(T)))
    with_flags = np.zeros((len(frames), len(T)), dtype=bool)
    info = {}
    for i, fr in enumerate(frames):
        if rho == 0:
            row, missed = _phi(src, fr, T, damping, panel)
            with_flags[i] = missed
        elif method == "grid":
            if og is None:
                raise ValueError("grid method needs a Grid of offsets")
            row, missed = _phi(src, fr, T, damping, panel)
            phi = Field(og, row.reshape(og.shape))
            mean = _spatial(phi, float(alpha), float(rho), nodes=nodes)
            info = dict(mean.meta)
            row = np.nan_to_num(mean.values.ravel(), nan=0.0)
        elif method == "direct":
            row = _shifted_direct(src, fr, T, rho, alpha, nodes, damping, panel)
        else:
            raise ValueError(f"unknown method {method!r}")
        vals[i] = row
    meta = {"n": n, "k": k, "rho": float(rho), "alpha": float(alpha), "seed": seed, "method": method,
            "missed": int(with_flags.sum()), "damping": damping}
    if info:
        meta["mean"] = {key: info[key] for key in ("nodes", "converged") if key in info}
    return Sinogram(frames, T, vals, meta, og)


# -- divergence of plane integrals -------------------------------------------------


def divergence_demo(p_exponent, truncation_radii, n=2, k=1, t=0.0):
    """Truncated k-plane integrals of (2+|x|)^(-n/p) / log(2+|x|) over one plane.

    Integrates over the in-plane ball |u| < T about the foot of the plane at
    distance ``t`` from the origin, for each T.  For p >= n/k these grow
    without bound as T increases.
    """
    if not p_exponent >= n / k:
        raise ValueError(f"the divergence regime is p >= n/k = {n / k}")
    radii = [float(T) for T in truncation_radii]
    if any(T <= 0 for T in radii):
        raise ValueError("truncation radii must be positive")
    area = 2.0 * math.pi ** (0.5 * k) / gamma_fn(0.5 * k)

    def integrand(r):
        x = math.sqrt(t * t + r * r)
        return area * r ** (k - 1) * (2.0 + x) ** (-n / p_exponent) / math.log(2.0 + x)

    out = []
    for T in radii:
        edges = [0.0] + [10.0**j for j in range(0, int(math.floor(math.log10(T))) + 1) if 10.0**j < T] + [T]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                total += integrate.quad(integrand, a, b, limit=200, epsabs=0, epsrel=1e-12)[0]
        out.append(total)
    return out


# -- CSV exchange --------------------------------------------------------------------


def write_sinogram_csv(path_or_buf, s, comments=()):
    """Write ``# EPDT-SINO n k rho alpha seed`` then ``frame, t_1..t_d, value`` rows.

    Extra ``comments`` go on ``#`` lines right after the header.
    """
    seed = s.meta.get("seed")
    seed_tok = "none" if seed is None else str(int(seed))
    lines = [f"# EPDT-SINO {s.meta['n']} {s.meta['k']} {s.meta['rho']:.17g} {s.meta['alpha']:.17g} {seed_tok}"]
    lines += [f"# {c}" for c in comments]
    for i in range(s.values.shape[0]):
        for t, val in zip(s.offsets, s.values[i]):
            lines.append(", ".join([str(i), *(f"{x:.17g}" for x in t), f"{val:.17g}"]))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)


def read_sinogram_csv(path_or_buf):
    """Inverse of :func:`write_sinogram_csv`.

    Frames are regenerated from the seed (``-1`` means uniform angles in the
    plane); with seed ``none`` the frames are left as None.
    """
    text = path_or_buf.read() if hasattr(path_or_buf, "read") else open(path_or_buf).read()
    first, _, body = text.partition("\n")
    tok = first.split()
    if len(tok) != 7 or tok[:2] != ["#", "EPDT-SINO"]:
        raise ValueError("not an EPDT-SINO file")
    n, k = int(tok[2]), int(tok[3])
    rho, alpha = float(tok[4]), float(tok[5])
    seed = None if tok[6] == "none" else int(tok[6])
    d = n - k
    body = "\n".join(line for line in body.splitlines() if not line.startswith("#"))
    rows = [r for r in csv.reader(io.StringIO(body)) if r]
    idx = np.array([int(r[0]) for r in rows])
    data = np.array([[float(x) for x in r[1:]] for r in rows])
    nf = int(idx.max()) + 1 if len(idx) else 0
    per = len(rows) // max(nf, 1)
    offsets = data[:per, :d]
    values = data[:, d].reshape(nf, per)
    frames = None
    if seed == -1:
        frames = uniform_frames(nf)
    elif seed is not None:
        frames = random_frames(n, k, nf, seed)
    meta = {"n": n, "k": k, "rho": rho, "alpha": alpha, "seed": seed}
    return Sinogram(frames, offsets, values, meta, _infer_grid(offsets))


def _infer_grid(offsets):
    # a regular offset grid is recognized when the points match Grid.points() exactly
    d = offsets.shape[1]
    axes = [np.unique(offsets[:, j]) for j in range(d)]
    try:
        g = Grid(tuple(len(a) for a in axes), tuple(-float(a[0]) for a in axes))
    except ValueError:
        return None
    if g.size != len(offsets) or not np.allclose(g.points(), offsets, rtol=0, atol=1e-12):
        return None
    return g
