"""Regular origin-centred grids, sampled fields and the continuous-convention DFT.

Grid points along axis ``i`` are ``-L_i + j h_i`` for ``j = 0 .. N_i - 1``
with ``h_i = 2 L_i / N_i``.  The forward transform approximates

    F(xi) = integral f(x) exp(+i x . xi) dx

on the lattice ``xi_i = pi k / L_i``, ``k = -N_i/2 .. N_i/2 - 1``.  Spectral
values are kept in the unshifted FFT layout (``k = 0, 1, ..., -1``); use
:meth:`Grid.frequencies` rather than assuming an ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any, Mapping

import numpy as np
import scipy.fft

__all__ = [
    "ConfigurationError",
    "Grid",
    "Field",
    "dft_forward",
    "dft_inverse",
    "apodize",
    "apodization_window",
    "interior_slices",
    "interior",
    "write_field",
    "read_field",
]

DEFAULT_APODIZE_MARGIN = 0.15


class ConfigurationError(ValueError):
    """Raised for grids or fields that violate the grid invariants."""


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    samples: tuple[int, ...]
    half_extent: tuple[float, ...]

    def __post_init__(self):
        samples = tuple(int(s) for s in np.atleast_1d(self.samples))
        half = tuple(float(x) for x in np.atleast_1d(self.half_extent))
        if len(half) == 1 and len(samples) > 1:
            half = half * len(samples)
        if len(samples) != len(half):
            raise ConfigurationError("samples and half_extent must have the same length")
        if not 1 <= len(samples) <= 4:
            raise ConfigurationError(f"grid dimension must be 1..4, got {len(samples)}")
        for s in samples:
            if s < 8 or not _is_pow2(s):
                raise ConfigurationError(f"sample counts must be powers of two >= 8, got {s}")
        if any(not (L > 0 and np.isfinite(L)) for L in half):
            raise ConfigurationError("half extents must be positive and finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "half_extent", half)

    @classmethod
    def cube(cls, dim, n, half_extent):
        return cls((n,) * dim, (half_extent,) * dim)

    @property
    def dim(self):
        return len(self.samples)

    @property
    def shape(self):
        return self.samples

    @property
    def size(self):
        return int(np.prod(self.samples))

    @property
    def spacing(self):
        return tuple(2.0 * L / N for N, L in zip(self.samples, self.half_extent))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axes(self):
        return [-L + h * np.arange(N) for N, L, h in zip(self.samples, self.half_extent, self.spacing)]

    def coords(self):
        """Coordinate arrays, one per axis, each with the full grid shape."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self):
        """All grid points as an ``(size, dim)`` array in row-major order."""
        return np.stack([c.ravel() for c in self.coords()], axis=-1)

    def radius(self):
        return np.sqrt(sum(c * c for c in self.coords()))

    def frequencies(self):
        """Per-axis frequency lattices in the unshifted DFT layout."""
        return [np.pi * np.fft.fftfreq(N, 1.0 / N) / L for N, L in zip(self.samples, self.half_extent)]

    def frequency_radius(self):
        """|xi| on the full spectral lattice (unshifted layout)."""
        mesh = np.meshgrid(*self.frequencies(), indexing="ij")
        return np.sqrt(sum(m * m for m in mesh))

    @property
    def nyquist(self):
        """Smallest per-axis Nyquist frequency pi / h."""
        return min(np.pi / h for h in self.spacing)

    @property
    def frequency_spacing(self):
        return tuple(np.pi / L for L in self.half_extent)

    def header_tokens(self):
        return [str(self.dim), *map(str, self.samples), *map(repr, self.half_extent)]


@dataclass(frozen=True)
class Field:
    """Samples of a function on a :class:`Grid`.

    ``values`` has the grid shape and is made read-only; operations return
    new fields.  ``tag`` is ``"spatial"`` or ``"spectral"``.
    """

    grid: Grid
    values: np.ndarray
    tag: str = "spatial"
    meta: Mapping[str, Any] = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.tag not in ("spatial", "spectral"):
            raise ConfigurationError(f"unknown field tag {self.tag!r}")
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.size != self.grid.size:
            raise ConfigurationError(f"field has {vals.size} values, grid needs {self.grid.size}")
        vals = np.array(vals.reshape(self.grid.shape), copy=True)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def with_values(self, values, **kw):
        return Field(self.grid, values, kw.get("tag", self.tag), kw.get("meta", self.meta))

    def real(self):
        return self.with_values(self.values.real)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other, self))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other, self))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other, self))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def norm2(self):
        """Quadrature L2 norm (spatial: cell volume; spectral: lattice cell)."""
        w = self.grid.cell_volume if self.tag == "spatial" else float(np.prod(self.grid.frequency_spacing))
        return float(np.sqrt(w * np.sum(np.abs(self.values) ** 2)))

    def sup(self):
        return float(np.max(np.abs(self.values)))


def _vals(other, like):
    if isinstance(other, Field):
        if other.grid != like.grid or other.tag != like.tag:
            raise ConfigurationError("fields live on different grids or domains")
        return other.values
    return other


def _phase(grid):
    # exp(-i L xi_k) = (-1)^k on each axis, multiplied out over the grid
    ph = None
    for axis, N in enumerate(grid.samples):
        k = np.fft.fftfreq(N, 1.0 / N).astype(int)
        s = np.where(k % 2 == 0, 1.0, -1.0)
        shape = [1] * grid.dim
        shape[axis] = N
        s = s.reshape(shape)
        ph = s if ph is None else ph * s
    return ph


def dft_forward(f, workers=None):
    """Continuous-convention forward transform of a spatial field."""
    if f.tag != "spatial":
        raise ConfigurationError("dft_forward expects a spatial field")
    g = f.grid
    vals = scipy.fft.ifftn(f.values, workers=workers) * (g.size * g.cell_volume)
    return Field(g, vals * _phase(g), "spectral", f.meta)


def dft_inverse(F, workers=None, real=None):
    """Exact inverse of :func:`dft_forward`.

    With ``real=True`` the imaginary part is dropped; by default it is
    dropped only when it is at round-off level relative to the result.
    """
    if F.tag != "spectral":
        raise ConfigurationError("dft_inverse expects a spectral field")
    g = F.grid
    vals = scipy.fft.fftn(F.values * _phase(g), workers=workers) / (g.size * g.cell_volume)
    if real is None:
        scale = np.max(np.abs(vals)) if vals.size else 0.0
        real = scale == 0.0 or np.max(np.abs(vals.imag)) <= 1e-12 * scale
    if real:
        vals = vals.real
    return Field(g, vals, "spatial", F.meta)


def apodization_window(grid, margin=DEFAULT_APODIZE_MARGIN):
    """Separable raised-cosine window: 1 on the central (1 - 2 margin) box, 0 at the edge."""
    if not 0 < margin < 0.5:
        raise ValueError("apodization margin must lie in (0, 1/2)")
    w = np.ones(grid.shape)
    for axis, (x, L) in enumerate(zip(grid.axes(), grid.half_extent)):
        a = (1.0 - 2.0 * margin) * L
        ax = np.abs(x)
        w1 = np.where(ax <= a, 1.0, 0.5 * (1.0 + np.cos(np.pi * (ax - a) / (L - a))))
        shape = [1] * grid.dim
        shape[axis] = x.size
        w = w * w1.reshape(shape)
    return w


def apodize(f, margin=DEFAULT_APODIZE_MARGIN):
    return f.with_values(f.values * apodization_window(f.grid, margin))


def interior_slices(grid, fraction=0.5):
    """Index slices of the central box covering ``fraction`` of each axis."""
    out = []
    for N in grid.samples:
        half = int(round(fraction * N / 2))
        c = N // 2
        out.append(slice(c - half, c + half + 1 if c + half < N else N))
    return tuple(out)


def interior(f, fraction=0.5):
    vals = f.values if isinstance(f, Field) else np.asarray(f)
    grid = f.grid if isinstance(f, Field) else None
    if grid is None:
        raise TypeError("interior() needs a Field")
    return vals[interior_slices(grid, fraction)]


# -- EPDT1 binary format -------------------------------------------------------


def write_field(path, f):
    """Write a spatial field in the EPDT1 format."""
    if f.tag != "spatial":
        raise ConfigurationError("EPDT1 stores spatial fields only")
    kind = "complex" if f.is_complex else "real"
    header = " ".join(["EPDT1", *f.grid.header_tokens(), kind]) + "\n"
    data = np.ascontiguousarray(f.values, dtype="<c16" if kind == "complex" else "<f8")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes(order="C"))


def read_field(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        payload = fh.read()
    if not header or header[0] != "EPDT1":
        raise ConfigurationError(f"{path}: not an EPDT1 file")
    try:
        n = int(header[1])
        samples = tuple(int(t) for t in header[2 : 2 + n])
        half = tuple(float(t) for t in header[2 + n : 2 + 2 * n])
        kind = header[2 + 2 * n]
    except (IndexError, ValueError) as exc:
        raise ConfigurationError(f"{path}: malformed EPDT1 header") from exc
    if kind not in ("real", "complex") or len(header) != 3 + 2 * n:
        raise ConfigurationError(f"{path}: malformed EPDT1 header")
    grid = Grid(samples, half)
    dtype = np.dtype("<c16" if kind == "complex" else "<f8")
    if len(payload) != grid.size * dtype.itemsize:
        raise ConfigurationError(f"{path}: payload size does not match header")
    vals = np.frombuffer(payload, dtype=dtype).reshape(grid.shape)
    return Field(grid, vals.astype(complex if kind == "complex" else float))
