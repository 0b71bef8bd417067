"""Separable B-spline shifting and nested Gauss-Jacobi rules for EPD means.

The mean over the unit ball with weight (1 - |y|^2)^(alpha-1) factors axis by
axis.  Writing y = (z, sqrt(1 - z^2) eta) with |eta| < 1 gives

    M^alpha_{n,t} f(x) = int w(z) (M^alpha_{n-1, t sqrt(1-z^2)} f)(x - t z e_0) dz,
    w(z) ~ (1 - z^2)^(alpha - 1 + (n-1)/2),

down to the one-dimensional mean with weight (1 - z^2)^(alpha-1), or the
two-point average at alpha = 0.  Every level is a symmetric Gauss-Jacobi rule,
and every node is a one-axis shift of spline coefficients, so shifts along the
leading axes are shared by all nodes below them.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numba
import numpy as np
from scipy import ndimage, special

SPLINE_ORDER = 5


@lru_cache(maxsize=None)
def _bspline_poly(degree):
    # centered cardinal B-spline as a truncated-power sum
    c = [(-1) ** k * math.comb(degree + 1, k) / math.factorial(degree) for k in range(degree + 2)]
    return np.array(c), 0.5 * (degree + 1)


def bspline(x, degree=SPLINE_ORDER):
    """Centered cardinal B-spline of the given degree."""
    c, half = _bspline_poly(degree)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k, ck in enumerate(c):
        out += ck * np.maximum(x + half - k, 0.0) ** degree
    return np.where(np.abs(x) < half, out, 0.0)


def tap_weights(delta, degree=SPLINE_ORDER):
    """Weights beta(delta + q) for q = -K .. K-1, K = (degree + 1) // 2."""
    K = (degree + 1) // 2
    q = np.arange(-K, K)
    return bspline(delta + q, degree)


@lru_cache(maxsize=None)
def symmetric_jacobi(m, a):
    """Nodes and normalized weights for (1 - z^2)^a on [-1, 1].

    ``a = -1`` is read as the two-point limit (z = +-1), which is the
    spherical mean in one dimension.
    """
    if a == -1.0:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    if a < -1.0:
        raise ValueError("weight exponent must be >= -1")
    z, w = special.roots_jacobi(int(m), a, a)
    w = w / w.sum()
    z.flags.writeable = False
    w.flags.writeable = False
    return z, w


@numba.njit(cache=True)
def _tap_pass(src, start, w, dst, scale, accumulate):
    # dst[a, j, b] (+)= scale * sum_q w[q] src[a, start + j + q, b]
    A, n_out, B = dst.shape
    T = w.shape[0]
    for a in range(A):
        for j in range(n_out):
            if not accumulate:
                for b in range(B):
                    dst[a, j, b] = 0.0
            for q in range(T):
                wq = w[q] * scale
                row = start + j + q
                for b in range(B):
                    dst[a, j, b] += wq * src[a, row, b]


class SplineShifter:
    """Spline coefficients of a sampled field under mirror extension.

    The coefficients of the whole-sample mirror extension are themselves
    mirror symmetric, so padding them by reflection gives the extended
    interpolant exactly (constants are reproduced up to the grid edge).
    ``pad`` must cover the largest shift (in samples) that will be requested.
    """

    def __init__(self, values, spacing, pad, degree=SPLINE_ORDER):
        values = np.asarray(values, dtype=float)
        self.ndim = values.ndim
        self.shape = values.shape
        self.spacing = tuple(float(h) for h in spacing)
        self.degree = degree
        self.K = (degree + 1) // 2
        self.pad = int(pad) + self.K + 2
        coef = ndimage.spline_filter(values, order=degree, mode="mirror")
        self.coef = np.ascontiguousarray(np.pad(coef, self.pad, mode="reflect"))

    def _fused_taps(self, axis, shifts, weights):
        s = np.asarray(shifts) / self.spacing[axis]
        m = np.floor(s).astype(int)
        lo = int(-m.max()) - self.K
        taps = np.zeros(int(m.max() - m.min()) + 2 * self.K)
        for si, mi, wi in zip(s, m, weights):
            k = -mi - self.K - lo
            taps[k : k + 2 * self.K] += wi * tap_weights(si - mi, self.degree)
        return lo, taps

    def _pass(self, arr, axis, shift, region, dst=None, scale=1.0):
        """Resample ``arr`` along ``axis`` at x - shift, restricted to ``region[axis]``."""
        s = shift / self.spacing[axis]
        m = math.floor(s)
        return self._apply(arr, axis, -m - self.K, tap_weights(s - m, self.degree), region, dst, scale)

    def _apply(self, arr, axis, offset, w, region, dst=None, scale=1.0):
        lo, hi = region[axis]
        start = self.pad + offset + lo
        if start < 0 or start + (hi - lo) + len(w) - 1 > arr.shape[axis]:
            raise ValueError("shift exceeds spline padding")
        A = int(np.prod(arr.shape[:axis], dtype=np.int64))
        B = int(np.prod(arr.shape[axis + 1 :], dtype=np.int64))
        src = arr.reshape(A, arr.shape[axis], B)
        out_shape = arr.shape[:axis] + (hi - lo,) + arr.shape[axis + 1 :]
        if dst is None:
            out = np.empty(out_shape)
            _tap_pass(src, start, w, out.reshape(A, hi - lo, B), 1.0, False)
            return out
        _tap_pass(src, start, w, dst.reshape(A, hi - lo, B), scale, True)
        return dst

    def mean(self, radius, alpha, nodes, region=None):
        """Weighted ball mean (alpha > 0) or sphere mean (alpha = 0) at ``radius``.

        ``region`` is a list of (lo, hi) index ranges per axis; the result has
        the region's shape.
        """
        if region is None:
            region = [(0, N) for N in self.shape]
        out = np.zeros(tuple(hi - lo for lo, hi in region))
        self._level(self.coef, 0, radius, 1.0, alpha, nodes, region, out)
        return out

    def _level(self, arr, axis, radius, weight, alpha, nodes, region, out):
        n = self.ndim
        remaining = n - axis
        a = alpha - 1.0 + 0.5 * (remaining - 1)
        z, w = symmetric_jacobi(nodes, a)
        if remaining == 1:
            # all leaf nodes act along one axis: fuse them into a single filter
            offset, taps = self._fused_taps(axis, radius * z, w)
            self._apply(arr, axis, offset, taps, region, out, weight)
            return
        for zi, wi in zip(z, w):
            if wi == 0.0:
                continue
            nxt = self._pass(arr, axis, radius * zi, region)
            inner = radius * math.sqrt(max(0.0, 1.0 - zi * zi))
            self._level(nxt, axis + 1, inner, weight * wi, alpha, nodes, region, out)


def nested_rule(d, alpha, nodes):
    """Explicit points y (M, d) and weights with M^alpha_t g(x) ~ sum_i w_i g(x - t y_i).

    Same nested Gauss-Jacobi construction as :class:`SplineShifter`, flattened.
    """
    pts = [np.zeros(0)]
    wts = [1.0]
    radii = [1.0]
    for axis in range(d):
        a = alpha - 1.0 + 0.5 * (d - axis - 1)
        z, w = symmetric_jacobi(nodes, a)
        new_pts, new_w, new_r = [], [], []
        for p, pw, pr in zip(pts, wts, radii):
            for zi, wi in zip(z, w):
                new_pts.append(np.append(p, pr * zi))
                new_w.append(pw * wi)
                new_r.append(pr * math.sqrt(max(0.0, 1.0 - zi * zi)))
        pts, wts, radii = new_pts, new_w, new_r
    return np.array(pts).reshape(-1, d), np.array(wts)
