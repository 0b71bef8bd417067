"""Test functions with known transforms.

Each :class:`PhantomSpec` can be rendered on a grid and evaluated
analytically at arbitrary points.  The analytic evaluator is what the
k-plane routines use for the oscillatory phantom, whose plane integrals only
converge in an averaged sense.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, apodization_window
from .specfun import gamma_fn, normalized_bessel

__all__ = ["PhantomSpec", "PhantomError", "render", "evaluate", "KINDS", "unit_ball_volume"]

KINDS = ("gaussian", "ball", "bump", "psi", "zgrn")

_DEFAULTS = {
    "gaussian": {"sigma": 1.0, "center": None},
    "ball": {"radius": 1.0, "center": None, "edge": 0.0},
    "bump": {"radius": 1.0},
    "psi": {"margin": 0.15},
    "zgrn": {"p": 2.0},
}


class PhantomError(ValueError):
    pass


def unit_ball_volume(d):
    return math.pi ** (0.5 * d) / gamma_fn(0.5 * d + 1.0)


@dataclass(frozen=True)
class PhantomSpec:
    """A phantom kind, its parameters and the grid it is rendered on.

    Kinds and parameters:

    * ``gaussian``: ``sigma``, ``center``; exp(-|x - c|^2 / sigma^2)
    * ``ball``: ``radius``, ``center``, ``edge``; indicator of a ball, with an
      optional linear ramp of width ``edge`` straddling the boundary
    * ``bump``: ``radius``; exp(1 - 1/(1 - |x|^2/R^2)) inside the ball
    * ``psi``: ``margin``; j_{n/2-1}(|x|), apodized when rendered
    * ``zgrn``: ``p``; (2 + |x|)^(-n/p) / log(2 + |x|)
    """

    kind: str
    grid: Grid
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PhantomError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise PhantomError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged = dict(_DEFAULTS[self.kind])
        merged.update(self.params)
        if "center" in merged:
            c = merged["center"]
            c = np.zeros(self.grid.dim) if c is None else np.asarray(c, dtype=float).reshape(-1)
            if c.shape != (self.grid.dim,):
                raise PhantomError("center has the wrong dimension")
            merged["center"] = tuple(float(x) for x in c)
        object.__setattr__(self, "params", merged)
        self._validate()

    # parameter checks ---------------------------------------------------
    def _validate(self):
        p, L = self.params, np.array(self.grid.half_extent)
        if self.kind == "gaussian":
            if not p["sigma"] > 0:
                raise PhantomError("sigma must be positive")
            if np.any(np.abs(p["center"]) >= L):
                raise PhantomError("gaussian center lies outside the grid")
        elif self.kind == "ball":
            if not p["radius"] > 0 or p["edge"] < 0:
                raise PhantomError("ball radius must be positive and edge non-negative")
            if np.any(np.abs(p["center"]) + p["radius"] + 0.5 * p["edge"] >= L):
                raise PhantomError("ball does not fit inside the grid")
        elif self.kind == "bump":
            if not 0 < p["radius"] < L.min():
                raise PhantomError("bump radius must be positive and inside the grid")
        elif self.kind == "psi":
            if not 0.1 <= p["margin"] < 0.5:
                raise PhantomError("psi needs a window margin in [0.1, 0.5)")
        elif self.kind == "zgrn":
            if not p["p"] >= 1:
                raise PhantomError("zgrn exponent p must be >= 1")

    @property
    def dim(self):
        return self.grid.dim

    @property
    def support_radius(self):
        """Radius (about the origin) outside which the phantom is below 1e-17, or inf."""
        p = self.params
        if self.kind == "gaussian":
            return float(np.linalg.norm(p["center"]) + p["sigma"] * math.sqrt(40.0))
        if self.kind == "ball":
            return float(np.linalg.norm(p["center"]) + p["radius"] + 0.5 * p["edge"])
        if self.kind == "bump":
            return float(p["radius"])
        return math.inf

    # evaluation ---------------------------------------------------------
    def evaluate(self, x):
        """Analytic values at points ``x`` of shape (..., n); no window applied."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise PhantomError(f"points must have trailing dimension {self.dim}")
        p = self.params
        if "center" in p:
            x = x - np.asarray(p["center"])
        r = np.sqrt(np.sum(x * x, axis=-1))
        if self.kind == "gaussian":
            return np.exp(-((r / p["sigma"]) ** 2))
        if self.kind == "ball":
            R, e = p["radius"], p["edge"]
            if e == 0:
                return (r < R).astype(float)
            return np.clip((R + 0.5 * e - r) / e, 0.0, 1.0)
        if self.kind == "bump":
            s = (r / p["radius"]) ** 2
            out = np.zeros_like(r)
            inside = s < 1
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
            return out
        if self.kind == "psi":
            return normalized_bessel(0.5 * self.dim - 1.0, r)
        # zgrn
        return (2.0 + r) ** (-self.dim / p["p"]) / np.log(2.0 + r)

    def plane_integral(self, v, t):
        """Closed-form k-plane integral over {v^T x = t}, where one is known.

        ``v`` is n x (n-k) with orthonormal columns, ``t`` has shape (..., n-k).
        Returns None for kinds without a closed form.
        """
        v = np.asarray(v, dtype=float)
        n, d = v.shape
        k = n - d
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "gaussian":
            s = t - np.asarray(p["center"]) @ v
            return (math.pi * p["sigma"] ** 2) ** (0.5 * k) * np.exp(-np.sum(s * s, axis=-1) / p["sigma"] ** 2)
        if self.kind == "ball" and p["edge"] == 0:
            s = t - np.asarray(p["center"]) @ v
            h2 = p["radius"] ** 2 - np.sum(s * s, axis=-1)
            return unit_ball_volume(k) * np.where(h2 > 0, np.abs(h2), 0.0) ** (0.5 * k)
        if self.kind == "psi":
            c = 2.0**k * math.pi ** (0.5 * k) * gamma_fn(0.5 * n) / gamma_fn(0.5 * (n - k))
            return c * normalized_bessel(0.5 * (n - k) - 1.0, np.sqrt(np.sum(t * t, axis=-1)))
        return None

    def analytic(self):
        """Known transforms, as a JSON-friendly description."""
        p, n = self.params, self.dim
        if self.kind == "gaussian":
            return {
                "fourier": f"(pi sigma^2)^(n/2) exp(-sigma^2 |xi|^2 / 4) exp(i c.xi), sigma={p['sigma']}",
                "kplane": "(pi sigma^2)^(k/2) exp(-|t - v^T c|^2 / sigma^2)",
                "spherical_mean_n3": "exp(-(r^2+t^2)) sinh(2rt)/(2rt) for sigma=1, c=0",
            }
        if self.kind == "ball":
            return {"kplane": "vol(B^k) (R^2 - |t - v^T c|^2)_+^(k/2)", "chord_n2": "2 sqrt(R^2 - s^2)"}
        if self.kind == "psi":
            return {
                "fourier": "surface measure on |xi| = 1",
                "mean_eigenvalue": f"j_(n/2+alpha-1)(rho), n={n}",
                "kplane": "2^k pi^(k/2) Gamma(n/2)/Gamma((n-k)/2) j_((n-k)/2-1)(|t|)",
            }
        return {}

    # serialization --------------------------------------------------------
    def to_dict(self):
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {
            "kind": self.kind,
            "params": params,
            "grid": {"samples": list(self.grid.samples), "half_extent": list(self.grid.half_extent)},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        try:
            g = d["grid"]
            grid = Grid(tuple(g["samples"]), tuple(g["half_extent"]))
            return cls(d["kind"], grid, dict(d.get("params", {})))
        except (KeyError, TypeError) as exc:
            raise PhantomError(f"malformed phantom description: {exc}") from exc

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def evaluate(spec, x):
    return spec.evaluate(x)


def render(spec):
    """Sample a phantom on its grid; psi is multiplied by the raised-cosine window."""
    g = spec.grid
    pts = np.stack(g.coords(), axis=-1)
    vals = spec.evaluate(pts)
    if spec.kind == "psi":
        vals = vals * apodization_window(g, spec.params["margin"])
    meta = {"phantom": spec.to_dict(), "analytic": spec.analytic()}
    return Field(g, vals, "spatial", meta)
