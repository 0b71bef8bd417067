"""Command-line driver.

Usage::

    epdkit <command> [key=value ...] [--config FILE] [--out DIR] [--force] [--strict]

Commands: phantom, forward, reconstruct, classify, zeros, verify.  Values
may be numbers, JSON literals, comma lists, or small arithmetic expressions
in ``pi``, ``sqrt`` and ``jzero(nu, m)`` (the m-th positive zero of J_nu).
A key given both on the command line and in the config file must agree.

Exit codes: 0 ok, 2 bad arguments, 3 numeric failure, 4 ill-posed data
(only with ``--strict``).  Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import ast
import hashlib
import json
import math
import operator
import os
import sys
import warnings

import numpy as np

from . import __version__
from .classify import AdmissibilityQuery, classify
from .grid import ConfigurationError, Field, Grid, read_field, write_field
from .kplane import random_frames, read_sinogram_csv, sinogram, uniform_frames, write_sinogram_csv
from .meanops import DomainError, OperatorSpec, UnsupportedRepresentationError, epd_mean_spatial, epd_mean_spectral
from .phantoms import PhantomError, PhantomSpec, render
from .reconstruct import (
    IllPosedWarning,
    InadmissibleRadiiError,
    ReconParams,
    epsilon_sweep,
    make_report,
    shifted_sinogram_invert,
    single_radius_invert,
    two_radius_invert,
    write_report,
)
from .specfun import bessel_zeros
from .verify import run_suite

EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_ILLPOSED = 0, 2, 3, 4
COMMANDS = ("phantom", "forward", "reconstruct", "classify", "zeros", "verify")


class ArgumentError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


class IllPosedError(RuntimeError):
    pass


# -- value parsing ---------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_FUNCS = {"sqrt": math.sqrt, "jzero": lambda nu, m: bessel_zeros(nu, int(m))[int(m) - 1]}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
        return _FUNCS[node.func.id](*[_eval_node(a) for a in node.args])
    raise ValueError("unsupported expression")


def parse_value(text):
    """Turn one ``key=value`` right-hand side into a Python value."""
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return _eval_node(ast.parse(text, mode="eval"))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError):
        pass
    if "," in text:
        return [parse_value(part) for part in text.split(",")]
    return text


def parse_pairs(pairs):
    out = {}
    for item in pairs:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ArgumentError(f"expected key=value, got {item!r}")
        if key in out:
            raise ArgumentError(f"key {key!r} given twice")
        out[key] = parse_value(val)
    return out


def merge_config(cli, file_cfg):
    """Union of both sources; a key present in both must carry the same value."""
    merged = dict(file_cfg)
    for key, val in cli.items():
        if key in merged and merged[key] != val:
            raise ArgumentError(f"key {key!r} conflicts: config file has {merged[key]!r}, command line has {val!r}")
        merged[key] = val
    return merged


def config_hash(command, cfg):
    blob = json.dumps({"command": command, "config": cfg}, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


class _Params:
    """Typed access to the merged config; unread keys are rejected at the end."""

    def __init__(self, cfg):
        self.cfg = dict(cfg)
        self.used = set()

    def get(self, key, default=None, kind=None):
        self.used.add(key)
        val = self.cfg.get(key, default)
        if val is None or kind is None:
            return val
        try:
            if kind is int:
                if float(val) != int(val):
                    raise ValueError
                return int(val)
            if kind is float:
                return float(val)
            if kind is str:
                return str(val)
            if kind is list:
                return list(val) if isinstance(val, (list, tuple)) else [val]
        except (TypeError, ValueError):
            raise ArgumentError(f"{key}={val!r} is not a valid {kind.__name__}") from None
        return val

    def require(self, key, kind=None):
        if key not in self.cfg:
            raise ArgumentError(f"missing required key {key!r}")
        return self.get(key, kind=kind)

    def check_unused(self):
        extra = sorted(set(self.cfg) - self.used)
        if extra:
            raise ArgumentError(f"unknown keys: {', '.join(extra)}")


# -- artifacts ---------------------------------------------------------------------


def write_pgm(path, values, comment=""):
    """16-bit binary PGM of a 2-D (or 1-D, as one row) array, linear min-max scaling."""
    a = np.asarray(values, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError("PGM export needs a 1-D or 2-D slice")
    a = np.nan_to_num(a, nan=0.0)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros_like(a) if hi == lo else (a - lo) / (hi - lo)
    data = np.round(scaled * 65535.0).astype(">u2")
    rows, cols = a.shape
    lines = ["P5"] + ([f"# {comment}"] if comment else []) + [f"# range {lo:.17g} {hi:.17g}", f"{cols} {rows}", "65535"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(data.tobytes())


def central_slice(f):
    """The x1-x2 slice through the middle of the remaining axes."""
    v = f.values.real if np.iscomplexobj(f.values) else f.values
    while v.ndim > 2:
        v = v[..., v.shape[-1] // 2]
    return v


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


class _Run:
    def __init__(self, command, cfg, out_dir):
        self.command = command
        self.cfg = cfg
        self.hash = config_hash(command, cfg)
        self.out = out_dir
        self.artifacts = []

    def path(self, name):
        os.makedirs(self.out, exist_ok=True)
        p = os.path.join(self.out, name)
        self.artifacts.append(p)
        return p

    def field(self, name, f):
        write_field(self.path(name + ".epdt"), f)
        write_pgm(self.path(name + ".pgm"), central_slice(f), f"config {self.hash}")

    def manifest(self):
        doc = {
            "command": self.command,
            "config": self.cfg,
            "config_hash": self.hash,
            "version": __version__,
            "artifacts": {os.path.basename(p): _sha256(p) for p in self.artifacts},
        }
        with open(os.path.join(self.out, "run.json"), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        return doc


# -- shared parameter groups ----------------------------------------------------------------

_PHANTOM_KEYS = {"gaussian": ("sigma", "center"), "ball": ("radius", "center", "edge"), "bump": ("radius",),
                 "psi": ("margin",), "zgrn": ("p",)}


def _grid(P, n_default=2, N_default=128, L_default=8.0):
    n = P.get("n", n_default, int)
    N = P.get("N", N_default, int)
    L = P.get("L", L_default, float)
    return Grid.cube(n, N, L)


def _phantom(P, **grid_defaults):
    kind = P.get("kind", "gaussian", str)
    if kind not in _PHANTOM_KEYS:
        raise ArgumentError(f"unknown phantom kind {kind!r}")
    grid = _grid(P, **grid_defaults)
    params = {}
    for key in _PHANTOM_KEYS[kind]:
        val = P.get(key)
        if val is not None:
            params[key] = val
    return PhantomSpec(kind, grid, params)


def _recon_params(P):
    return ReconParams(P.get("epsilon", 1e-4, float), P.get("floor", 0.05, float), P.get("max_band", None, float))


# -- commands -----------------------------------------------------------------------------


def cmd_phantom(P, run, opts):
    spec = _phantom(P)
    P.check_unused()
    f = render(spec)
    run.field("phantom", f)
    return {"phantom": spec.to_dict(), "sup": f.sup(), "analytic": spec.analytic()}


def cmd_forward(P, run, opts):
    op = P.get("op", "mean", str)
    if op == "mean":
        spec_ph = _phantom(P)
        alpha = P.get("alpha", 0.0, float)
        rho = P.require("rho", float)
        method = P.get("method", "spatial", str)
        P.check_unused()
        f = render(spec_ph)
        spec = OperatorSpec(spec_ph.dim, alpha, rho)
        if method == "spatial":
            g = epd_mean_spatial(f, spec)
        elif method == "spectral":
            g = epd_mean_spectral(f, spec)
        else:
            raise ArgumentError("method must be spatial or spectral")
        run.field("forward", Field(g.grid, np.nan_to_num(g.values, nan=0.0), "spatial"))
        return {"op": op, "nu": spec.nu, "method": method, "sup": float(np.nanmax(np.abs(g.values)))}
    if op != "sinogram":
        raise ArgumentError("op must be mean or sinogram")
    spec_ph = _phantom(P)
    n = spec_ph.dim
    k = P.get("k", n - 1, int)
    alpha = P.get("alpha", 1.0, float)
    rho = P.get("rho", 0.0, float)
    count = P.get("frames", 180 if (n, k) == (2, 1) else 8, int)
    seed = P.get("seed", -1 if (n, k) == (2, 1) else 0, int)
    oN = P.get("offsets_N", 2 * spec_ph.grid.samples[0], int)
    oL = P.get("offsets_L", 1.5 * spec_ph.grid.half_extent[0], float)
    analytic = P.get("analytic", False)
    P.check_unused()
    if seed == -1:
        if (n, k) != (2, 1):
            raise ArgumentError("seed=-1 (uniform angles) applies to n=2, k=1 only")
        frames = uniform_frames(count)
    else:
        frames = random_frames(n, k, count, seed)
    og = Grid.cube(n - k, oN, oL)
    src = spec_ph if analytic else render(spec_ph)
    s = sinogram(src, frames, og, rho=rho, alpha=alpha, seed=seed)
    write_sinogram_csv(run.path("sinogram.csv"), s, [f"config {run.hash}"])
    return {"op": op, "n": n, "k": k, "frames": count, "offsets": len(s.offsets), "sup": float(np.abs(s.values).max())}


def _load_field(P, key):
    path = P.get(key, None, str)
    return None if path is None else read_field(path)


def cmd_reconstruct(P, run, opts):
    mode = P.get("mode", "two", str)
    params = _recon_params(P)
    alpha = P.get("alpha", 0.0 if mode != "sinogram" else 1.0, float)
    # the exponent only feeds the classifier verdict in the report
    p_exp = P.get("p", 1.5 if mode == "sinogram" else 2.0, float)
    sweep = None
    if mode in ("single", "two"):
        data1, data2 = _load_field(P, "data"), _load_field(P, "data2")
        ref = _load_field(P, "reference")
        rho = P.require("rho", float)
        rho2 = P.get("rho2", None, float)
        if data1 is None:
            spec_ph = _phantom(P)
            ref = render(spec_ph)
            n = spec_ph.dim
        else:
            n = data1.grid.dim
        P.check_unused()
        if data1 is None:
            data1 = epd_mean_spectral(ref, OperatorSpec(n, alpha, rho))
        if mode == "single":
            query = AdmissibilityQuery(n, 0, alpha, p_exp, rho)
            rec = single_radius_invert(data1, OperatorSpec(n, alpha, rho), params)
        else:
            if rho2 is None:
                raise ArgumentError("mode=two needs rho2")
            if data2 is None:
                if ref is None:
                    raise ArgumentError("mode=two with data= also needs data2=")
                data2 = epd_mean_spectral(ref, OperatorSpec(n, alpha, rho2))
            query = AdmissibilityQuery(n, 0, alpha, p_exp, rho, rho2)
            rec = two_radius_invert(data1, data2, rho, rho2, alpha, params, force=opts.force)
            if ref is not None:
                sweep = epsilon_sweep(data1, data2, rho, rho2, alpha, ref, params, force=opts.force)
    elif mode == "sinogram":
        sino1 = P.get("sino", None, str)
        sino2 = P.get("sino2", None, str)
        ref = _load_field(P, "reference")
        rho = P.get("rho", 1.0, float)
        rho2 = P.get("rho2", math.sqrt(2.0), float)
        if sino1 is None:
            spec_ph = _phantom(P)
            count = P.get("frames", 180, int)
            oN = P.get("offsets_N", 2 * spec_ph.grid.samples[0], int)
            oL = P.get("offsets_L", 1.5 * spec_ph.grid.half_extent[0], float)
            P.check_unused()
            if spec_ph.dim != 2:
                raise ArgumentError("mode=sinogram is the n=2 strips pipeline")
            ref = render(spec_ph)
            frames = uniform_frames(count)
            og = Grid((oN,), oL)
            s1 = sinogram(ref, frames, og, rho=rho, alpha=alpha, seed=-1)
            s2 = None if rho2 is None else sinogram(ref, frames, og, rho=rho2, alpha=alpha, seed=-1)
            out_grid = ref.grid
        else:
            out_N = P.get("N", 128, int)
            out_L = P.get("L", None, float)
            P.check_unused()
            s1 = read_sinogram_csv(sino1)
            s2 = None if sino2 is None else read_sinogram_csv(sino2)
            rho, alpha = s1.meta["rho"], s1.meta["alpha"]
            rho2 = None if s2 is None else s2.meta["rho"]
            if s1.offset_grid is None:
                raise ArgumentError("sinogram offsets are not a regular grid")
            out_L = out_L or s1.offset_grid.half_extent[0] / math.sqrt(2.0)
            out_grid = ref.grid if ref is not None else Grid((out_N, out_N), out_L)
        query = AdmissibilityQuery(2, 1, alpha, p_exp, rho, rho2)
        rec = shifted_sinogram_invert(s1, params, s2=s2, out_grid=out_grid, force=opts.force)
        rec.diagnostics.pop("stage1_phi", None)
    else:
        raise ArgumentError("mode must be single, two or sinogram")
    verdict = classify(query)
    run.field("reconstruction", rec.field)
    report = make_report(verdict.verdict, verdict.clause, dict(run.cfg), reconstruction=rec, reference=ref,
                         sweep=sweep)
    report["diagnostics"] = rec.diagnostics
    report["ill_posed"] = rec.ill_posed
    report["config_hash"] = run.hash
    write_report(run.path("report.json"), report)
    if opts.strict and rec.ill_posed:
        raise IllPosedError(f"{100 * rec.discarded_band_energy:.1f}% of the data energy was discarded")
    return {k: report[k] for k in ("verdict", "clause", "errors", "discarded_band_energy")}


def cmd_classify(P, run, opts):
    q = AdmissibilityQuery(P.require("n", int), P.get("k", 0, int), P.get("alpha", 0.0, float),
                           P.require("p", float), P.get("rho", None, float), P.get("rho2", None, float))
    P.check_unused()
    return classify(q).to_dict()


def cmd_zeros(P, run, opts):
    nu = P.require("nu", float)
    m = P.get("m", 10, int)
    P.check_unused()
    if m < 1:
        raise ArgumentError("m must be at least 1")
    table = bessel_zeros(nu, m)
    return {"nu": nu, "zeros": [float(z) for z in table.as_array()]}


def cmd_verify(P, run, opts):
    suite = P.get("suite", "all", str)
    P.check_unused()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllPosedWarning)
        result = run_suite(suite)
    if opts.out is not None:
        with open(run.path("verify.json"), "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if not result["passed"]:
        raise NumericFailure(json.dumps(result, sort_keys=True))
    return result


_HANDLERS = {"phantom": cmd_phantom, "forward": cmd_forward, "reconstruct": cmd_reconstruct,
             "classify": cmd_classify, "zeros": cmd_zeros, "verify": cmd_verify}
_WRITES = {"phantom", "forward", "reconstruct"}


class _Parser(argparse.ArgumentParser):
    # report usage errors through the JSON error channel instead of exiting
    def error(self, message):
        raise ArgumentError(message)


def _parser():
    ap = _Parser(prog="epdkit", description="EPD means, shifted k-plane transforms and inversion.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("pairs", nargs="*", metavar="key=value")
    ap.add_argument("--config", help="JSON file with additional key/value settings")
    ap.add_argument("--out", help="output directory (default: current directory)")
    ap.add_argument("--force", action="store_true", help="reconstruct even from inadmissible radius pairs")
    ap.add_argument("--strict", action="store_true", help="treat ill-posed data as an error (exit 4)")
    return ap


def _fail(code, exc):
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, NumericFailure):
        try:
            doc = {"error": "NumericFailure", "result": json.loads(str(exc)), "exit_code": code}
        except json.JSONDecodeError:
            pass
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


def main(argv=None):
    ap = _parser()
    try:
        opts = ap.parse_args(argv)
    except ArgumentError as exc:
        return _fail(EXIT_ARGS, exc)
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else EXIT_ARGS
    try:
        cli_cfg = parse_pairs(opts.pairs)
        file_cfg = {}
        if opts.config:
            try:
                with open(opts.config) as fh:
                    file_cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ArgumentError(f"cannot read config file: {exc}") from exc
            if not isinstance(file_cfg, dict):
                raise ArgumentError("config file must hold a JSON object")
        cfg = merge_config(cli_cfg, file_cfg)
        run = _Run(opts.command, cfg, opts.out or ".")
        with warnings.catch_warnings():
            # ill-posedness is reported in the output (and is an error with --strict)
            warnings.simplefilter("ignore", IllPosedWarning)
            result = _HANDLERS[opts.command](_Params(cfg), run, opts)
        if opts.command in _WRITES:
            run.manifest()
            result = dict(result, config_hash=run.hash, out=run.out)
    except (ArgumentError, ConfigurationError, PhantomError, DomainError, UnsupportedRepresentationError) as exc:
        return _fail(EXIT_ARGS, exc)
    except IllPosedError as exc:
        return _fail(EXIT_ILLPOSED, exc)
    except (NumericFailure, InadmissibleRadiiError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except ValueError as exc:
        return _fail(EXIT_ARGS, exc)
    json.dump(result, sys.stdout, indent=2, sort_keys=True, default=_default)
    sys.stdout.write("\n")
    return EXIT_OK


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


if __name__ == "__main__":
    sys.exit(main())
