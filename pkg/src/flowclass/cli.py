"""Command-line interface: ``flowclass <command> [options]``.

Exit status is 0 on success, 1 for usage and input errors (bad flags,
unreadable or malformed model files, bounds of the wrong arity) and 2 when
an analysis fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .classify import ClassifySettings, classify_system, quick_classify
from .errors import BoundsError, FlowClassError, ModelParseError, UnknownModelError, UnknownParameterError
from .fixedpoints import find_fixed_points
from .modeldsl import compile_model, load_model
from .numerics import jacobian
from .orbits import search_periodic_orbits
from .report import fmt_point, render_report
from .structure import curl_magnitude, curl_to_gradient_ratio, sample_region, validate_bounds
from .vectorfield import BUILTIN_MODELS, DEFAULT_BOUNDS, builtin

COMMANDS = ("classify", "quick", "fixed-points", "orbits", "curl", "jacobian", "models")
# options whose values often start with '-'
_VALUE_FLAGS = ("--bounds", "--point")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser():
    p = _Parser(prog="flowclass", description="Classify autonomous ODE systems.")
    p.add_argument("--version", action="version", version=f"flowclass {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "models":
            sp.add_argument("--format", choices=("text", "json"), default="text")
            continue
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--builtin", metavar="NAME")
        src.add_argument("--model", metavar="PATH")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--bounds", metavar="LO:HI,...")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--threads", type=int, default=None)
        if name in ("classify", "quick"):
            sp.add_argument("--samples", type=int)
            sp.add_argument("--starts", type=int)
            sp.add_argument("--timeout", type=float)
        if name == "fixed-points":
            sp.add_argument("--starts", type=int, default=100)
        if name == "orbits":
            sp.add_argument("--timeout", type=float, default=10.0)
            sp.add_argument("--trajectories", type=int, default=50)
        if name in ("curl", "jacobian"):
            sp.add_argument("--point", metavar="V1,V2,...")
            if name == "curl":
                sp.add_argument("--samples", type=int, default=100)
    return p


def _join_values(argv):
    """Turn ``--bounds -2:2`` into ``--bounds=-2:2`` so argparse keeps the value."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def parse_bounds(text):
    try:
        pairs = [tuple(float(v) for v in part.split(":")) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse bounds {text!r}; expected lo:hi,lo:hi,...") from None
    if any(len(p) != 2 for p in pairs):
        raise UsageError(f"cannot parse bounds {text!r}; expected lo:hi,lo:hi,...")
    return pairs


def parse_point(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse point {text!r}; expected v1,v2,...") from None


def _overrides(items):
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--set {key}: {value!r} is not a number") from None
    return out


def _load(args):
    """Resolve the model source to ``(field, bounds or None)``."""
    overrides = _overrides(args.set)
    if args.builtin is not None:
        try:
            field = builtin(args.builtin, overrides)
        except (UnknownModelError, UnknownParameterError) as exc:
            raise UsageError(str(exc)) from None
        default = DEFAULT_BOUNDS[args.builtin]
    else:
        try:
            doc = load_model(args.model)
        except OSError as exc:
            raise UsageError(f"cannot read model file {args.model!r}: {exc.strerror}") from None
        except ModelParseError as exc:
            raise UsageError(f"{args.model}: {exc}") from None
        try:
            field, default = compile_model(doc, overrides, name=os.path.basename(args.model))
        except UnknownParameterError as exc:
            raise UsageError(str(exc)) from None
    if args.bounds is not None:
        bounds = parse_bounds(args.bounds)
    else:
        bounds = default
    if bounds is not None:
        try:
            bounds = validate_bounds(bounds, field.dim).tolist()
        except BoundsError as exc:
            raise UsageError(f"bounds: {exc}") from None
    return field, bounds


def _need_bounds(bounds):
    if bounds is None:
        raise UsageError("--bounds is required when the model file has no bounds")
    return bounds


def _need_point(args, field):
    if args.point is None:
        raise UsageError("--point is required")
    x = parse_point(args.point)
    if x.shape[0] != field.dim:
        raise UsageError(f"--point has {x.shape[0]} values, model has dimension {field.dim}")
    return x


def _clean(v):
    # no negative zeros in printed output
    return 0.0 if v == 0 else float(v)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=False)


def _fp_json(fp):
    return {
        "location": [_clean(v) for v in fp.location],
        "eigenvalues": [{"re": _clean(e.real), "im": _clean(e.imag)} for e in fp.eigenvalues],
        "type": fp.type.value,
        "residual": fp.residual,
    }


def _cmd_models(args, out):
    rows = [
        {"name": name, "dim": dim, "params": dict(defaults), "bounds": DEFAULT_BOUNDS[name]}
        for name, (_, dim, defaults) in BUILTIN_MODELS.items()
    ]
    if args.format == "json":
        out.write(_dump(rows) + "\n")
        return
    for r in rows:
        params = ", ".join(f"{k}={v:g}" for k, v in r["params"].items()) or "-"
        out.write(f"{r['name']:<11} dim={r['dim']}  {params}\n")


def _report_json(report):
    d = report.to_dict()
    d["fixed_points"] = [_fp_json(fp) for fp in report.fixed_points]
    return d


def _cmd_classify(args, out, quick=False):
    field, bounds = _load(args)
    bounds = _need_bounds(bounds)
    overrides = {}
    if args.samples is not None:
        overrides["n_samples"] = args.samples
    if args.starts is not None:
        overrides["n_starts"] = args.starts
    if args.timeout is not None:
        overrides["orbit_timeout"] = args.timeout
    overrides["threads"] = args.threads
    if quick:
        report = quick_classify(field, bounds, seed=args.seed, **overrides)
    else:
        report = classify_system(field, bounds, ClassifySettings(seed=args.seed), **overrides)
    if args.format == "json":
        out.write(_dump(_report_json(report)) + "\n")
    else:
        out.write(render_report(report) + "\n")


def _cmd_fixed_points(args, out):
    field, bounds = _load(args)
    fps = find_fixed_points(field, _need_bounds(bounds), n_starts=args.starts, seed=args.seed,
                            threads=args.threads)
    if args.format == "json":
        out.write(_dump([_fp_json(fp) for fp in fps]) + "\n")
        return
    out.write(f"Fixed Points: {len(fps)}\n")
    for fp in fps:
        eig = ", ".join(_fmt_complex(e) for e in fp.eigenvalues)
        out.write(f"  • {fp.type.description} at {fmt_point(fp.location)}  eigenvalues: {eig}\n")


def _fmt_complex(z):
    re, im = _clean(z.real), _clean(z.imag)
    if im == 0:
        return f"{re:.4g}"
    return f"{re:.4g}{'+' if im > 0 else '-'}{abs(im):.4g}i"


def _cmd_orbits(args, out):
    field, bounds = _load(args)
    bounds = _need_bounds(bounds)
    fps = find_fixed_points(field, bounds, seed=args.seed, threads=args.threads)
    search = search_periodic_orbits(field, bounds, n_trajectories=args.trajectories,
                                    seed=args.seed, timeout=args.timeout, fixed_points=fps)
    if args.format == "json":
        doc = {
            "periodic_orbits": [
                {
                    "period": o.period,
                    "is_stable": o.is_stable,
                    "stability": o.stability,
                    "multipliers": [{"re": _clean(m.real), "im": _clean(m.imag)}
                                    for m in o.multipliers],
                }
                for o in search.orbits
            ],
            "timed_out": search.timed_out,
        }
        out.write(_dump(doc) + "\n")
        return
    out.write(f"Periodic Orbits: {len(search.orbits)}\n")
    for o in search.orbits:
        mu = ", ".join(_fmt_complex(m) for m in o.multipliers)
        out.write(f"  • {o.stability} orbit, period {o.period:.6g}, multipliers: {mu}\n")
    if search.timed_out:
        out.write("  (search stopped at its timeout)\n")


def _cmd_curl(args, out):
    field, bounds = _load(args)
    if args.point is not None:
        x = _need_point(args, field)
        c, r = curl_magnitude(field, x), curl_to_gradient_ratio(field, x)
        doc = {"point": [_clean(v) for v in x], "curl": c, "curl_gradient_ratio": r}
    else:
        bounds = _need_bounds(bounds)
        pts = sample_region(bounds, args.samples, args.seed)
        curls = [curl_magnitude(field, p) for p in pts]
        doc = {"samples": len(pts), "mean_curl": float(np.mean(curls)),
               "max_curl": float(np.max(curls))}
    if args.format == "json":
        out.write(_dump(doc) + "\n")
    else:
        for k, v in doc.items():
            if k == "point":
                v = fmt_point(v)
            out.write(f"{k}: {v}\n")


def _cmd_jacobian(args, out):
    field, _ = _load(args)
    x = _need_point(args, field)
    J = [[_clean(v) for v in row] for row in jacobian(field, x)]
    if args.format == "json":
        out.write(_dump({"point": [_clean(v) for v in x], "jacobian": J}) + "\n")
    else:
        out.write(json.dumps(J) + "\n")


_DISPATCH = {
    "classify": _cmd_classify,
    "quick": lambda a, o: _cmd_classify(a, o, quick=True),
    "fixed-points": _cmd_fixed_points,
    "orbits": _cmd_orbits,
    "curl": _cmd_curl,
    "jacobian": _cmd_jacobian,
    "models": _cmd_models,
}


def run(argv=None, stdout=None, stderr=None):
    """Run one command; returns the exit status instead of exiting."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parser().parse_args(_join_values(argv))
        if getattr(args, "threads", None) is None and args.command != "models":
            args.threads = os.cpu_count() or 1
        _DISPATCH[args.command](args, stdout)
    except UsageError as exc:
        stderr.write(f"flowclass: error: {exc}\n")
        return 1
    except FlowClassError as exc:
        stderr.write(f"flowclass: analysis failed: {exc}\n")
        return 2
    return 0


def main():
    sys.exit(run())
