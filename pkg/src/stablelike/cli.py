"""Command-line surface: CSV kernel tables and JSON verification reports.

All output is deterministic given the flags and seed: floats are printed with
17 significant digits, JSON field order is fixed, and files are written
atomically (temp file in the target directory, then rename).

Exit codes: 0 success (and verification PASS), 1 verification FAIL (the
report is still written), 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .counterexample import (CounterexampleConfig, corollary_report,
                             lemma21_verify, lemma23_es1_check,
                             lemma23_es2_check, theorem_verify)
from .errors import StableLikeError
from .kernel import KernelEvaluator
from .perturb import (CauchyBase, GridBase, PerturbationProblem,
                      PerturbationSpec, j_decomposition, mc_gradient,
                      series_gradient)
from .symbol import (Alpha, BumpShape, Constant, LevySymbol,
                     kappa_spec_from_json, validate_kappa_spec)


class UsageError(Exception):
    """Invalid flag values; reported on stderr with exit code 2."""


def _fmt(v: float) -> str:
    return "%.17g" % float(v)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-stablelike-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)


def _json_text(obj) -> str:
    def default(v):
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        raise TypeError(f"not serializable: {type(v)}")
    return json.dumps(obj, indent=2, default=default) + "\n"


def parse_grid(text: str) -> np.ndarray:
    """start:stop:step with inclusive endpoints (within 1e-12)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"non-numeric grid component in {text!r}") from exc
    if step <= 0 or stop < start:
        raise UsageError("grid needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-12))
    xs = start + step * np.arange(n + 1)
    if abs(xs[-1] - stop) <= 1e-12:
        xs[-1] = stop
    return xs


def _parse_alpha(value: float) -> Alpha:
    try:
        return Alpha(value)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_kappa(path: str | None, alpha: Alpha):
    if path is None:
        return Constant(1.0)
    try:
        with open(path) as fh:
            spec = kappa_spec_from_json(json.load(fh))
    except OSError as exc:
        raise UsageError(f"cannot read kappa spec: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid kappa spec: {exc}") from exc
    result = validate_kappa_spec(spec, alpha)
    if not result.ok:
        raise UsageError("kappa spec rejected: " + "; ".join(result.messages))
    return spec


def _bump_shape(name: str) -> BumpShape:
    try:
        return BumpShape(name)
    except ValueError as exc:
        raise UsageError(f"unknown bump shape {name!r}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_symbol(args) -> int:
    alpha = _parse_alpha(args.alpha)
    kappa = _load_kappa(args.kappa, alpha)
    sym = LevySymbol(alpha, kappa)
    xi = parse_grid(args.xi_grid)
    vals = sym(xi)
    lines = ["xi,psi"]
    lines += [f"{_fmt(x)},{_fmt(v)}" for x, v in zip(xi, vals)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_kernel(args) -> int:
    alpha = _parse_alpha(args.alpha)
    kappa = _load_kappa(args.kappa, alpha)
    if args.t <= 0:
        raise UsageError("t must be positive")
    ev = KernelEvaluator(LevySymbol(alpha, kappa), t=args.t,
                         target=args.tolerance)
    xs = parse_grid(args.x_grid)
    dens, grads, err_d, err_g = ev.density_grid(xs)
    if args.format == "json":
        rows = [{"x": float(x), "density": float(d), "gradient": float(g),
                 "abs_error_estimate": float(max(ed, eg))}
                for x, d, g, ed, eg in zip(xs, dens, grads, err_d, err_g)]
        _emit(_json_text(rows), args.out)
    else:
        lines = ["x,density,gradient,abs_error_estimate"]
        lines += [f"{_fmt(x)},{_fmt(d)},{_fmt(g)},{_fmt(max(ed, eg))}"
                  for x, d, g, ed, eg in zip(xs, dens, grads, err_d, err_g)]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _make_problem(alpha: Alpha, a: float, eps: float, shape: BumpShape,
                  x: float, target: float):
    f_spec = PerturbationSpec.bump_pair(a, eps, shape)
    if alpha.value == 1.0:
        base = CauchyBase()
    else:
        ev = KernelEvaluator(LevySymbol(alpha, Constant(1.0)), target=target)
        base = GridBase(ev, abs(x) + 25.0 * (a + eps), tol=target)
    return PerturbationProblem(base, f_spec, alpha)


def _cmd_perturb(args) -> int:
    alpha = _parse_alpha(args.alpha)
    if args.eps <= 0 or args.a <= 0:
        raise UsageError("bump position and width must be positive")
    shape = _bump_shape(args.bump)
    x = args.x if args.x is not None else args.z0 + args.a
    prob = _make_problem(alpha, args.a, args.eps, shape, x, args.tolerance)
    split = j_decomposition(prob, x)
    grad = series_gradient(prob, x)
    est, se = mc_gradient(prob, x, args.mc_samples, args.seed)
    discrepancies = {"mc": [abs(est - grad), se]}
    if alpha.value == 1.0 and abs(x) <= 1e5:
        from .symbol import SinglePairBump
        ev = KernelEvaluator(
            LevySymbol(alpha, SinglePairBump(1.0, shape, args.a, args.eps)),
            target=args.tolerance)
        discrepancies["fourier"] = abs(ev.gradient(x) - grad)
    report = {"lambda": prob.lam, "K_max": prob.k_max, "x": x,
              "J0": split.j0, "J1": split.j1, "J2": split.j2,
              "total": split.total,
              "route_discrepancies": discrepancies}
    _emit(_json_text(report), args.out)
    return 0


def _cmd_counterexample(args) -> int:
    alpha = _parse_alpha(args.alpha)
    try:
        config = CounterexampleConfig(
            alpha=alpha, z0=args.z0, eps=args.eps,
            bump=_bump_shape(args.bump), A=args.A, levels=args.levels,
            target=args.tolerance, mc_samples=args.mc_samples,
            seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.mode == "lemma21":
        report = lemma21_verify(config, args.a if args.a else args.A)
        payload = report.to_json()
        passed = report.passed
    elif args.mode == "theorem":
        report = theorem_verify(config)
        payload = report.to_json()
        passed = report.passed
    elif args.mode == "corollary":
        a_list = [float(v) for v in args.a_list.split(",")] if args.a_list else []
        payload = corollary_report(alpha, a_list, z0=args.z0, eps=args.eps,
                                   bump=_bump_shape(args.bump),
                                   mc_samples=args.mc_samples, seed=args.seed)
        passed = payload["pass"]
    elif args.mode == "es1":
        f_spec = PerturbationSpec.cascade_layers(args.A, args.eps,
                                                 args.levels,
                                                 _bump_shape(args.bump))
        report = lemma23_es1_check(config, f_spec)
        payload = report.to_json()
        passed = report.passed
    else:  # es2
        f_spec = PerturbationSpec.cascade_layers(args.A, args.eps,
                                                 args.levels,
                                                 _bump_shape(args.bump))
        radius = max(a + e for a, e in f_spec.pairs) if f_spec.pairs else 2.0
        report = lemma23_es2_check(config, f_spec, radius)
        payload = report.to_json()
        passed = report.passed
    _emit(_json_text(payload), args.out)
    return 0 if passed else 1


_BOUND_POWERS = {"two-sided": 1.0, "grad": 1.0, "sharp": 2.0}


def _cmd_bounds(args) -> int:
    alpha = _parse_alpha(args.alpha)
    kappa = _load_kappa(args.kappa, alpha)
    if args.t <= 0:
        raise UsageError("t must be positive")
    ev = KernelEvaluator(LevySymbol(alpha, kappa), t=args.t,
                         target=args.tolerance)
    xs = parse_grid(args.x_grid)
    dens, grads, _, _ = ev.density_grid(xs)
    power = _BOUND_POWERS[args.variant] + alpha.value
    weight = (1.0 + np.abs(xs)) ** power
    value = dens if args.variant == "two-sided" else np.abs(grads)
    lines = ["x,value,weighted_ratio"]
    lines += [f"{_fmt(x)},{_fmt(v)},{_fmt(v * w)}"
              for x, v, w in zip(xs, value, weight)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p, t_flag=True):
    p.add_argument("--alpha", type=float, required=True,
                   help="stability index, 0 < alpha < 2")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-9)
    if t_flag:
        p.add_argument("--t", type=float, default=1.0)
        p.add_argument("--kappa", default=None,
                       help="path to a kappa-spec JSON (default: constant 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablelike",
        description="Heat kernels and gradient estimates of one-dimensional "
                    "stable-like operators")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("symbol", help="tabulate the Levy symbol")
    _add_common(p)
    p.add_argument("--xi-grid", required=True, help="start:stop:step")
    p.set_defaults(func=_cmd_symbol)

    p = sub.add_parser("kernel", help="tabulate density and gradient")
    _add_common(p)
    p.add_argument("--x-grid", required=True, help="start:stop:step")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("perturb",
                       help="compound-Poisson route for a single bump pair")
    _add_common(p, t_flag=False)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--bump", default="indicator",
                   choices=("indicator", "smooth"))
    p.add_argument("--z0", type=float, default=-0.5)
    p.add_argument("--x", type=float, default=None,
                   help="evaluation point (default z0 + a)")
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("counterexample",
                       help="verification pipeline reports")
    p.add_argument("mode",
                   choices=("lemma21", "theorem", "corollary", "es1", "es2"))
    _add_common(p, t_flag=False)
    p.add_argument("--z0", type=float, default=-0.5)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--bump", default="indicator",
                   choices=("indicator", "smooth"))
    p.add_argument("--A", type=float, default=10.0)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--a", type=float, default=None,
                   help="bump position for lemma21 (default --A)")
    p.add_argument("--a-list", default=None,
                   help="comma-separated positions for corollary")
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("bounds", help="weighted-ratio sweeps")
    p.add_argument("variant", choices=("two-sided", "grad", "sharp"))
    _add_common(p)
    p.add_argument("--x-grid", required=True, help="start:stop:step")
    p.set_defaults(func=_cmd_bounds)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StableLikeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
