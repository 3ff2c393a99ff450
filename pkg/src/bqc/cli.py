"""Command-line entry point ``bqc``.

Global flags may also be set through ``BQC_BUDGET``, ``BQC_SEED``, ``BQC_OUT``
and ``BQC_FORMAT``; a flag on the command line wins over the environment.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .archimedean import WeightFunction, joint_singular_integral, sigma_infinity
from .counting import (count_A, count_exceptional, count_NU, count_quadric_weighted,
                       count_tilde)
from .errors import BQCError
from .experiments import load_config, run_experiment
from .expsums import expsum, sigma_n_sum
from .forms import BiquadraticForm, QuadraticForm, load_form
from .padic import singular_series

DEFAULTS = {"budget": 1e11, "seed": 0, "out": None, "format": "csv"}


def _env(name, cast):
    raw = os.environ.get(f"BQC_{name.upper()}")
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(f"bqc: BQC_{name.upper()}={raw!r} is not a valid value")


def _resolve(args):
    casts = {"budget": float, "seed": int, "out": str, "format": str}
    for key, cast in casts.items():
        if getattr(args, key) is None:
            env = _env(key, cast)
            setattr(args, key, env if env is not None else DEFAULTS[key])
    if args.format not in ("csv", "json"):
        raise SystemExit(f"bqc: unknown format {args.format!r}")
    if args.budget <= 0:
        raise SystemExit("bqc: budget must be positive")
    return args


def _emit(args, rows, columns):
    if args.format == "json":
        text = json.dumps(rows, indent=1, sort_keys=True, default=str) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
        text = buf.getvalue()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _form(path, kind):
    F = load_form(path)
    if kind is not None and not isinstance(F, kind):
        want = "quadratic" if kind is QuadraticForm else "biquadratic"
        raise BQCError(f"{path}: expected a {want} form")
    return F


def _weight(args):
    if args.weight == "box":
        return WeightFunction.box(args.kappa)
    if args.eta is None:
        raise BQCError(f"--eta is required for the {args.weight} weight")
    return getattr(WeightFunction, args.weight)(args.eta)


def _vector(text, n):
    if text is None:
        return (0,) * n
    c = tuple(int(t) for t in text.replace(",", " ").split())
    if len(c) != n:
        raise BQCError(f"--c needs {n} integers, got {len(c)}")
    return c


# --- subcommands ---------------------------------------------------------

def cmd_count_quadric(args):
    F = _form(args.form, QuadraticForm)
    w = _weight(args)
    rows = []
    for B in args.B:
        rec = count_quadric_weighted(F, w, B, args.method, args.budget)
        rows.append({"form_id": rec.form_id, "B": B, "weight": w.kind, "method": rec.method,
                     "count": rec.count, "seconds": round(rec.elapsed, 6)})
    _emit(args, rows, ["form_id", "B", "method", "count", "seconds"])
    return 0


_BIQ = {"tilde": count_tilde, "A": count_A, "exceptional": count_exceptional}


def cmd_count_biquadratic(args):
    F = _form(args.form, BiquadraticForm)
    rec = _BIQ[args.what](F, args.X, args.Y, args.budget)
    rows = [{"form_id": rec.form_id, "X": args.X, "Y": args.Y, "method": f"{args.what}/{rec.method}",
             "count": rec.count, "seconds": round(rec.elapsed, 6)}]
    _emit(args, rows, ["form_id", "X", "Y", "method", "count", "seconds"])
    return 0


def cmd_count_nu(args):
    F = _form(args.form, BiquadraticForm)
    rows = []
    for B in args.B:
        rec = count_NU(F, B, args.route, budget=args.budget)
        rows.append({"form_id": rec.form_id, "B": B, "method": rec.method, "count": rec.count,
                     "seconds": round(rec.elapsed, 6)})
    _emit(args, rows, ["form_id", "B", "method", "count", "seconds"])
    return 0


def cmd_expsum(args):
    F = _form(args.form, QuadraticForm)
    c = _vector(args.c, F.n)
    rows = []
    for q in args.q:
        v = expsum(F, q, c, args.budget, args.method)
        rows.append({"form_id": F.form_id, "q": q, "c": " ".join(map(str, c)), "re": v.re,
                     "im": v.im, "abs": abs(v), "method": v.method})
    _emit(args, rows, ["form_id", "q", "c", "re", "im", "abs", "method"])
    return 0


def cmd_sigma_n(args):
    F = _form(args.form, QuadraticForm)
    c = _vector(args.c, F.n)
    rows = []
    for x in args.x:
        d = sigma_n_sum(F, x, c, args.budget)
        rows.append({"form_id": F.form_id, "x": x, "c": " ".join(map(str, c)), "total": d.total})
    _emit(args, rows, ["form_id", "x", "c", "total"])
    return 0


def cmd_singular_series(args):
    F = _form(args.form, QuadraticForm)
    est = singular_series(F, args.q_max, args.p_max, args.C, args.eps, args.budget)
    rows = []
    for e in (est, *est.alternatives):
        rows.append({"route": e.route, "p_max": e.params.get("p_max", ""),
                     "q_max": e.params.get("q_max", ""), "value": e.value,
                     "tail_bound": e.tail_bound, "exact": str(e.exact)})
    _emit(args, rows, ["route", "p_max", "q_max", "value", "tail_bound"])
    return 0


def _integral_rows(est):
    rows = [{"delta": d, "estimate": m, "stderr": s} for d, m, s in est.levels]
    rows.append({"delta": 0.0, "estimate": est.value, "stderr": est.mc_stderr})
    return rows


def cmd_sigma_infinity(args):
    F = _form(args.form, QuadraticForm)
    est = sigma_infinity(F, _weight(args), tuple(args.delta), args.samples, args.seed,
                         check=not args.no_check)
    _emit(args, _integral_rows(est), ["delta", "estimate", "stderr"])
    return 0


def cmd_joint_integral(args):
    F = _form(args.form, BiquadraticForm)
    est = joint_singular_integral(F, tuple(args.delta), args.samples, args.seed,
                                  check=not args.no_check)
    _emit(args, _integral_rows(est), ["delta", "estimate", "stderr"])
    return 0


def cmd_experiment(args):
    loaded = load_config(args.config)
    configs = loaded if isinstance(loaded, list) else [loaded]
    explicit_seed = args.seed_given
    ok = True
    lines = []
    for cfg in configs:
        if explicit_seed:
            cfg = replace(cfg, seed=args.seed)
        if args.out_given:
            cfg = replace(cfg, output=str(Path(args.out) / (cfg.name or cfg.kind)))
        rep = run_experiment(cfg)
        ok &= rep.passed
        verdicts = ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in rep.verdicts.items())
        lines.append(f"{cfg.label}: {'PASS' if rep.passed else 'FAIL'} ({verdicts or 'informational'})")
    print("\n".join(lines))
    return 0 if ok else 1


# --- parser --------------------------------------------------------------

def _add_weight(p):
    p.add_argument("--weight", choices=("box", "annular1", "annular2"), default="box")
    p.add_argument("--kappa", type=float, default=1.0, help="box radius")
    p.add_argument("--eta", type=float, default=None, help="annulus width")


def build_parser():
    top = argparse.ArgumentParser(prog="bqc", description="Counting zeros of quadratic and "
                                  "biquadratic forms and the densities that predict them.")
    top.add_argument("--budget", type=float, default=None, help="work budget (default 1e11)")
    top.add_argument("--seed", type=int, default=None, help="Monte Carlo seed (default 0)")
    top.add_argument("--out", default=None, help="output file (experiment: output directory)")
    top.add_argument("--format", choices=("csv", "json"), default=None)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-quadric", help="integer zeros of a quadratic form in a box")
    p.add_argument("form")
    p.add_argument("--B", type=int, nargs="+", required=True)
    p.add_argument("--method", choices=("slice", "naive"), default="slice")
    _add_weight(p)
    p.set_defaults(func=cmd_count_quadric)

    p = sub.add_parser("count-biquadratic", help="pair counts in an X by Y box")
    p.add_argument("form")
    p.add_argument("--X", type=int, required=True)
    p.add_argument("--Y", type=int, required=True)
    p.add_argument("--what", choices=tuple(_BIQ), default="A")
    p.set_defaults(func=cmd_count_biquadratic)

    p = sub.add_parser("count-nu", help="points of bounded height off the degenerate locus")
    p.add_argument("form")
    p.add_argument("--B", type=float, nargs="+", required=True)
    p.add_argument("--route", choices=("direct", "mobius"), default="direct")
    p.set_defaults(func=cmd_count_nu)

    p = sub.add_parser("expsum", help="complete exponential sums S_q(c)")
    p.add_argument("form")
    p.add_argument("--q", type=int, nargs="+", required=True)
    p.add_argument("--c", default=None, help="frequency vector, e.g. '1 0 -2'")
    p.add_argument("--method", choices=("crt", "direct"), default="crt")
    p.set_defaults(func=cmd_expsum)

    p = sub.add_parser("sigma-n", help="dyadic sums of |S_q(c)| over x/2 < q <= x")
    p.add_argument("form")
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--c", default=None)
    p.set_defaults(func=cmd_sigma_n)

    p = sub.add_parser("singular-series", help="Euler product and q-series with tail bounds")
    p.add_argument("form")
    p.add_argument("--q-max", type=int, default=20)
    p.add_argument("--p-max", type=int, default=50)
    p.add_argument("--C", type=float, default=4.0)
    p.add_argument("--eps", type=float, default=0.25)
    p.set_defaults(func=cmd_singular_series)

    for name, func, kind in (("sigma-infinity", cmd_sigma_infinity, "quadratic"),
                             ("joint-integral", cmd_joint_integral, "biquadratic")):
        p = sub.add_parser(name, help=f"real density of a {kind} form (Monte Carlo)")
        p.add_argument("form")
        p.add_argument("--samples", type=int, default=10**6)
        p.add_argument("--delta-schedule", "--delta", dest="delta", type=float, nargs="+",
                       default=[0.2, 0.1, 0.05, 0.025], help="decreasing mollifier widths")
        p.add_argument("--no-check", action="store_true",
                       help="skip the convergence check on the extrapolants")
        if name == "sigma-infinity":
            _add_weight(p)
        p.set_defaults(func=func)

    p = sub.add_parser("experiment", help="run an experiment or suite config")
    p.add_argument("config")
    p.set_defaults(func=cmd_experiment)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None or _env("seed", int) is not None
    args.out_given = args.out is not None or _env("out", str) is not None
    _resolve(args)
    try:
        return args.func(args)
    except (BQCError, ValueError, OSError) as exc:
        print(f"bqc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
