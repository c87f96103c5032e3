"""Command-line entry point: ``python -m christoffel_ls <command> ...``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .christoffel import WeightSpec, kappa_w
from .harness import ExperimentConfig, builtin_target, compare_kappa, execute, index_set_for_n
from .index_sets import parse_index_set
from .least_squares import Estimator, RedrawExhausted, error_report, fit
from .measures import MeasureFamily1D, TensorMeasure
from .orthopoly import OrthoBasis
from .sampling import MC, STRATEGIES, SamplePlan, draw_plan


def _basis(args) -> OrthoBasis:
    fam = MeasureFamily1D.from_name(args.family)
    if getattr(args, "n", None):
        kind = args.index_set.split(":")[0]
        S = index_set_for_n(kind, args.d, args.n)
    else:
        S = parse_index_set(args.index_set, args.d)
    return OrthoBasis(TensorMeasure.isotropic(fam, args.d), S)


def _add_basis_args(p, index_default="td:5"):
    p.add_argument("--family", default="uniform")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--index-set", default=index_default, help="tp:p, td:p, hc:p, hcsum:p [:a=a1,...]")


def _print_record(rec: dict) -> None:
    for k, v in rec.items():
        print(f"{k}={v}")


def cmd_basis(args) -> int:
    B = _basis(args)
    print(f"family={B.measure.factors[0].name} d={B.d} n={B.n}")
    pts = np.array([[float(v) for v in args.at.split(",")]]) if args.at else None
    vals = B.evaluate(pts)[0] if pts is not None else None
    for i, nu in enumerate(B.index_set):
        line = f"{i}\t{nu}"
        if vals is not None:
            line += f"\t{vals[i]:.16g}"
        print(line)
    return 0


def cmd_kappa(args) -> int:
    B = _basis(args)
    spec = WeightSpec.parse(args.weight)
    grid = None
    if args.grid:
        grid = np.loadtxt(args.grid, delimiter=",", ndmin=2)
    res = kappa_w(B, spec, search_grid=grid)
    n = B.n
    print(f"n={n}")
    print(f"weight={spec}")
    print(f"kappa_w={res.value!r}")
    print(f"censored={res.censored}")
    print("argmax=" + ("none" if res.argmax is None else ",".join(repr(float(v)) for v in res.argmax)))
    print(f"ref_n={n}")
    print(f"ref_n2={n * n}")
    print(f"ref_n_log3_log2={n ** (math.log(3) / math.log(2))!r}")
    return 0


def _write_points(path, plan: SamplePlan) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(plan.d)] + ["weight"])
        for x, wt in zip(plan.points, plan.weights):
            w.writerow([repr(float(v)) for v in x] + [repr(float(wt))])


def cmd_sample(args) -> int:
    B = _basis(args)
    spec = WeightSpec.monte_carlo() if args.strategy == MC else WeightSpec.parse(args.weight)
    plan = draw_plan(args.strategy, B, spec, args.m, args.seed)
    _write_points(args.out, plan)
    print(f"wrote {plan.m} points to {args.out}")
    return 0


def _read_samples(path, d: int):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path} has no rows")
    x = np.array([[float(r[f"x{k + 1}"]) for k in range(d)] for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    w = np.array([float(r["weight"]) for r in rows]) if "weight" in rows[0] else np.ones(len(rows))
    return x, y, w


def cmd_fit(args) -> int:
    B = _basis(args)
    est = Estimator.parse(args.estimator)
    target = None
    if Path(args.function).suffix == ".csv":
        x, y, w = _read_samples(args.function, B.d)
        plan = SamplePlan(x, w, "file", args.seed, WeightSpec.monte_carlo())
        redraw = None
    else:
        target = builtin_target(args.function, B, args.seed)
        spec = WeightSpec.monte_carlo() if args.strategy == MC else WeightSpec.parse(args.weight)
        m = args.m or 3 * B.n

        def redraw(attempt):
            p = draw_plan(args.strategy, B, spec, m, args.seed + attempt)
            return p, target(p.points)

        plan, y = redraw(0)
    try:
        res = fit(B, plan, y, est, redraw=redraw)
    except RedrawExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rec = res.as_record()
    if target is not None:
        q = max(2 * max(B.index_set.max_degrees) + 20, 40)
        rep = error_report(B, res, target, q)
        rec.update(l2_error=rep.l2_error, linf_error=rep.linf_error, best_approx_l2=rep.best_approx_l2)
    _print_record(rec)
    out = args.coefficients or "coefficients.csv"
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"nu{k + 1}" for k in range(B.d)] + ["coefficient"])
        for nu, c in zip(B.index_set, res.coefficients):
            w.writerow(list(nu) + [repr(float(c))])
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    out = args.out or cfg.output
    _, summary, checks = execute(cfg, out, append=args.append)
    for row in summary:
        print(
            f"n={row['n']} strategy={row['strategy']} m={row['m']} "
            f"cond_median={row['cond_median']:.4g} failure_rate={row['failure_rate']:.3f} "
            f"l2_median={row['l2_error_median']:.3g}"
        )
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def cmd_compare(args) -> int:
    if not args.kappa:
        print("nothing to compare; pass --kappa", file=sys.stderr)
        return 2
    ns = [int(v) for v in args.n.split(",")]
    rows = compare_kappa(args.families.split(","), args.d, args.index_kind, ns)
    cols = ["family", "d", "index_set", "n", "kappa", "bound", "ratio", "censored"]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([r[c] for c in cols])
    bad = [r for r in rows if not math.isnan(r["ratio"]) and r["ratio"] > 1 + 1e-6]
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="christoffel-ls", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="print the ordered index list and spot evaluations")
    _add_basis_args(p)
    p.add_argument("--at", help="comma-separated point at which to evaluate every basis function")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("kappa", help="kappa_w = sup w K and reference growth lines")
    _add_basis_args(p)
    p.add_argument("--weight", default="mc", help="mc | opt | reg:theta")
    p.add_argument("--grid", help="CSV of search points (one point per row) instead of the default grid")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("sample", help="draw a weighted sample plan")
    _add_basis_args(p)
    p.add_argument("--strategy", choices=STRATEGIES, default="mixture")
    p.add_argument("--weight", default="reg:0.5")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="points.csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="weighted least-squares fit")
    _add_basis_args(p)
    p.add_argument("--function", required=True, help="builtin target name or a CSV with x1..xd,[weight,]y")
    p.add_argument("--strategy", choices=STRATEGIES, default="mixture")
    p.add_argument("--weight", default="reg:0.5")
    p.add_argument("--estimator", default="plain")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int, help="use the smallest set of the --index-set kind with at least n members")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coefficients", help="output CSV for coefficients (default coefficients.csv)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("experiment", help="run a JSON-configured sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--append", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", help="comparison tables")
    p.add_argument("--kappa", action="store_true")
    p.add_argument("--families", default="uniform,chebyshev1")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--index-kind", default="hc")
    p.add_argument("--n", default="10,20,40,70,100")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OverflowError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
