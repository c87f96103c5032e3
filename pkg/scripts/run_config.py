"""Run a JSON experiment config, write rows and summary CSVs, print the summary."""

import argparse
import sys

from christoffel_ls.harness import ExperimentConfig, execute


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--out", default=None)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)
    cfg = ExperimentConfig.from_json(args.config)
    if args.workers:
        cfg.workers = args.workers
    _, summary, checks = execute(cfg, args.out or cfg.output)
    for r in summary:
        print(f"n={r['n']:4d} {r['strategy']:10s} m={r['m']:6d} cond med={r['cond_median']:.3g} "
              f"[{r['cond_q10']:.3g}, {r['cond_q90']:.3g}] l2 med={r['l2_error_median']:.3g} "
              f"fail={r['failure_rate']:.3f}")
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
