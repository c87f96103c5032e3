"""L2 error against n for the builtin targets, with the best-approximation oracle alongside.

Uses Christoffel mixture sampling with the Chernoff sample count, d = 1 Legendre.
"""

import argparse

import numpy as np

from christoffel_ls.harness import ExperimentConfig, run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--targets", nargs="+", default=["runge", "exp_sum", "abs_power"])
    ap.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 30, 40])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--family", default="uniform")
    args = ap.parse_args(argv)
    print("target,n,m,l2_median,best_l2_median")
    for t in args.targets:
        cfg = ExperimentConfig(family=args.family, strategies=["mixture"], n_values=args.n,
                               m_rule="chernoff:0.5:0.1", trials=args.trials, target=t, seed=1)
        rows = list(run_experiment(cfg))
        for n in args.n:
            rs = [r for r in rows if r.n == n]
            l2 = np.median([r.l2_error for r in rs])
            best = np.median([r.best_approx_l2 for r in rs])
            print(f"{t},{n},{rs[0].m},{l2:.4e},{best:.4e}")


if __name__ == "__main__":
    main()
