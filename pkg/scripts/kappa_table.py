"""Measured kappa against the lower-set bounds for Legendre and Chebyshev, d = 1 and 2."""

import argparse

from christoffel_ls.christoffel import WeightSpec
from christoffel_ls.harness import compare_kappa


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 40, 70, 100])
    ap.add_argument("--weight", default="mc", help="mc, opt or reg:theta")
    args = ap.parse_args(argv)
    spec = WeightSpec.parse(args.weight)
    print("family,d,index_set,n,kappa,bound,ratio")
    for d, kind in ((1, "td"), (2, "hc"), (2, "td")):
        for r in compare_kappa(["uniform", "chebyshev1"], d, kind, args.n, spec):
            print(f"{r['family']},{r['d']},{r['index_set']},{r['n']},{r['kappa']:.6g},{r['bound']:.6g},{r['ratio']:.4f}")


if __name__ == "__main__":
    main()
