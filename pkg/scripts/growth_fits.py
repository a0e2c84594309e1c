"""Log-log growth of |c(lambda)|^-1 at small and large lambda, with the fitted slopes.

    python3 scripts/growth_fits.py --models h2 h4 dr:1,2 --csv growth.csv
"""

import argparse

import numpy as np

from ctharm import spectral as sp
from ctharm.config import resolve_model
from ctharm.density import build_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", nargs="+", default=["h2", "h3", "h4", "dr:1,2"])
    ap.add_argument("--csv", help="also write lambda, |c|^-1 per model to this file")
    args = ap.parse_args()
    rows = []
    for spec in args.models:
        model = build_model(resolve_model(spec))
        fit = sp.c_growth_check(model)
        flag = "" if fit.alpha_covered else "  (|alpha| = 1/2, outside the growth hypotheses)"
        print(f"{model.label:<20} small slope {fit.small_slope:.4f} (expect 1)   "
              f"large slope {fit.large_slope:.4f} (expect {fit.expected_large:.2f}){flag}")
        if args.csv:
            lam = np.geomspace(1e-3, 500.0, 60)
            c, _ = sp.c_values(model, lam)
            rows += [(model.label, l, 1 / abs(v)) for l, v in zip(lam, c)]
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("model,lambda,inv_abs_c\n")
            fh.writelines(f"{m},{l:.17g},{v:.17g}\n" for m, l, v in rows)


if __name__ == "__main__":
    main()
