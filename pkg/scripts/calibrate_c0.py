"""Calibrate the Plancherel constant C0 on several models and compare with 1/(2 pi C).

    python3 scripts/calibrate_c0.py --models h2 h3 h4 dr:1,2 dr:1,3
"""

import argparse
import time

from ctharm import radial as rd
from ctharm.config import resolve_model
from ctharm.density import build_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", nargs="+", default=["h2", "h3", "h4", "dr:1,2"])
    ap.add_argument("--bumps", nargs="+", type=float, default=[1.0, 2.0, 4.0])
    args = ap.parse_args()
    print(f"{'model':<20}{'C0':>22}{'1/(2 pi C)':>22}{'rel diff':>11}{'dispersion':>12}{'secs':>7}")
    for spec in args.models:
        t0 = time.perf_counter()
        model = build_model(resolve_model(spec))
        table = rd.build_c_table(model, s_max=max(args.bumps))
        C0, disp = rd.calibrate_C0(model, [rd.bump(s) for s in args.bumps], table, max_dispersion=1.0)
        pred = table.predicted_C0()
        print(f"{model.label:<20}{C0:>22.15g}{pred:>22.15g}{abs(C0 - pred) / pred:>11.2e}"
              f"{disp:>12.2e}{time.perf_counter() - t0:>7.1f}")


if __name__ == "__main__":
    main()
