#!/usr/bin/env python3
"""WDM against dipole MIMO under two readings of the hardware-noise level.

``chain`` sets the hardware noise to a multiple of the EMI power each RF
chain collects; ``absolute`` uses the multiple of sigma2_emi as a variance
in V^2 directly.  Prints one table row per receive length.
"""
import argparse

from holowdm.experiments import mimo_schemes
from holowdm.scenario import Scenario


def main():
    p = argparse.ArgumentParser(description="WDM vs dipole MIMO with matched RF chains")
    p.add_argument("--d", type=float, default=10.0)
    p.add_argument("--ratio", type=float, default=10.0)
    p.add_argument("--lr", type=float, nargs="+", default=[1.0, 3.0, 5.0, 10.0, 20.0])
    args = p.parse_args()
    print(f"{'Lr_m':>6} {'reference':>9} {'wdm-svd':>9} {'mimo-svd':>9} {'gap':>7} "
          f"{'wdm-1tap':>9} {'mimo-mr':>9}")
    for Lr in args.lr:
        sc = Scenario(Lr=Lr, d=args.d)
        for ref in ("chain", "absolute"):
            se = mimo_schemes(sc, args.ratio, ref)
            gap = (se["mimo-svd"] - se["wdm-svd"]) / se["wdm-svd"]
            print(f"{Lr:6g} {ref:>9} {se['wdm-svd']:9.2f} {se['mimo-svd']:9.2f} {gap:7.3f} "
                  f"{se['wdm-onetap']:9.2f} {se['mimo-mr']:9.2f}")


if __name__ == "__main__":
    main()
