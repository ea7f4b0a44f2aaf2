#!/usr/bin/env python3
"""Run every experiment and collect the CSV files under one directory.

    python3 scripts/reproduce_figures.py --out results --fast
"""
import argparse
import sys
import time
from pathlib import Path

from holowdm.experiments import EXPERIMENTS, ExperimentError, ExperimentSpec, run
from holowdm.scenario import load_config

# Distance or receive length each sweep is run at.
SETTINGS = {
    "se-vs-lr": [{"d": 5.0}, {"d": 10.0}],
    "se-vs-d": [{"Lr": 5.0}],
    "emmf-compare": [{"d": 10.0}],
    "mimo-compare": [{"d": 10.0}],
    "coupling": [{"d": 5.0}],
    "modes": [{"Lr": 5.0, "d": 5.0}],
}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=Path(__file__).parents[1] / "configs/baseline.cfg")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--fast", action="store_true")
    p.add_argument("--only", nargs="*", choices=EXPERIMENTS)
    args = p.parse_args(argv)
    base = load_config(args.config)
    failures = 0
    for exp in args.only or EXPERIMENTS:
        for changes in SETTINGS.get(exp, [{}]):
            tag = "_".join(f"{k}{v:g}" for k, v in changes.items())
            out = args.out / (f"{exp}_{tag}" if tag else exp)
            t0 = time.perf_counter()
            try:
                run(ExperimentSpec(exp, base.replace(**changes), out_dir=out, fast=args.fast))
                print(f"{exp:13s} {tag:12s} ok      {time.perf_counter() - t0:7.1f} s")
            except ExperimentError as exc:
                failures += 1
                print(f"{exp:13s} {tag:12s} FAILED  {exc}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
