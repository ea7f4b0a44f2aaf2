"""Command-line entry point ``wdm``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .scenario import ValidationError, load_config, validate
from . import experiments as ex

DUMPS = ("dump-green", "dump-coupling", "dump-emi", "dump-modes")


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _scenario(args):
    overrides = _parse_set(args.set)
    if args.config:
        return load_config(args.config, overrides)
    base = {"Ls": "0.2", "Lr": "1", "d": "5", "lambda": "0.01"}
    base.update(overrides)
    return validate(base)


def _grid(text):
    if text is None:
        return None
    return tuple(float(v) for v in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wdm", description="Wavenumber-division multiplexing "
                                "experiments between two parallel line segments.")
    p.add_argument("experiment", choices=ex.EXPERIMENTS + DUMPS)
    p.add_argument("--config", type=Path, help="key = value scenario file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario key (repeatable)")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--fast", action="store_true", help="coarse sweep grids")
    p.add_argument("--grid", help="sweep values, comma or space separated")
    p.add_argument("--variable", help="scenario key swept by --grid")
    p.add_argument("--schemes", help="comma-separated scheme list for SE sweeps")
    p.add_argument("--allocation", choices=("waterfill", "uniform"), default="waterfill")
    p.add_argument("--hdw-ratio", type=float, default=10.0)
    p.add_argument("--hdw-reference", choices=("chain", "absolute"), default="chain")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return p


def _write(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _dump(kind: str, sc, out: Path) -> Path:
    from .channel import wdm_coupling
    from .eigenmodes import solve
    from .emi import wdm_covariance
    from .fields import green_wavenumber, scalar_green

    if kind == "dump-green":
        z = np.linspace(-4 * sc.d, 4 * sc.d, 401)
        kz = np.linspace(-1.5 * sc.kappa, 1.5 * sc.kappa, 401)
        rows = []
        for domain, x, v in (("z", z, scalar_green(z, sc.d, sc.kappa)),
                             ("kz", kz, green_wavenumber(kz, sc.d, sc.kappa))):
            with np.errstate(divide="ignore"):
                db = 20 * np.log10(np.abs(v))
            rows += [[domain, repr(float(a)), repr(b.real), repr(b.imag), repr(float(c))]
                     for a, b, c in zip(x, v, db)]
        return _write(out / "green.csv", ["domain", "z_or_kz", "re", "im", "mag_db"], rows)
    if kind in ("dump-coupling", "dump-emi"):
        M = wdm_coupling(sc).H if kind == "dump-coupling" else wdm_covariance(sc)
        rows = [[n, m, repr(M[n - 1, m - 1].real), repr(M[n - 1, m - 1].imag)]
                for n in range(1, M.shape[0] + 1) for m in range(1, M.shape[1] + 1)]
        name = "coupling.csv" if kind == "dump-coupling" else "emi_covariance.csv"
        return _write(out / name, ["n", "m", "re", "im"], rows)
    dec = solve(sc)
    rows = [[i + 1, repr(float(g))] for i, g in enumerate(dec.gamma[:4 * sc.N_max])]
    return _write(out / "modes.csv", ["index", "gamma"], rows)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = _scenario(args)
        if args.experiment in DUMPS:
            path = _dump(args.experiment, sc, args.out)
            print(path)
            return 0
        spec = ex.ExperimentSpec(
            args.experiment, sc, variable=args.variable, grid=_grid(args.grid),
            out_dir=args.out, fast=args.fast,
            schemes=tuple(s.strip() for s in args.schemes.split(",")) if args.schemes else None,
            allocation=args.allocation, hdw_ratio=args.hdw_ratio,
            hdw_reference=args.hdw_reference, draws=args.draws, seed=args.seed, jobs=args.jobs)
        res = ex.run(spec)
    except (ValidationError, ValueError, OSError, ex.ExperimentError) as exc:
        print(f"wdm: error: {exc}", file=sys.stderr)
        return 1
    print(f"{res.csv_path} ({len(res.rows)} rows, {res.wall_time:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
