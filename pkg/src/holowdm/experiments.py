"""Figure-level experiments: sweeps over a scenario written out as CSV."""
from __future__ import annotations

import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .channel import (asymptotic_diagonal, emmf_coupling, interference_ratio, mimo_coupling,
                      paraxial_dof, significant_mode_count, wdm_coupling)
from .eigenmodes import kernel_trace, optimal_se, solve
from .emi import (AngularDensity, covariance_spectrum, density_for, mimo_covariance,
                  noise_model, projected_covariance, correlation, wdm_covariance)
from .fields import bandwidth_3db, green_wavenumber, scalar_green
from .power import prad_bound_check
from .quadrature import CHANNEL_SPEC
from .scenario import Scenario, serialize
from .transceiver import LINEAR_SCHEMES, evaluate_schemes

__all__ = [
    "EXPERIMENTS",
    "ExperimentError",
    "ExperimentSpec",
    "RunResult",
    "default_grid",
    "hardware_noise",
    "wdm_schemes",
    "emmf_schemes",
    "mimo_schemes",
    "run",
]

EXPERIMENTS = ("green", "spectra", "coupling", "nbar", "emi-eig", "se-vs-lr", "se-vs-d",
               "emmf-compare", "mimo-compare", "power-check", "modes")

WDM_SCHEMES = ("optimal", "svd") + LINEAR_SCHEMES

# (variable, full grid, fast grid) per experiment.
_GRIDS = {
    "green": ("d", [5.0, 10.0, 25.0], [5.0, 10.0]),
    "spectra": ("d", [5.0, 10.0, 25.0], [5.0, 10.0]),
    "coupling": ("Lr", [1, 1.5, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 18, 20, 25, 30, 40, 50],
                 [1.0, 2.0, 5.0, 10.0, 20.0]),
    "nbar": ("d", list(np.arange(2.0, 31.0)), [2.0, 5.0, 10.0, 20.0, 30.0]),
    "emi-eig": ("Lr", [1.0, 2.0, 5.0, 10.0, 20.0], [1.0, 5.0]),
    "se-vs-lr": ("Lr", list(np.arange(1.0, 21.0)), [1.0, 2.0, 3.0, 5.0, 7.0, 10.0]),
    "se-vs-d": ("d", list(np.arange(2.0, 31.0)), [2.0, 5.0, 10.0, 20.0]),
    "emmf-compare": ("Lr", list(np.arange(1.0, 21.0)), [1.0, 3.0, 5.0, 10.0]),
    "mimo-compare": ("Lr", list(np.arange(1.0, 21.0)), [1.0, 3.0, 5.0, 10.0]),
    "power-check": (None, [], []),
    "modes": (None, [], []),
}


class ExperimentError(RuntimeError):
    """A sweep point failed; partial output has been written."""


def default_grid(experiment: str, fast: bool = False) -> tuple[str | None, list[float]]:
    var, full, quick = _GRIDS[experiment]
    return var, [float(v) for v in (quick if fast else full)]


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment run.

    ``grid`` overrides the default sweep values of ``variable``.  For the
    MIMO comparison, ``hdw_ratio`` scales the hardware noise relative to the
    EMI power collected per RF chain (``hdw_reference='chain'``) or relative
    to ``noise_emi`` directly (``'absolute'``).
    """

    experiment: str
    scenario: Scenario = field(default_factory=Scenario)
    variable: str | None = None
    grid: tuple[float, ...] | None = None
    out_dir: Path = Path("results")
    fast: bool = False
    schemes: tuple[str, ...] | None = None
    allocation: str = "waterfill"
    hdw_ratio: float = 10.0
    hdw_reference: str = "chain"
    draws: int = 100
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"choose from {', '.join(EXPERIMENTS)}")
        var, values = default_grid(self.experiment, self.fast)
        if self.variable is None:
            object.__setattr__(self, "variable", var)
        if self.grid is None:
            object.__setattr__(self, "grid", tuple(values))
        g = np.asarray(self.grid, dtype=float)
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("sweep grid must be strictly increasing")
        if self.hdw_reference not in ("chain", "absolute"):
            raise ValueError("hdw_reference must be 'chain' or 'absolute'")
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    def point(self, value: float) -> Scenario:
        """Scenario at one sweep value."""
        if self.variable is None:
            return self.scenario
        return self.scenario.replace(**{self.variable: value})


@dataclass
class RunResult:
    csv_path: Path
    manifest_path: Path
    rows: list[dict]
    wall_time: float
    failed: str | None = None


# Building blocks shared by the SE experiments.

def hardware_noise(R, sc: Scenario, ratio: float, reference: str = "chain") -> float:
    """Hardware noise variance as a multiple of the EMI level.

    ``chain`` references the mean EMI power per RF chain, sigma2_emi * mean(diag R),
    which keeps the ratio independent of how each receive basis is scaled.
    """
    if reference == "absolute":
        return ratio * sc.noise_emi
    return ratio * sc.noise_emi * float(np.mean(np.real(np.diag(R))))


def _linear(H, R, sc: Scenario, schemes, allocation, s2hdw=None):
    s2hdw = sc.sigma2_hdw if s2hdw is None else s2hdw
    nm = noise_model(R, sc.noise_emi, s2hdw, density_for(sc))
    return evaluate_schemes(H, nm.C, sc.power_budget, schemes, allocation)


def wdm_schemes(sc: Scenario, schemes=WDM_SCHEMES, allocation: str = "waterfill") -> dict:
    """Sum SE of each WDM scheme at one scenario."""
    lin = [s for s in schemes if s != "optimal"]
    out = {}
    if lin:
        H = wdm_coupling(sc).H
        R = wdm_covariance(sc)
        out.update({k: v.se for k, v in _linear(H, R, sc, lin, allocation).items()})
    if "optimal" in schemes:
        out["optimal"] = optimal_se(solve(sc), sc).se
    return {s: out[s] for s in schemes}


def emmf_schemes(sc: Scenario, schemes=("svd", "onetap")) -> dict:
    """Sum SE with matched-filter receive functions."""
    cm = emmf_coupling(sc)
    theta, grid = cm.meta["theta"], cm.meta["grid"]
    density = density_for(sc)
    Y = theta.T * grid.weights[:, None]
    R = projected_covariance(Y, grid.nodes, lambda u: correlation(u, density, sc.lam))
    return {k: v.se for k, v in _linear(cm.H, R, sc, schemes, "waterfill").items()}


def mimo_schemes(sc: Scenario, ratio: float = 10.0, reference: str = "chain",
                 wdm=("svd", "onetap"), mimo=("svd", "mr")) -> dict:
    """WDM against a dipole array with the same number of RF chains.

    Returns entries ``wdm-<scheme>`` and ``mimo-<scheme>``, plus the receive
    dipole count under ``N_r``.
    """
    out = {}
    Hw = wdm_coupling(sc).H
    Rw = wdm_covariance(sc)
    res = _linear(Hw, Rw, sc, wdm, "waterfill", hardware_noise(Rw, sc, ratio, reference))
    out.update({f"wdm-{k}": v.se for k, v in res.items()})
    cm = mimo_coupling(sc)
    Rm = mimo_covariance(sc)
    res = _linear(cm.H, Rm, sc, mimo, "waterfill", hardware_noise(Rm, sc, ratio, reference))
    out.update({f"mimo-{k}": v.se for k, v in res.items()})
    out["N_r"] = cm.meta["N_r"]
    return out


# Per-experiment row generators.  Each takes (spec, value) and returns rows.

def _green_rows(spec: ExperimentSpec, d: float):
    sc = spec.point(d)
    zmax = 4 * d
    z = np.linspace(-zmax, zmax, 81 if spec.fast else 401)
    g = scalar_green(z, d, sc.kappa)
    return [_complex_row({"d_m": d, "z_m": zi}, gi) for zi, gi in zip(z, g)]


def _spectra_rows(spec: ExperimentSpec, d: float):
    sc = spec.point(d)
    kz = np.linspace(-1.5 * sc.kappa, 1.5 * sc.kappa, 61 if spec.fast else 301)
    G = green_wavenumber(kz, d, sc.kappa)
    bw = bandwidth_3db(d, sc.kappa)
    return [_complex_row({"d_m": d, "kz_rad_per_m": k}, v) | {"bw3db_rad_per_m": bw}
            for k, v in zip(kz, G)]


def _complex_row(coords: dict, v: complex) -> dict:
    mag = abs(v)
    return coords | {"re": v.real, "im": v.imag,
                     "mag_db": 20 * math.log10(mag) if mag > 0 else -math.inf}


def _coupling_rows(spec: ExperimentSpec, Lr: float):
    sc = spec.point(Lr)
    H = wdm_coupling(sc).H
    asym = asymptotic_diagonal(sc)
    dev = np.abs(np.diag(H) - asym) / np.abs(asym)
    return [{"Lr_m": Lr, "d_m": sc.d, "interference_ratio": interference_ratio(H),
             "diag_dev_centre": float(dev[(sc.N - 1) // 2]),
             "diag_dev_max": float(np.max(dev))}]


def _nbar_rows(spec: ExperimentSpec, d: float):
    rows = []
    for Lr in (1.0, 5.0):
        sc = spec.point(d).replace(Lr=max(Lr, spec.scenario.Ls))
        rows.append({"Lr_m": sc.Lr, "d_m": d, "nbar": significant_mode_count(sc),
                     "paraxial_dof": paraxial_dof(sc)})
    return rows


def _emi_rows(spec: ExperimentSpec, Lr: float):
    sc = spec.point(Lr)
    rows = []
    for label, dens in (("isotropic", AngularDensity()),
                        ("band", AngularDensity.band(sc.emi_theta1, sc.emi_theta2))):
        R = wdm_covariance(sc, dens)
        ev = covariance_spectrum(R)
        diag = np.real(np.diag(R)) / Lr
        for i, (e, dg) in enumerate(zip(ev, diag), 1):
            rows.append({"emi": label, "Lr_m": Lr, "index": i, "eig_db": e,
                         "diag_over_Lr_m": dg})
    return rows


def _se_rows(spec: ExperimentSpec, value: float):
    sc = spec.point(value)
    schemes = spec.schemes or WDM_SCHEMES
    se = wdm_schemes(sc, schemes, spec.allocation)
    return [{"Lr_m": sc.Lr, "d_m": sc.d, "scheme": s, "SE_bpcu": v} for s, v in se.items()]


def _emmf_rows(spec: ExperimentSpec, Lr: float):
    sc = spec.point(Lr)
    rows = [{"Lr_m": Lr, "d_m": sc.d, "scheme": f"wdm-{s}", "SE_bpcu": v}
            for s, v in wdm_schemes(sc, ("svd", "onetap")).items()]
    rows += [{"Lr_m": Lr, "d_m": sc.d, "scheme": f"emmf-{s}", "SE_bpcu": v}
             for s, v in emmf_schemes(sc).items()]
    return rows


def _mimo_rows(spec: ExperimentSpec, Lr: float):
    sc = spec.point(Lr)
    se = mimo_schemes(sc, spec.hdw_ratio, spec.hdw_reference)
    n_r = se.pop("N_r")
    return [{"Lr_m": Lr, "d_m": sc.d, "N_r": n_r, "scheme": s, "SE_bpcu": v}
            for s, v in se.items()]


def _power_rows(spec: ExperimentSpec, _):
    rep = prad_bound_check(spec.scenario, spec.draws, spec.seed)
    return [{"draw": i, "seed": spec.seed, "Prad_W_per_m": float(v), "bound_W_per_m": rep.bound,
             "Q_per_m": rep.Q, "ratio": float(v / rep.bound)} for i, v in enumerate(rep.draws)]


def _modes_rows(spec: ExperimentSpec, _):
    sc = spec.scenario
    dec = solve(sc)
    trace = kernel_trace(sc)
    n = min(dec.gamma.size, 4 * sc.N_max)
    return [{"index": i + 1, "Lr_m": sc.Lr, "d_m": sc.d, "gamma": float(g),
             "gamma_rel_db": 10 * math.log10(g / dec.gamma[0]) if g > 0 else -math.inf,
             "trace": trace, "paraxial_dof": paraxial_dof(sc)}
            for i, g in enumerate(dec.gamma[:n])]


_RUNNERS: dict[str, Callable] = {
    "green": _green_rows,
    "spectra": _spectra_rows,
    "coupling": _coupling_rows,
    "nbar": _nbar_rows,
    "emi-eig": _emi_rows,
    "se-vs-lr": _se_rows,
    "se-vs-d": _se_rows,
    "emmf-compare": _emmf_rows,
    "mimo-compare": _mimo_rows,
    "power-check": _power_rows,
    "modes": _modes_rows,
}


def _evaluate(args):
    spec, value = args
    try:
        return _RUNNERS[spec.experiment](spec, value), None
    except Exception as exc:  # reported per sweep point
        return None, f"{type(exc).__name__}: {exc}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, rows: list[dict], failed: str | None):
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols or ["status"])
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])
        if failed is not None:
            w.writerow(["FAILED", failed])


def _write_manifest(path: Path, spec: ExperimentSpec, wall: float, status: str):
    lines = [
        f"experiment = {spec.experiment}",
        f"version = {__version__}",
        f"status = {status}",
        f"created = {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
        f"wall_time_s = {wall:.3f}",
        f"sweep_variable = {spec.variable}",
        f"sweep_grid = {' '.join(_fmt(v) for v in spec.grid)}",
        f"fast = {spec.fast}",
        f"quadrature_rel_tol = {CHANNEL_SPEC.rel_tol!r}",
        f"quadrature_abs_tol = {CHANNEL_SPEC.abs_tol!r}",
    ]
    for f in dataclasses.fields(spec):
        if f.name in ("experiment", "scenario", "variable", "grid", "out_dir", "fast"):
            continue
        lines.append(f"{f.name} = {getattr(spec, f.name)}")
    lines += [f"scenario.{line}" for line in serialize(spec.scenario).splitlines()]
    path.write_text("\n".join(lines) + "\n")


def run(spec: ExperimentSpec) -> RunResult:
    """Evaluate every sweep point in order and write ``<id>.csv`` plus a manifest.

    Raises :class:`ExperimentError` after flushing partial rows and a FAILED
    marker when a point fails.
    """
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = spec.out_dir / f"{spec.experiment}.csv"
    manifest_path = spec.out_dir / f"{spec.experiment}.manifest.txt"
    values = list(spec.grid) if spec.variable is not None else [None]
    t0 = time.perf_counter()
    tasks = [(spec, v) for v in values]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            results = list(pool.map(_evaluate, tasks))
    else:
        results = []
        for t in tasks:
            results.append(_evaluate(t))
            if results[-1][1] is not None:
                break
    rows, failed = [], None
    for v, (part, err) in zip(values, results):
        if err is not None:
            failed = f"{spec.variable}={v}: {err}" if spec.variable else err
            break
        rows.extend(part)
    wall = time.perf_counter() - t0
    _write_csv(csv_path, rows, failed)
    _write_manifest(manifest_path, spec, wall, "FAILED" if failed else "ok")
    result = RunResult(csv_path, manifest_path, rows, wall, failed)
    if failed:
        raise ExperimentError(f"{spec.experiment} failed at {failed}")
    return result
