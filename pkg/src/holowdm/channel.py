"""Coupling matrices for the WDM, EM-MF and dipole MIMO schemes."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import (BasisFamily, correlation_pieces, dipole_family,
                    fourier_receive_family, fourier_source_family)
from .fields import bandwidth_3db, green_wavenumber, scalar_green
from .quadrature import (CHANNEL_SPEC, QuadratureSpec, composite_gauss_legendre,
                         integrate_many)
from .scenario import Scenario, max_modes

__all__ = [
    "CouplingMatrix",
    "stationary_kernel_matrix",
    "spectral_kernel_matrix",
    "wdm_coupling",
    "wdm_coupling_wavenumber",
    "asymptotic_diagonal",
    "ReceiveGrid",
    "receive_grid",
    "source_grid",
    "emmf_receive_element",
    "emmf_fields",
    "emmf_coupling",
    "mimo_coupling",
    "significant_mode_count",
    "paraxial_dof",
    "max_modes",
    "interference_ratio",
]


@dataclass(frozen=True)
class CouplingMatrix:
    H: np.ndarray
    scheme: str
    scenario: Scenario
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.H.shape

    def __array__(self, dtype=None, copy=None):
        return self.H if dtype is None else self.H.astype(dtype)


def stationary_kernel_matrix(kernel, rows: BasisFamily, cols: BasisFamily,
                             bandwidth: float, spec: QuadratureSpec = CHANNEL_SPEC):
    """Matrix of int int conj(rows_n(r)) K(r - s) cols_m(s) dr ds.

    Each entry equals int K(u) c_nm(u) du with the closed-form cross-correlation
    c_nm.  All distinct moments int_piece K(u) u^j exp(i w u) du are computed in
    one batched adaptive pass.  ``bandwidth`` bounds the kernel's oscillation
    wavenumber and sets the initial panel size.
    """
    intervals: dict[tuple[float, float], int] = {}
    comps: dict[tuple[int, float], int] = {}
    n_idx, m_idx, b_idx, c_idx, coefs = [], [], [], [], []
    for n, psi in enumerate(rows.elements):
        for m, phi in enumerate(cols.elements):
            for pc in correlation_pieces(psi, phi):
                b = intervals.setdefault((pc.lo, pc.hi), len(intervals))
                for c, j, w in zip(pc.coef, pc.power, pc.omega):
                    n_idx.append(n)
                    m_idx.append(m)
                    b_idx.append(b)
                    c_idx.append(comps.setdefault((int(j), float(w)), len(comps)))
                    coefs.append(c)
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    if not intervals:
        return out, {"n_intervals": 0, "n_components": 0}
    bounds = np.array(list(intervals.keys()))
    powers = np.array([k[0] for k in comps])
    omegas = np.array([k[1] for k in comps])
    w_max = float(np.max(np.abs(omegas)))
    spec = spec.with_hint(2 * math.pi / (bandwidth + w_max))
    need_pow = powers.max() > 0

    def f(u):
        ku = kernel(u)
        ph = np.exp(1j * np.outer(omegas, u))
        if need_pow:
            ph = ph * u[None, :] ** powers[:, None]
        return ph * ku[None, :]

    res = integrate_many(f, bounds[:, 0], bounds[:, 1], spec)
    moments = res.value  # (C, B)
    vals = np.asarray(coefs) * moments[np.asarray(c_idx), np.asarray(b_idx)]
    np.add.at(out, (np.asarray(n_idx), np.asarray(m_idx)), vals)
    meta = {"n_intervals": len(intervals), "n_components": len(comps),
            "n_evals": res.n_evals, "rel_tol": spec.rel_tol,
            "max_error": float(np.max(res.error))}
    return out, meta


def spectral_kernel_matrix(spectrum, rows: BasisFamily, cols: BasisFamily, segments,
                           spec: QuadratureSpec = CHANNEL_SPEC):
    """(1/2pi) int S(kz) conj(R_n(kz)) C_m(kz) dkz as a sum over segments.

    Each segment is ``(t_lo, t_hi, hint, to_kz)`` where ``to_kz(t)`` returns
    the wavenumber and the Jacobian dkz/dt (``None`` means kz = t) and
    ``hint`` is the oscillation wavelength in ``t``.  Segments after the
    first are converged relative to the running total, so small tails do not
    chase roundoff in ``spectrum``.
    """
    nr, nc = len(rows), len(cols)
    total = np.zeros(nr * nc, dtype=complex)
    n_evals = 0
    for lo, hi, hint, to_kz in segments:
        def f(t, to_kz=to_kz):
            k, jac = (t, 1.0) if to_kz is None else to_kz(t)
            s = spectrum(k) * jac
            a = np.conj(rows.transforms(k))
            b = cols.transforms(k) * s[None, :]
            return (a[:, None, :] * b[None, :, :]).reshape(nr * nc, -1)

        seg_spec = spec.with_hint(hint)
        if n_evals:
            floor = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(total))))
            seg_spec = dataclasses.replace(seg_spec, abs_tol=floor)
        res = integrate_many(f, [lo], [hi], seg_spec)
        total += res.value[:, 0]
        n_evals += res.n_evals
    return total.reshape(nr, nc) / (2 * math.pi), {"n_evals": n_evals, "rel_tol": spec.rel_tol}


def _sine_map(kappa):
    return lambda t: (kappa * np.sin(t), kappa * np.cos(t))


def _green_kernel(sc: Scenario):
    return lambda u: scalar_green(u, sc.d, sc.kappa)


def wdm_coupling(sc: Scenario, spec: QuadratureSpec = CHANNEL_SPEC) -> CouplingMatrix:
    """Fourier-mode couplings H_nm = int g(u) c_nm(u) du."""
    H, meta = stationary_kernel_matrix(_green_kernel(sc), fourier_receive_family(sc),
                                       fourier_source_family(sc), sc.kappa, spec)
    return CouplingMatrix(H, "wdm", sc, {"method": "spatial", **meta})


def wdm_coupling_wavenumber(sc: Scenario, green=None,
                            spec: QuadratureSpec = CHANNEL_SPEC) -> CouplingMatrix:
    """Same couplings evaluated as (1/2pi) int G conj(Psi_n) Phi_m dkz.

    ``green`` overrides the transform G(kz); by default it is computed for the
    scenario's distance.  The integral runs slightly past the visible region,
    beyond which G is negligible.
    """
    if green is None:
        def green(k):
            return green_wavenumber(k, sc.d, sc.kappa)
    k = sc.kappa
    # kz = kappa sin(t) removes the square-root branch of G at |kz| = kappa; the
    # evanescent tails use kz = +-kappa cosh(v).
    span = 0.5 * (sc.Lr + sc.Ls)
    t_hint = 2 * math.pi / (k * (sc.d + span))
    v_max = math.acosh(1.05)
    v_hint = 2 * math.pi / (k * 1.05 * span)
    segments = [(-math.pi / 2, math.pi / 2, t_hint, _sine_map(k)),
                (0.0, v_max, v_hint, lambda v: (k * np.cosh(v), k * np.sinh(v))),
                (-v_max, 0.0, v_hint, lambda v: (-k * np.cosh(v), -k * np.sinh(v)))]
    H, meta = spectral_kernel_matrix(green, fourier_receive_family(sc),
                                     fourier_source_family(sc), segments, spec)
    return CouplingMatrix(H, "wdm", sc, {"method": "wavenumber", **meta})


def asymptotic_diagonal(sc: Scenario) -> np.ndarray:
    """Large-receiver limit sqrt(Ls) G_n of the diagonal couplings."""
    a = 2 * math.pi * sc.mode_offsets / sc.Ls
    return math.sqrt(sc.Ls) * green_wavenumber(a, sc.d, sc.kappa)


def interference_ratio(H) -> float:
    """Off-diagonal energy over diagonal energy."""
    H = np.asarray(H)
    diag = np.sum(np.abs(np.diag(H)) ** 2)
    return float((np.sum(np.abs(H) ** 2) - diag) / diag)


@dataclass(frozen=True)
class ReceiveGrid:
    nodes: np.ndarray
    weights: np.ndarray


def receive_grid(sc: Scenario, panels_per_wavelength: int = 1, order: int = 16) -> ReceiveGrid:
    """Composite Gauss-Legendre rule on the receive segment."""
    x, w = composite_gauss_legendre(-sc.Lr / 2, sc.Lr / 2, sc.lam / panels_per_wavelength, order)
    return ReceiveGrid(x, w)


def source_grid(sc: Scenario, panels_per_wavelength: int = 2, order: int = 16) -> ReceiveGrid:
    x, w = composite_gauss_legendre(-sc.Ls / 2, sc.Ls / 2, sc.lam / panels_per_wavelength, order)
    return ReceiveGrid(x, w)


def _radiate(sc: Scenario, currents: np.ndarray, src: ReceiveGrid, r: np.ndarray,
             block: int = 4096) -> np.ndarray:
    """Fields int g(r - s) j(s) ds for currents sampled on ``src``, shape (K, len(r))."""
    cw = currents * src.weights[None, :]
    out = np.empty((currents.shape[0], r.size), dtype=complex)
    for start in range(0, r.size, block):
        rr = r[start:start + block]
        G = scalar_green(rr[:, None] - src.nodes[None, :], sc.d, sc.kappa)
        out[:, start:start + block] = cw @ G.T
    return out


def emmf_fields(sc: Scenario, r, src: ReceiveGrid | None = None) -> np.ndarray:
    """theta_m(r) for every Fourier source mode, shape (N, len(r))."""
    src = source_grid(sc) if src is None else src
    phi = fourier_source_family(sc).sample(src.nodes)
    return _radiate(sc, phi, src, np.atleast_1d(np.asarray(r, dtype=float)))


def emmf_receive_element(m: int, r, sc: Scenario, coefficients=None):
    """Field theta_m(r) radiated by source mode ``m`` (or by ``coefficients``).

    When ``coefficients`` (length N) is given the current is the corresponding
    combination of Fourier modes and ``m`` is ignored.
    """
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) > sc.Lr / 2 * (1 + 1e-12)):
        raise ValueError("receive point outside the segment")
    fields = emmf_fields(sc, r.ravel())
    if coefficients is not None:
        out = np.asarray(coefficients) @ fields
    else:
        if not 1 <= m <= sc.N:
            raise ValueError(f"mode index {m} outside 1..{sc.N}")
        out = fields[m - 1]
    return out.reshape(r.shape)


def emmf_coupling(sc: Scenario, grid: ReceiveGrid | None = None) -> CouplingMatrix:
    """Gram matrix int conj(theta_n) theta_m dr of the matched-filter basis."""
    grid = receive_grid(sc) if grid is None else grid
    theta = emmf_fields(sc, grid.nodes)
    H = (np.conj(theta) * grid.weights[None, :]) @ theta.T
    H = 0.5 * (H + H.conj().T)
    return CouplingMatrix(H, "emmf", sc, {"method": "grid", "n_nodes": grid.nodes.size,
                                          "theta": theta, "grid": grid})


def mimo_coupling(sc: Scenario, delta=None, delta_s=None, delta_r=None,
                  spec: QuadratureSpec = CHANNEL_SPEC) -> CouplingMatrix:
    """Couplings between rectangular source and receive dipoles."""
    rx = dipole_family(sc, "receive", delta, delta_r)
    tx = dipole_family(sc, "source", delta, delta_s)
    H, meta = stationary_kernel_matrix(_green_kernel(sc), rx, tx, sc.kappa, spec)
    return CouplingMatrix(H, "mimo", sc, {"N_r": len(rx), "N_s": len(tx), **meta})


def significant_mode_count(sc: Scenario, H=None) -> int:
    """Number of diagonal couplings lying inside the 3-dB band of G.

    Modes are taken in symmetric pairs around the centre mode.  A pair is
    included while both members have their wavenumber inside the band edge and
    a normalised gain |H_nn|^2 / Ls no more than 3 dB below |G(0)|^2; counting
    stops at the first pair that fails.  The centre mode always counts.
    """
    if H is None:
        H = wdm_coupling(sc).H
    H = np.asarray(H)
    edge = bandwidth_3db(sc.d, sc.kappa)
    half_peak = 0.5 * abs(green_wavenumber(0.0, sc.d, sc.kappa)) ** 2
    gain = np.abs(np.diag(H)) ** 2 / sc.Ls
    c = (sc.N - 1) // 2
    count = 1
    for k in range(1, c + 1):
        a = 2 * math.pi * k / sc.Ls
        if a > edge * (1 + 1e-12):
            break
        if min(gain[c - k], gain[c + k]) < half_peak:
            break
        count += 2
    return count


def paraxial_dof(sc: Scenario) -> int:
    eta = sc.Ls * sc.Lr / (sc.lam * sc.d)
    return 2 * int(math.floor(eta / 2 + 1e-9)) + 1
