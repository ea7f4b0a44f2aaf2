"""Electromagnetic interference: angular densities, correlation, covariances.

Convention: a plane wave arriving from polar angle ``theta`` contributes
``exp(-i kappa cos(theta) z)`` to the correlation ``rho(z)``, and the
wavenumber density is ``S(kz) = int rho(z) exp(-i kz z) dz``, so that wave
sits at ``kz = -kappa cos(theta)``.  Covariance entries are
``R_nm = int int rho(r - r') conj(e_n(r)) e_m(r') dr dr'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisFamily, dipole_family, fourier_receive_family
from .channel import spectral_kernel_matrix, stationary_kernel_matrix
from .quadrature import CHANNEL_SPEC, QuadratureSpec
from .scenario import Scenario

__all__ = [
    "AngularDensity",
    "NoiseModel",
    "correlation",
    "psd",
    "density_for",
    "covariance_matrix",
    "wdm_covariance",
    "wdm_covariance_wavenumber",
    "mimo_covariance",
    "projected_covariance",
    "covariance_spectrum",
    "noise_model",
]


@dataclass(frozen=True)
class AngularDensity:
    """Normalised angular power density f(theta, phi) of the interference.

    ``band`` spreads the power uniformly over the solid angle between polar
    angles ``theta1`` and ``theta2``; ``isotropic`` is the full sphere.
    ``custom`` takes a tabulated density on a (theta, phi) grid, integrated
    with the trapezoidal rule.
    """

    kind: str = "isotropic"
    theta1: float = 0.0
    theta2: float = math.pi
    theta: np.ndarray | None = None
    phi: np.ndarray | None = None
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("isotropic", "band", "custom"):
            raise ValueError(f"unknown angular density {self.kind!r}")
        if self.kind == "band" and not 0 <= self.theta1 < self.theta2 <= math.pi:
            raise ValueError("band needs 0 <= theta1 < theta2 <= pi")
        if self.kind == "custom":
            if self.theta is None or self.phi is None or self.weight is None:
                raise ValueError("custom density needs theta, phi and weight tables")
            if np.shape(self.weight) != (len(self.theta), len(self.phi)):
                raise ValueError("weight table must have shape (len(theta), len(phi))")

    @classmethod
    def band(cls, theta1: float, theta2: float) -> "AngularDensity":
        return cls("band", theta1, theta2)

    @property
    def cos_bounds(self) -> tuple[float, float]:
        """(cos theta2, cos theta1) for isotropic and band densities."""
        lo, hi = (0.0, math.pi) if self.kind == "isotropic" else (self.theta1, self.theta2)
        return math.cos(hi), math.cos(lo)

    def marginal(self) -> np.ndarray:
        """Polar marginal F(theta) = int f dphi of a tabulated density."""
        return np.trapezoid(np.asarray(self.weight, dtype=float), self.phi, axis=1)

    def total(self) -> float:
        """int int f dtheta dphi (one for a valid density)."""
        if self.kind == "custom":
            return float(np.trapezoid(self.marginal(), self.theta))
        return 1.0

    def __call__(self, theta, phi=None):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "custom":
            raise NotImplementedError("tabulated densities are only integrated, not evaluated")
        c_lo, c_hi = self.cos_bounds
        inside = (theta >= (0.0 if self.kind == "isotropic" else self.theta1)) & \
                 (theta <= (math.pi if self.kind == "isotropic" else self.theta2))
        return np.where(inside, np.sin(theta) / (2 * math.pi * (c_hi - c_lo)), 0.0)


ISOTROPIC = AngularDensity()


def density_for(sc: Scenario) -> AngularDensity:
    if sc.emi == "band":
        return AngularDensity.band(sc.emi_theta1, sc.emi_theta2)
    return ISOTROPIC


def correlation(z, density: AngularDensity = ISOTROPIC, lam: float = 1.0):
    """Normalised spatial correlation rho(z)."""
    z = np.asarray(z, dtype=float)
    kappa = 2 * math.pi / lam
    if density.kind == "custom":
        F = density.marginal()
        ph = np.exp(-1j * kappa * np.multiply.outer(z, np.cos(density.theta)))
        return np.trapezoid(ph * F, density.theta, axis=-1)
    c_lo, c_hi = density.cos_bounds
    width = c_hi - c_lo
    centre = 0.5 * (c_hi + c_lo)
    val = np.sinc(kappa * width * z / (2 * math.pi))
    if centre == 0.0:
        return val
    return np.exp(-1j * kappa * centre * z) * val


def psd(kappa_z, density: AngularDensity = ISOTROPIC, lam: float = 1.0):
    """Wavenumber power density S(kz)."""
    kz = np.asarray(kappa_z, dtype=float)
    kappa = 2 * math.pi / lam
    if density.kind == "custom":
        c = np.clip(-kz / kappa, -1.0, 1.0)
        th = np.arccos(c)
        order = np.argsort(density.theta)
        F = np.interp(th, np.asarray(density.theta)[order], density.marginal()[order],
                      left=0.0, right=0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2 * math.pi * F / (kappa * np.sin(th))
        return np.where((np.abs(kz) < kappa) & np.isfinite(out), out, 0.0)
    c_lo, c_hi = density.cos_bounds
    level = 2 * math.pi / (kappa * (c_hi - c_lo))
    return np.where((kz >= -kappa * c_hi) & (kz <= -kappa * c_lo), level, 0.0)


def covariance_matrix(sc: Scenario, family: BasisFamily, density: AngularDensity | None = None,
                      spec: QuadratureSpec = CHANNEL_SPEC):
    """R_nm = int int conj(e_n(r)) rho(r - r') e_m(r') dr dr' for one family."""
    density = density_for(sc) if density is None else density
    R, meta = stationary_kernel_matrix(lambda u: correlation(u, density, sc.lam),
                                       family, family, sc.kappa, spec)
    R = 0.5 * (R + R.conj().T)
    return R, meta


def wdm_covariance(sc: Scenario, density: AngularDensity | None = None,
                   spec: QuadratureSpec = CHANNEL_SPEC) -> np.ndarray:
    return covariance_matrix(sc, fourier_receive_family(sc), density, spec)[0]


def wdm_covariance_wavenumber(sc: Scenario, density: AngularDensity | None = None,
                              spec: QuadratureSpec = CHANNEL_SPEC) -> np.ndarray:
    """R from (1/2pi) int S(kz) conj(Psi_n) Psi_m dkz over the support of S."""
    density = density_for(sc) if density is None else density
    k = sc.kappa
    if density.kind == "custom":
        lo, hi = -k, k
    else:
        c_lo, c_hi = density.cos_bounds
        lo, hi = -k * c_hi, -k * c_lo
    fam = fourier_receive_family(sc)
    R, _ = spectral_kernel_matrix(lambda x: psd(x, density, sc.lam), fam, fam,
                                  [(lo, hi, 2 * math.pi / sc.Lr, None)], spec)
    return 0.5 * (R + R.conj().T)


def mimo_covariance(sc: Scenario, density: AngularDensity | None = None,
                    delta=None, delta_r=None, spec: QuadratureSpec = CHANNEL_SPEC) -> np.ndarray:
    fam = dipole_family(sc, "receive", delta, delta_r)
    return covariance_matrix(sc, fam, density, spec)[0]


def projected_covariance(Y: np.ndarray, nodes: np.ndarray, rho, block: int = 2048) -> np.ndarray:
    """R = Y^H P Y with P_jk = rho(x_j - x_k) for quadrature-weighted samples Y.

    ``Y`` has shape (n_nodes, K) and already includes the quadrature weights,
    so R_nm approximates int int conj(f_n(x)) rho(x - x') f_m(x') dx dx'.
    """
    n = nodes.size
    R = np.zeros((Y.shape[1], Y.shape[1]), dtype=complex)
    for start in range(0, n, block):
        sl = slice(start, min(n, start + block))
        P = rho(nodes[sl, None] - nodes[None, :])
        R += Y[sl].conj().T @ (P @ Y)
    return 0.5 * (R + R.conj().T)


def covariance_spectrum(R) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in dB, descending, relative to the largest."""
    ev = np.linalg.eigvalsh(0.5 * (np.asarray(R) + np.asarray(R).conj().T))[::-1]
    top = ev[0]
    if top <= 0:
        raise ValueError("covariance has no positive eigenvalue")
    with np.errstate(divide="ignore"):
        return 10 * np.log10(np.maximum(ev, 0.0) / top)


@dataclass(frozen=True)
class NoiseModel:
    density: AngularDensity
    sigma2_emi: float
    sigma2_hdw: float
    R: np.ndarray
    C: np.ndarray
    meta: dict = field(default_factory=dict)


def noise_model(R, sigma2_emi: float, sigma2_hdw: float,
                density: AngularDensity = ISOTROPIC, cond_limit: float = 1e12) -> NoiseModel:
    """C = sigma2_emi R + sigma2_hdw I, regularised when it is numerically singular.

    Without hardware noise, an R whose condition number exceeds ``cond_limit``
    has its eigenvalues floored at 1e-12 trace(R)/N before scaling; the floor
    is recorded in ``meta``.
    """
    R = 0.5 * (np.asarray(R) + np.asarray(R).conj().T)
    n = R.shape[0]
    meta = {"regularized": False}
    Rr = R
    if sigma2_hdw == 0:
        w, V = np.linalg.eigh(R)
        top = w[-1]
        if top <= 0:
            raise ValueError("covariance is not positive definite")
        if w[0] <= top / cond_limit:
            floor = 1e-12 * np.trace(R).real / n
            w2 = np.maximum(w, floor)
            Rr = (V * w2) @ V.conj().T
            Rr = 0.5 * (Rr + Rr.conj().T)
            meta.update(regularized=True, eigenvalue_floor=floor,
                        n_floored=int(np.sum(w < floor)))
    C = sigma2_emi * Rr + sigma2_hdw * np.eye(n)
    return NoiseModel(density, sigma2_emi, sigma2_hdw, R, C, meta)
