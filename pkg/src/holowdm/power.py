"""Source energy and the radiated-power bound P_rad <= Q E_s."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import fourier_source_family
from .channel import stationary_kernel_matrix
from .emi import correlation
from .quadrature import CHANNEL_SPEC, QuadratureSpec, gauss_legendre, integrate
from .scenario import Scenario

__all__ = [
    "PowerReport",
    "source_energy",
    "source_current",
    "q_factor",
    "q_factor_double",
    "radiation_form",
    "prad_bound_check",
    "random_coefficients",
]


def source_energy(coefficients) -> float:
    """int |j(s)|^2 ds for j = sum xi_m phi_m (orthonormal Fourier modes)."""
    xi = np.asarray(coefficients)
    return float(np.sum(np.abs(xi) ** 2))


def source_current(coefficients, s, sc: Scenario):
    return np.asarray(coefficients) @ fourier_source_family(sc).sample(s)


def _prefactor(sc: Scenario) -> float:
    # 4 pi Z0 / (8 lambda^2) = kappa Z0 / (4 lambda)
    return sc.kappa * sc.constants.Z0 / (4 * sc.lam)


def q_factor(sc: Scenario, spec: QuadratureSpec = CHANNEL_SPEC) -> float:
    """Q = (kappa Z0 / 4 lambda) sqrt(int int |rho(s1 - s2)|^2 ds1 ds2) over the source.

    The double integral is folded onto the lag u = s1 - s2, whose weight is
    the overlap length Ls - |u|.
    """
    Ls = sc.Ls

    def weighted(u):
        return (Ls - u) * np.abs(correlation(u, lam=sc.lam)) ** 2

    res = integrate(weighted, 0.0, Ls, spec.with_hint(sc.lam))
    return _prefactor(sc) * math.sqrt(2 * res.value)


def q_factor_double(sc: Scenario, n: int = 400) -> float:
    """Q from a tensor Gauss-Legendre rule on the square (reference)."""
    t, w = gauss_legendre(n)
    s = t * sc.Ls / 2
    ws = w * sc.Ls / 2
    rho = np.abs(correlation(s[:, None] - s[None, :], lam=sc.lam)) ** 2
    return _prefactor(sc) * math.sqrt(float(ws @ rho @ ws))


def _mode_correlation(sc: Scenario, rho=None) -> np.ndarray:
    fam = fourier_source_family(sc)
    kernel = (lambda u: correlation(u, lam=sc.lam)) if rho is None else rho
    M, _ = stationary_kernel_matrix(kernel, fam, fam, sc.kappa)
    return 0.5 * (M + M.conj().T)


def radiation_form(coefficients, sc: Scenario, rho=None, M=None) -> float:
    """4 pi (Z0 / 8 lambda^2) int int conj(j(s1)) j(s2) rho(s1 - s2) ds1 ds2."""
    M = _mode_correlation(sc, rho) if M is None else M
    xi = np.asarray(coefficients)
    return float(np.real(np.conj(xi) @ M @ xi)) * _prefactor(sc)


def random_coefficients(sc: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian coefficients scaled so that E_s = Ls Ps."""
    xi = rng.standard_normal(sc.N) + 1j * rng.standard_normal(sc.N)
    return xi * math.sqrt(sc.Ls * sc.Ps / np.sum(np.abs(xi) ** 2))


@dataclass(frozen=True)
class PowerReport:
    energy: float
    Q: float
    bound: float
    draws: np.ndarray

    @property
    def violations(self) -> int:
        return int(np.sum(self.draws > self.bound * (1 + 1e-6)))

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.draws) / self.bound) if self.draws.size else 0.0


def prad_bound_check(sc: Scenario, draws: int = 100, seed: int = 0) -> PowerReport:
    """Evaluate the pre-Cauchy-Schwarz radiated-power form on random sources."""
    Q = q_factor(sc)
    energy = sc.Ls * sc.Ps
    M = _mode_correlation(sc)
    seeds = np.random.SeedSequence(seed).spawn(draws)
    vals = np.array([radiation_form(random_coefficients(sc, np.random.default_rng(s)), sc, M=M)
                     for s in seeds])
    return PowerReport(energy, Q, Q * energy, vals)
