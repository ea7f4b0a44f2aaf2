"""Optimal communication modes from the channel's Hermitian kernel.

The source-side kernel K(s, s') = int conj(g(r - s)) g(r - s') dr is
discretised with a Nystrom rule: Gauss-Legendre nodes on the source, a
composite Gauss-Legendre rule on the receiver.  With B = sqrt(W_r) G sqrt(W_s)
the symmetrised kernel matrix is B^H B, so its eigenpairs follow from the SVD
of B without ever forming K.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ReceiveGrid, receive_grid
from .emi import correlation, density_for, noise_model, projected_covariance
from .fields import scalar_green
from .quadrature import QuadratureSpec, gauss_legendre, integrate_many, composite_gauss_legendre
from .scenario import Scenario
from .transceiver import LinkResult, svd_capacity, whiten

__all__ = [
    "ModeDecomposition",
    "kernel",
    "kernel_diagonal",
    "kernel_trace",
    "default_grid_size",
    "solve",
    "receive_functions",
    "psi_norms",
    "refinement_drift",
    "mercer_errors",
    "optimal_se",
    "optimal_channel",
]


def kernel(s, s_prime, sc: Scenario, spec: QuadratureSpec | None = None):
    """K(s, s') by adaptive quadrature over the receive segment (broadcasts)."""
    s, sp = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(s_prime, dtype=float))
    flat_s, flat_sp = s.ravel(), sp.ravel()
    spec = (spec or QuadratureSpec(rel_tol=1e-12)).with_hint(sc.lam)

    def f(r):
        a = np.conj(scalar_green(r[None, :] - flat_s[:, None], sc.d, sc.kappa))
        b = scalar_green(r[None, :] - flat_sp[:, None], sc.d, sc.kappa)
        return a * b

    res = integrate_many(f, [-sc.Lr / 2], [sc.Lr / 2], spec)
    out = res.value[:, 0].reshape(s.shape)
    return out if out.shape else complex(out)


def _antiderivative(u, d):
    # int (u^2 + d^2)^-3 du
    q = u * u + d * d
    return u / (4 * d * d * q * q) + 3 * u / (8 * d ** 4 * q) + 3 / (8 * d ** 5) * np.arctan(u / d)


def kernel_diagonal(s, sc: Scenario):
    """Closed form of K(s, s) = int |g(r - s)|^2 dr."""
    s = np.asarray(s, dtype=float)
    c = (sc.d ** 2 / (4 * math.pi)) ** 2
    return c * (_antiderivative(sc.Lr / 2 - s, sc.d) - _antiderivative(-sc.Lr / 2 - s, sc.d))


def kernel_trace(sc: Scenario, n: int = 512) -> float:
    """int K(s, s) ds over the source."""
    t, w = gauss_legendre(n)
    return float(np.sum(w * kernel_diagonal(t * sc.Ls / 2, sc)) * sc.Ls / 2)


def default_grid_size(sc: Scenario) -> int:
    return max(256, 8 * sc.N_max)


@dataclass(frozen=True)
class ModeDecomposition:
    scenario: Scenario
    s_nodes: np.ndarray
    s_weights: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray          # (M, M): phi[:, n] sampled on s_nodes
    r_grid: ReceiveGrid
    psi: np.ndarray          # (n_r, K): psi[:, n] sampled on the receive grid
    meta: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.s_nodes.size

    def eigenfunction(self, n: int, s):
        """Nystrom interpolant of phi_n (0-based) at arbitrary source points."""
        s = np.asarray(s, dtype=float)
        G = scalar_green(self.r_grid.nodes[:, None] - s.ravel()[None, :], self.scenario.d,
                         self.scenario.kappa)
        Kcol = (np.conj(self.psi[:, n]) * self.r_grid.weights) @ G
        return (np.conj(Kcol) / self.gamma[n]).reshape(s.shape)


def _green_matrix(sc, r, s, block=4096):
    G = np.empty((r.size, s.size), dtype=complex)
    for start in range(0, r.size, block):
        G[start:start + block] = scalar_green(r[start:start + block, None] - s[None, :],
                                              sc.d, sc.kappa)
    return G


def solve(sc: Scenario, M: int | None = None, grid: ReceiveGrid | None = None,
          keep: int | None = None) -> ModeDecomposition:
    """Eigenpairs of the kernel operator, sorted by decreasing eigenvalue.

    ``keep`` limits how many receive functions are stored (default N_max).
    """
    M = default_grid_size(sc) if M is None else M
    if M < 4 * sc.N_max:
        raise ValueError(f"grid size M={M} is below 4 N_max = {4 * sc.N_max}")
    t, w = gauss_legendre(M)
    s = t * sc.Ls / 2
    ws = w * sc.Ls / 2
    grid = receive_grid(sc) if grid is None else grid
    G = _green_matrix(sc, grid.nodes, s)
    sw_r = np.sqrt(grid.weights)
    sw_s = np.sqrt(ws)
    B = (sw_r[:, None] * G) * sw_s[None, :]
    try:
        U, sig, Vh = np.linalg.svd(B, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("eigen-solver failed") from exc
    gamma = sig ** 2
    phi = Vh.conj().T / sw_s[:, None]
    keep = sc.N_max if keep is None else keep
    psi = U[:, :keep] * (sig[:keep] / sw_r[:, None])
    return ModeDecomposition(sc, s, ws, gamma, phi, grid, psi,
                             {"M": M, "n_receive": grid.nodes.size})


def receive_functions(dec: ModeDecomposition, r, n_modes: int | None = None) -> np.ndarray:
    """psi_n(r) = int g(r - s) phi_n(s) ds for the leading modes, shape (len(r), K)."""
    K = dec.psi.shape[1] if n_modes is None else n_modes
    G = _green_matrix(dec.scenario, np.asarray(r, dtype=float), dec.s_nodes)
    return G @ (dec.s_weights[:, None] * dec.phi[:, :K])


def psi_norms(dec: ModeDecomposition, n_modes: int | None = None,
              panels_per_wavelength: int = 2, order: int = 20) -> np.ndarray:
    """||psi_n||^2 on a receive rule independent of the one used to solve."""
    sc = dec.scenario
    x, w = composite_gauss_legendre(-sc.Lr / 2, sc.Lr / 2, sc.lam / panels_per_wavelength, order)
    K = dec.psi.shape[1] if n_modes is None else n_modes
    out = np.zeros(K)
    for start in range(0, x.size, 8192):
        sl = slice(start, start + 8192)
        P = receive_functions(dec, x[sl], K)
        out += w[sl] @ np.abs(P) ** 2
    return out


def refinement_drift(sc: Scenario, M: int | None = None, n_modes: int | None = None) -> float:
    """Largest change of the leading eigenvalues when M doubles, relative to gamma_1."""
    M = default_grid_size(sc) if M is None else M
    n_modes = sc.N_max if n_modes is None else n_modes
    a = solve(sc, M).gamma[:n_modes]
    b = solve(sc, 2 * M).gamma[:n_modes]
    return float(np.max(np.abs(a - b)) / b[0])


def mercer_errors(dec: ModeDecomposition, counts) -> np.ndarray:
    """Frobenius error of the kernel matrix rebuilt from the leading modes."""
    sw = np.sqrt(dec.s_weights)
    V = dec.phi * sw[:, None]
    full = (V * dec.gamma[None, :]) @ V.conj().T
    norm = np.linalg.norm(full)
    out = []
    for k in counts:
        part = (V[:, :k] * dec.gamma[None, :k]) @ V[:, :k].conj().T
        out.append(np.linalg.norm(full - part) / norm)
    return np.array(out)


def optimal_channel(dec: ModeDecomposition, n_modes: int | None = None,
                    noise: str = "emi"):
    """(H, R) for the eigenmode scheme.

    H is diag(gamma_n).  With ``noise='emi'`` R is the interference covariance
    of the receive functions; ``noise='white'`` uses spatially white noise at
    the isotropic level lambda/2, giving R = (lambda/2) diag(gamma_n).
    """
    sc = dec.scenario
    K = sc.N if n_modes is None else n_modes
    gamma = dec.gamma[:K]
    H = np.diag(gamma).astype(complex)
    if noise == "white":
        return H, np.diag(gamma * sc.lam / 2).astype(complex)
    density = density_for(sc)
    Y = dec.psi[:, :K] * dec.r_grid.weights[:, None]
    R = projected_covariance(Y, dec.r_grid.nodes, lambda u: correlation(u, density, sc.lam))
    return H, R


def optimal_se(dec: ModeDecomposition, sc: Scenario | None = None,
               noise: str = "emi") -> LinkResult:
    """Capacity of the eigenmode scheme under the scenario's noise."""
    sc = dec.scenario if sc is None else sc
    H, R = optimal_channel(dec, sc.N, noise)
    nm = noise_model(R, sc.noise_emi, sc.sigma2_hdw)
    res = svd_capacity(whiten(H, nm.C), sc.power_budget)
    return LinkResult("optimal" if noise == "emi" else "optimal-white", res.gains,
                      res.powers, res.sinr, res.budget, {**res.meta, **nm.meta})
