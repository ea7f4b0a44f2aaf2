"""Whitening, waterfilling and the SVD / MMSE / MR / one-tap receivers."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

__all__ = [
    "WhitenedChannel",
    "LinkResult",
    "whiten",
    "waterfill",
    "waterfill_enumerate",
    "svd_capacity",
    "mmse_combiner",
    "mr_combiner",
    "onetap_combiner",
    "sinr_and_se",
    "linear_receiver",
    "evaluate_schemes",
    "LINEAR_SCHEMES",
]

RANK_THRESHOLD = 1e-12


@dataclass(frozen=True)
class WhitenedChannel:
    H: np.ndarray
    L: np.ndarray
    U: np.ndarray
    s: np.ndarray
    Vh: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.sum(self.s >= RANK_THRESHOLD * self.s[0])) if self.s[0] > 0 else 0


def whiten(H, C) -> WhitenedChannel:
    """Premultiply ``H`` by the inverse Cholesky factor of ``C`` and take its SVD."""
    H = np.asarray(H, dtype=complex)
    C = np.asarray(C, dtype=complex)
    C = 0.5 * (C + C.conj().T)
    try:
        L = cholesky(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("noise covariance is not positive definite") from exc
    Ht = solve_triangular(L, H, lower=True)
    U, s, Vh = np.linalg.svd(Ht)
    return WhitenedChannel(Ht, L, U, s, Vh)


def waterfill(gains, P: float, iterations: int = 200):
    """Powers max(0, mu - 1/g_n) summing to ``P``; returns (powers, mu).

    The water level is bracketed and bisected to find the active set, after
    which mu is solved exactly on that set.
    """
    g = np.asarray(gains, dtype=float)
    if np.any(g < 0):
        raise ValueError("gains must be non-negative")
    if P <= 0:
        raise ValueError("power budget must be positive")
    pos = g > 0
    if not pos.any():
        raise ValueError("all gains are zero")
    inv = np.full(g.shape, np.inf)
    inv[pos] = 1.0 / g[pos]
    lo, hi = inv[pos].min(), inv[pos].min() + P
    for _ in range(iterations):
        mu = 0.5 * (lo + hi)
        if np.sum(np.maximum(0.0, mu - inv[pos])) > P:
            hi = mu
        else:
            lo = mu
        if hi - lo <= 1e-15 * hi:
            break
    # Solve for mu on the active set; shrink it if a member would go negative.
    active = pos & (inv < hi)
    while True:
        mu = (P + inv[active].sum()) / active.sum()
        drop = active & (inv >= mu)
        if not drop.any():
            break
        active &= ~drop
    # mu - 1/g_n written as a mean of differences, which keeps the sum at P
    # even when 1/g_n dwarfs P.
    ia = inv[active]
    p = np.zeros(g.shape)
    p[active] = (P + np.sum(ia[None, :] - ia[:, None], axis=1)) / ia.size
    return p, mu


def waterfill_enumerate(gains, P: float):
    """Reference waterfilling by trying every active set (small inputs only)."""
    g = np.asarray(gains, dtype=float)
    idx = np.flatnonzero(g > 0)
    best = None
    for r in range(1, idx.size + 1):
        for subset in itertools.combinations(idx, r):
            sub = np.array(subset)
            mu = (P + np.sum(1.0 / g[sub])) / sub.size
            p = np.zeros_like(g)
            inv = 1.0 / g[sub]
            p[sub] = (P + np.sum(inv[None, :] - inv[:, None], axis=1)) / sub.size
            if np.any(p[sub] < 0):
                continue
            # KKT: inactive modes must sit above the water level.
            rest = np.setdiff1d(idx, sub)
            if np.any(1.0 / g[rest] < mu):
                continue
            rate = np.sum(np.log2(1 + p * g))
            if best is None or rate > best[2]:
                best = (p, mu, rate)
    if best is None:
        raise ValueError("all gains are zero")
    return best[0], best[1]


@dataclass(frozen=True)
class LinkResult:
    scheme: str
    gains: np.ndarray
    powers: np.ndarray
    sinr: np.ndarray
    budget: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.sum(self.powers) > self.budget * (1 + 1e-9):
            raise ValueError("allocated power exceeds the budget")

    @property
    def se(self) -> float:
        """Sum spectral efficiency in bit per channel use."""
        return float(np.sum(np.log2(1 + self.sinr)))


def svd_capacity(wc: WhitenedChannel, P: float) -> LinkResult:
    s = wc.s[: wc.rank]
    g = s ** 2
    p, mu = waterfill(g, P)
    return LinkResult("svd", g, p, p * g, P, {"mu": mu, "rank": wc.rank})


def _as_matrix(Ht):
    return Ht.H if isinstance(Ht, WhitenedChannel) else np.asarray(Ht, dtype=complex)


def mmse_combiner(Ht, powers) -> np.ndarray:
    """Columns u_n = (sum_m p_m h_m h_m^H + I)^-1 h_n."""
    Ht = _as_matrix(Ht)
    p = np.asarray(powers, dtype=float)
    A = (Ht * p[None, :]) @ Ht.conj().T + np.eye(Ht.shape[0])
    return np.linalg.solve(A, Ht)


def mr_combiner(Ht) -> np.ndarray:
    return _as_matrix(Ht).copy()


def onetap_combiner(Ht) -> np.ndarray:
    return np.diag(np.diag(_as_matrix(Ht)))


def sinr_and_se(Ht, combiners, powers, scheme: str = "linear", budget=None) -> LinkResult:
    """Per-mode SINR with interference treated as noise.

    SINR_n = p_n |u_n^H h_n|^2 / (sum_{m != n} p_m |u_n^H h_m|^2 + ||u_n||^2)
    where u_n and h_n are the n-th columns of the combiner and channel.
    """
    Ht = _as_matrix(Ht)
    U = np.asarray(combiners, dtype=complex)
    p = np.asarray(powers, dtype=float)
    if U.shape != Ht.shape or p.shape != (Ht.shape[1],):
        raise ValueError("dimension mismatch between channel, combiners and powers")
    G = np.abs(U.conj().T @ Ht) ** 2  # G[n, m] = |u_n^H h_m|^2
    signal = np.diag(G) * p
    interference = G @ p - signal
    noise = np.sum(np.abs(U) ** 2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(signal > 0, signal / (interference + noise), 0.0)
    gains = np.abs(np.diag(Ht)) ** 2
    return LinkResult(scheme, gains, p, sinr, float(np.sum(p)) if budget is None else budget)


LINEAR_SCHEMES = ("mmse", "mr", "onetap")


def linear_receiver(Ht, P: float, scheme: str, allocation: str = "waterfill") -> LinkResult:
    """Linear receiver without precoding; powers from the diagonal gains."""
    Ht = _as_matrix(Ht)
    n = Ht.shape[1]
    if allocation == "waterfill":
        p, _ = waterfill(np.abs(np.diag(Ht)) ** 2, P)
    elif allocation == "uniform":
        p = np.full(n, P / n)
    else:
        raise ValueError(f"unknown power allocation {allocation!r}")
    if scheme == "mmse":
        U = mmse_combiner(Ht, p)
    elif scheme == "mr":
        U = mr_combiner(Ht)
    elif scheme == "onetap":
        U = onetap_combiner(Ht)
    else:
        raise ValueError(f"unknown receiver {scheme!r}")
    tag = scheme if allocation == "waterfill" else f"{scheme}-uniform"
    res = sinr_and_se(Ht, U, p, tag, P)
    return res


def evaluate_schemes(H, C, P: float, schemes=("svd",) + LINEAR_SCHEMES,
                     allocation: str = "waterfill") -> dict[str, LinkResult]:
    wc = whiten(H, C)
    out = {}
    for s in schemes:
        out[s] = svd_capacity(wc, P) if s == "svd" else linear_receiver(wc, P, s, allocation)
    return out
