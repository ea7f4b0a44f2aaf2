"""Spatial basis families, their wavenumber transforms and cross-correlations.

Every basis element used in the package is a truncated complex exponential

    e(x) = A exp(i k x)   for |x - c| <= h,   0 otherwise,

(Fourier modes have ``k != 0``, dipoles have ``k = 0``).  The cross-correlation
of two such elements is piecewise of the form ``coef * u**j * exp(i w u)``,
which lets every double integral against a stationary kernel collapse to a
handful of one-dimensional moments (see :mod:`holowdm.channel`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExpRect",
    "BasisFamily",
    "Piece",
    "fourier_source_family",
    "fourier_receive_family",
    "dipole_family",
    "dipole_count",
    "fourier_source",
    "fourier_source_transform",
    "fourier_receive",
    "fourier_receive_transform",
    "dipole_basis",
    "correlation_pieces",
    "basis_cross_correlation",
    "evaluate_pieces",
]


@dataclass(frozen=True)
class ExpRect:
    amp: complex
    k: float
    c: float
    h: float

    @property
    def lo(self) -> float:
        return self.c - self.h

    @property
    def hi(self) -> float:
        return self.c + self.h

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x - self.c) <= self.h
        return np.where(inside, self.amp * np.exp(1j * self.k * x), 0.0)

    def transform(self, kappa_z):
        """int e(x) exp(-i kz x) dx."""
        kz = np.asarray(kappa_z, dtype=float)
        dk = kz - self.k
        return (self.amp * np.exp(-1j * dk * self.c) * 2 * self.h
                * np.sinc(dk * self.h / np.pi))


@dataclass(frozen=True)
class BasisFamily:
    kind: str
    length: float
    elements: tuple[ExpRect, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> ExpRect:
        return self.elements[i]

    def sample(self, x) -> np.ndarray:
        """Matrix of element values, shape (len(self), len(x))."""
        return np.stack([e(x) for e in self.elements])

    def transforms(self, kappa_z) -> np.ndarray:
        return np.stack([e.transform(kappa_z) for e in self.elements])


def _check_mode(m: int, N: int):
    if not 1 <= m <= N:
        raise ValueError(f"mode index {m} outside 1..{N}")


def _wavenumber(m: int, sc) -> float:
    return 2 * math.pi * (m - 1 - (sc.N - 1) // 2) / sc.Ls


def fourier_source_family(sc) -> BasisFamily:
    amp = 1 / math.sqrt(sc.Ls)
    return BasisFamily("fourier-source", sc.Ls, tuple(
        ExpRect(amp, _wavenumber(m, sc), 0.0, sc.Ls / 2) for m in range(1, sc.N + 1)))


def fourier_receive_family(sc) -> BasisFamily:
    # Receive modes share the source's wavenumber grid but span Lr with unit amplitude.
    return BasisFamily("fourier-receive", sc.Lr, tuple(
        ExpRect(1.0, _wavenumber(n, sc), 0.0, sc.Lr / 2) for n in range(1, sc.N + 1)))


def fourier_source(m: int, s, sc):
    _check_mode(m, sc.N)
    return fourier_source_family(sc)[m - 1](s)


def fourier_source_transform(m: int, kappa_z, sc):
    _check_mode(m, sc.N)
    off = m - 1 - (sc.N - 1) // 2
    return math.sqrt(sc.Ls) * np.sinc((np.asarray(kappa_z) / (2 * np.pi) - off / sc.Ls) * sc.Ls)


def fourier_receive(n: int, r, sc):
    _check_mode(n, sc.N)
    return fourier_receive_family(sc)[n - 1](r)


def fourier_receive_transform(n: int, kappa_z, sc):
    _check_mode(n, sc.N)
    off = n - 1 - (sc.N - 1) // 2
    return sc.Lr * np.sinc((np.asarray(kappa_z) / (2 * np.pi) - off / sc.Ls) * sc.Lr)


def dipole_count(length: float, spacing: float) -> int:
    return int(math.floor(length / spacing + 1e-9)) + 1


def dipole_family(sc, role: str, delta: float | None = None,
                  spacing: float | None = None) -> BasisFamily:
    """Rectangular dipoles of width ``delta`` spaced by ``spacing``.

    Source dipoles carry amplitude ``1/sqrt(delta)``; receive dipoles have unit
    amplitude.  The first centre sits at the segment's lower end.
    """
    if role not in ("source", "receive"):
        raise ValueError("role must be 'source' or 'receive'")
    delta = sc.delta if delta is None else delta
    if spacing is None:
        spacing = sc.delta_s if role == "source" else sc.delta_r
    if spacing < delta * (1 - 1e-12):
        raise ValueError(f"dipoles overlap: spacing {spacing} < size {delta}")
    L = sc.Ls if role == "source" else sc.Lr
    n = dipole_count(L, spacing)
    centers = -L / 2 + spacing * np.arange(n)
    if centers[-1] > L / 2 * (1 + 1e-9) + 1e-12:
        raise ValueError("dipole centre lies beyond the segment")
    amp = 1 / math.sqrt(delta) if role == "source" else 1.0
    return BasisFamily(f"dipole-{role}", L, tuple(
        ExpRect(amp, 0.0, float(c), delta / 2) for c in centers))


def dipole_basis(index: int, position, role: str, sc, delta=None, spacing=None):
    fam = dipole_family(sc, role, delta, spacing)
    if not 1 <= index <= len(fam):
        raise ValueError(f"dipole index {index} outside 1..{len(fam)}")
    return fam[index - 1](position).real


@dataclass(frozen=True)
class Piece:
    """Interval ``[lo, hi]`` on which c(u) = sum coef * u**power * exp(i omega u)."""

    lo: float
    hi: float
    coef: np.ndarray
    power: np.ndarray
    omega: np.ndarray


_TAYLOR_TERMS = 5


def correlation_pieces(psi: ExpRect, phi: ExpRect, drop: float = 1e-14) -> list[Piece]:
    """Closed form of c(u) = int conj(psi(r)) phi(r - u) dr.

    On each piece c(u) = K exp(-i p u) int_A^B exp(i D x) dx with D = p - q
    and overlap ends A, B that are either fixed or move with u.  When D is
    tiny against the support the integral is expanded in powers of D around
    the centre of ``psi``, avoiding the cancellation in (e^{iDB} - e^{iDA}) / D.
    """
    K = np.conj(psi.amp) * phi.amp
    p, q = phi.k, psi.k
    delta = p - q
    scale = max(psi.h, phi.h)
    series = abs(delta) * scale < 1e-3
    n_terms = 1 if delta == 0 else _TAYLOR_TERMS
    x0 = psi.c
    bps = sorted({psi.lo - phi.hi, psi.lo - phi.lo, psi.hi - phi.hi, psi.hi - phi.lo})
    pieces = []
    for lo, hi in zip(bps[:-1], bps[1:]):
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            continue
        mid = 0.5 * (lo + hi)
        # Which endpoint of the overlap moves with u on this piece.
        a_moves = mid + phi.lo > psi.lo
        b_moves = mid + phi.hi < psi.hi
        terms: dict[tuple[int, float], complex] = {}

        def add(j, w, c):
            terms[(j, w)] = terms.get((j, w), 0.0) + c

        if series:
            pre = K * np.exp(1j * delta * x0)
            for sign, moves, fixed, offset in ((1, b_moves, psi.hi, phi.hi),
                                               (-1, a_moves, psi.lo, phi.lo)):
                for k in range(n_terms):
                    c = sign * pre * (1j * delta) ** k / math.factorial(k + 1)
                    if moves:
                        # (u + offset - x0)^(k+1) expanded in powers of u
                        e = offset - x0
                        for j in range(k + 2):
                            add(j, -p, c * math.comb(k + 1, j) * e ** (k + 1 - j))
                    else:
                        add(0, -p, c * (fixed - x0) ** (k + 1))
        else:
            inv = K / (1j * delta)
            for sign, moves, fixed, offset in ((1, b_moves, psi.hi, phi.hi),
                                               (-1, a_moves, psi.lo, phi.lo)):
                if moves:
                    add(0, -q, sign * inv * np.exp(1j * delta * offset))
                else:
                    add(0, -p, sign * inv * np.exp(1j * delta * fixed))
        tol = drop * abs(K) * (hi - lo + 2 * scale)
        kept = [(j, w, c) for (j, w), c in terms.items() if abs(c) > tol]
        if not kept:
            continue
        j, w, c = zip(*kept)
        pieces.append(Piece(lo, hi, np.array(c, dtype=complex),
                            np.array(j, dtype=int), np.array(w, dtype=float)))
    return pieces


def evaluate_pieces(pieces: list[Piece], u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape, dtype=complex)
    for pc in pieces:
        inside = (u >= pc.lo) & (u <= pc.hi)
        if not inside.any():
            continue
        x = u[inside]
        val = np.zeros(x.shape, dtype=complex)
        for c, j, w in zip(pc.coef, pc.power, pc.omega):
            val += c * x ** j * np.exp(1j * w * x)
        # Boundary points shared by two pieces are assigned once.
        out[inside] = val
    return out


def basis_cross_correlation(family_a: BasisFamily, idx_a: int,
                            family_b: BasisFamily, idx_b: int, u):
    """c(u) = int conj(a(r)) b(r - u) dr for 1-based element indices."""
    return evaluate_pieces(correlation_pieces(family_a[idx_a - 1], family_b[idx_b - 1]), u)
