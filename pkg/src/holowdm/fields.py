"""Line-of-sight Green's function, its wavenumber transform and source patterns."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import QuadratureSpec, gauss_legendre, integrate

__all__ = [
    "scalar_green",
    "farfield_green",
    "green_wavenumber",
    "green_wavenumber_direct",
    "truncation_halfwidth",
    "decay_length",
    "bandwidth_3db",
    "WavenumberSpectrum",
    "radiation_pattern",
    "beam_direction",
]


def _check_d(d):
    if np.any(np.asarray(d) <= 0):
        raise ValueError("distance d must be positive")


def scalar_green(z, d, kappa):
    """(d^2/4pi) exp(i kappa r) / r^3 with r = sqrt(z^2 + d^2)."""
    _check_d(d)
    z = np.asarray(z, dtype=float)
    r = np.sqrt(z * z + d * d)
    # Written so that z = 0 reproduces farfield_green bit for bit.
    return (d / r) ** 2 * (np.exp(1j * kappa * r) / (4 * np.pi * r))


def farfield_green(d, kappa):
    _check_d(d)
    return np.exp(1j * kappa * d) / (4 * np.pi * d)


def decay_length(d: float, ratio: float) -> float:
    """Offset z at which |g(z, d)| has fallen to ``ratio`` times |g(0, d)|."""
    return d * math.sqrt(ratio ** (-2.0 / 3.0) - 1.0)


def truncation_halfwidth(d: float, ratio: float = 1e-6) -> float:
    return decay_length(d, ratio)


# Contour integration.  Writing z = d sinh(w) turns the transform into
#   (1/4pi) int exp(i d (kappa cosh w - kz sinh w)) / cosh(w)^2 dw,
# whose phase has a single saddle.  Propagating wavenumbers follow the steepest
# descent path through it; evanescent ones use a horizontal line in the strip
# free of the poles at Im w = pi/2.
_T_DECAY = 60.0
_EVANESCENT_SHIFT = math.pi / 3


def _propagating(kz, d, kappa, n):
    t, w = gauss_legendre(n)
    beta = np.sqrt(kappa * kappa - kz * kz)
    w0 = np.arctanh(kz / kappa)
    q = _T_DECAY / (beta * d)
    xmax = np.arccosh(0.5 * (q + np.sqrt(q * q + 4)))
    # Also stop where the 1/cosh^2 factor is negligible.
    xmax = np.minimum(xmax, 0.5 * _T_DECAY + np.abs(w0))
    x = xmax[:, None] * t[None, :]
    sech = 1.0 / np.cosh(x)
    u = x + 1j * np.arctan(np.sinh(x))  # gudermannian
    du = 1 + 1j * sech
    amp = np.exp(-beta[:, None] * d * np.sinh(x) * np.tanh(x))
    f = amp * du / np.cosh(u + w0[:, None]) ** 2
    return np.exp(1j * beta * d) * (f @ w) * xmax / (4 * np.pi)


def _evanescent(kz, d, kappa, n):
    t, w = gauss_legendre(n)
    akz = np.abs(kz)
    gamma = np.sqrt(akz * akz - kappa * kappa)
    w1 = np.arctanh(kappa / akz)
    s = math.sin(_EVANESCENT_SHIFT)
    xmax = np.arccosh(1 + _T_DECAY / (d * gamma * s))
    xmax = np.minimum(xmax, 0.5 * _T_DECAY + w1)
    x = xmax[:, None] * t[None, :]
    v = x + 1j * _EVANESCENT_SHIFT
    f = np.exp(1j * d * gamma[:, None] * np.sinh(v)) / np.cosh(w1[:, None] - v) ** 2
    return (f @ w) * xmax / (4 * np.pi)


def green_wavenumber(kappa_z, d: float, kappa: float, n_nodes: int = 96, chunk: int = 4096):
    """Wavenumber transform G(kz) = int g(z, d) exp(-i kz z) dz.

    Evaluated by deforming the integration path into the complex plane, which
    is exact (no truncation of the slowly decaying tail) and costs ``n_nodes``
    evaluations per wavenumber; the default is converged to roundoff.  Accepts arrays; the result is even in ``kz``.
    """
    _check_d(d)
    kz = np.abs(np.asarray(kappa_z, dtype=float))
    shape = kz.shape
    kz = kz.ravel().copy()
    # The two parametrisations meet at |kz| = kappa; step off that point.
    edge = np.abs(kz - kappa) < 1e-9 * kappa
    kz[edge] = kappa * (1 - 1e-9)
    out = np.empty(kz.size, dtype=complex)
    prop = kz < kappa
    for mask, fn in ((prop, _propagating), (~prop, _evanescent)):
        idx = np.flatnonzero(mask)
        for start in range(0, idx.size, chunk):
            sel = idx[start:start + chunk]
            out[sel] = fn(kz[sel], d, kappa, n_nodes)
    return out.reshape(shape) if shape else out[0]


def green_wavenumber_direct(kappa_z: float, d: float, kappa: float,
                            ratio: float = 1e-6, rel_tol: float = 1e-8):
    """Reference transform by adaptive quadrature on the truncated real line.

    The window is ``|z| <= z_max`` with ``|g(z_max)| = ratio * |g(0)|``.
    Slow (hundreds of thousands of panels); intended for verification.
    """
    zmax = truncation_halfwidth(d, ratio)
    kz = float(kappa_z)
    # Absolute floor tied to the stationary-phase size of the transform.
    scale = 1.0 / (4 * np.pi * math.sqrt(kappa * d))
    spec = QuadratureSpec(rel_tol=rel_tol, abs_tol=rel_tol * scale,
                          wavelength_hint=2 * np.pi / (kappa + abs(kz)))

    # Integrate the even and odd parts on [0, zmax] only.
    def f(z):
        g = scalar_green(z, d, kappa)
        return 2 * g * np.cos(kz * z)

    res = integrate(f, 0.0, zmax, spec)
    return complex(res.value)


def bandwidth_3db(d: float, kappa: float, tol: float = 1e-10) -> float:
    """Half-width of the band where |G|^2 stays within 3 dB of |G(0)|^2."""
    peak = abs(green_wavenumber(0.0, d, kappa)) ** 2
    lo, hi = 0.0, kappa
    while hi - lo > tol * kappa:
        mid = 0.5 * (lo + hi)
        if abs(green_wavenumber(mid, d, kappa)) ** 2 >= 0.5 * peak:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class WavenumberSpectrum:
    """Samples of G on a uniform wavenumber grid with cubic interpolation."""

    kz: np.ndarray
    values: np.ndarray
    d: float
    kappa: float
    meta: dict = field(default_factory=dict)

    @classmethod
    def sample(cls, d: float, kappa: float, kz_max: float, step: float,
               n_nodes: int = 96) -> "WavenumberSpectrum":
        n = int(math.ceil(kz_max / step))
        kz = np.linspace(-n * step, n * step, 2 * n + 1)
        vals = green_wavenumber(kz, d, kappa, n_nodes=n_nodes)
        return cls(kz, vals, d, kappa, {"method": "contour", "n_nodes": n_nodes, "step": step})

    @classmethod
    def for_receiver(cls, d: float, kappa: float, Lr_max: float, kz_max=None):
        """Grid fine enough to resolve features of width 2 pi / Lr_max."""
        return cls.sample(d, kappa, 2 * kappa if kz_max is None else kz_max,
                          2 * np.pi / (10 * Lr_max))

    def __call__(self, kappa_z):
        spline_re = CubicSpline(self.kz, self.values.real)
        spline_im = CubicSpline(self.kz, self.values.imag)
        k = np.asarray(kappa_z, dtype=float)
        return spline_re(k) + 1j * spline_im(k)


def beam_direction(m_offset: int, Ls: float, lam: float) -> float:
    """Polar angle towards which the mode with offset ``m_offset`` radiates."""
    c = lam * m_offset / Ls
    if abs(c) > 1:
        raise ValueError(
            f"mode offset {m_offset} steers outside the visible region (|cos theta| = {abs(c):.3g} > 1)")
    return math.acos(c)


def radiation_pattern(theta, m: int, scenario) -> np.ndarray:
    """Normalised far-field power pattern of source mode ``m`` (1-based)."""
    N = scenario.N
    if not 1 <= m <= N:
        raise ValueError(f"mode index {m} outside 1..{N}")
    off = m - 1 - (N - 1) // 2
    beam_direction(off, scenario.Ls, scenario.lam)
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0) | (theta >= np.pi)):
        raise ValueError("theta must lie in (0, pi)")
    return np.sin(theta) ** 6 * np.sinc(scenario.Ls / scenario.lam * np.cos(theta) - off) ** 2
