"""Physical constants, link geometry and validated configuration."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "Scenario",
    "ValidationError",
    "max_modes",
    "validate",
    "parse_config",
    "load_config",
    "serialize",
    "system_snr",
]


@dataclass(frozen=True)
class PhysicalConstants:
    mu0: float = 4e-7 * math.pi
    c: float = 299_792_458.0

    @property
    def Z0(self) -> float:
        return self.mu0 * self.c


CONSTANTS = PhysicalConstants()


class ValidationError(ValueError):
    """A configuration violates a scenario invariant."""


def max_modes(Ls: float, lam: float) -> int:
    """Largest odd number of Fourier modes a source of length ``Ls`` supports."""
    # Guard the floor against ratios like 0.2 / 0.01 = 19.999999999999996.
    return 2 * int(math.floor(Ls / lam + 1e-9)) + 1


@dataclass(frozen=True)
class Scenario:
    """Immutable description of one link.

    Lengths are in metres, ``Ps`` in A^2, ``sigma2_emi`` in V^2/m^2 and
    ``sigma2_hdw`` in V^2.  ``emi`` selects the interference angular density
    (``isotropic`` or ``band`` over elevations ``[emi_theta1, emi_theta2)``).
    Dipole parameters of the MIMO baseline default to half-wavelength source
    spacing and a receive spacing stretched by ``Lr/Ls`` so both ends use the
    same number of RF chains.
    """

    Ls: float = 0.2
    Lr: float = 1.0
    d: float = 5.0
    lam: float = 0.01
    N: int | None = None
    Ps: float = 1e-7
    snr_db: float = 90.0
    sigma2_emi: float | None = None
    sigma2_hdw: float = 0.0
    emi: str = "isotropic"
    emi_theta1: float = math.pi / 3
    emi_theta2: float = 2 * math.pi / 3
    dipole_size: float | None = None
    dipole_spacing_s: float | None = None
    dipole_spacing_r: float | None = None
    constants: PhysicalConstants = field(default=CONSTANTS, compare=False)

    def __post_init__(self):
        for name in ("Ls", "Lr", "d", "lam", "Ps"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"non-positive dimension: {name}={v!r}")
        if self.Lr < self.Ls * (1 - 1e-12):
            raise ValidationError(
                f"receiver shorter than source: Lr={self.Lr} < Ls={self.Ls}")
        n_max = max_modes(self.Ls, self.lam)
        if self.N is None:
            object.__setattr__(self, "N", n_max)
        n = self.N
        if isinstance(n, float) and n.is_integer():
            n = int(n)
            object.__setattr__(self, "N", n)
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValidationError(f"mode count must be a positive integer, got {n!r}")
        if n % 2 == 0:
            raise ValidationError(f"even mode count: N={n}")
        if n > n_max:
            raise ValidationError(f"mode count N={n} exceeds N_max={n_max}")
        if self.sigma2_hdw < 0:
            raise ValidationError("sigma2_hdw must be non-negative")
        if self.sigma2_emi is not None and self.sigma2_emi < 0:
            raise ValidationError("sigma2_emi must be non-negative")
        if self.emi not in ("isotropic", "band"):
            raise ValidationError(f"unknown emi model {self.emi!r}")
        if self.emi == "band" and not (0 <= self.emi_theta1 < self.emi_theta2 <= math.pi):
            raise ValidationError("emi band needs 0 <= emi_theta1 < emi_theta2 <= pi")
        for name in ("dipole_size", "dipole_spacing_s", "dipole_spacing_r"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValidationError(f"non-positive dimension: {name}={v!r}")

    # Derived quantities.
    @property
    def kappa(self) -> float:
        return 2 * math.pi / self.lam

    @property
    def N_max(self) -> int:
        return max_modes(self.Ls, self.lam)

    @property
    def P(self) -> float:
        """Power constraint on the effective inputs, (kappa Z0)^2 Ps."""
        return (self.kappa * self.constants.Z0) ** 2 * self.Ps

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def sigma2(self) -> float:
        """Total noise level implied by the system SNR."""
        return self.P / self.snr

    @property
    def noise_emi(self) -> float:
        return self.sigma2 if self.sigma2_emi is None else self.sigma2_emi

    @property
    def power_budget(self) -> float:
        """Budget on sum |x_n|^2 such that the system SNR reaches P / sigma^2."""
        return self.P * self.Ls

    @property
    def mode_offsets(self) -> np.ndarray:
        """Centred integer offsets m - 1 - (N - 1)/2 for m = 1..N."""
        return np.arange(self.N) - (self.N - 1) // 2

    @property
    def delta(self) -> float:
        return self.lam / 2 if self.dipole_size is None else self.dipole_size

    @property
    def delta_s(self) -> float:
        return self.lam / 2 if self.dipole_spacing_s is None else self.dipole_spacing_s

    @property
    def delta_r(self) -> float:
        if self.dipole_spacing_r is None:
            return self.delta_s * self.Lr / self.Ls
        return self.dipole_spacing_r

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


_ALIASES = {"lambda": "lam", "wavelength": "lam", "snr": "snr_db"}
_INT_KEYS = {"N"}
_STR_KEYS = {"emi"}
_FIELDS = {f.name for f in dataclasses.fields(Scenario)} - {"constants"}


def _coerce(key: str, value):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    if key in _STR_KEYS:
        return str(value).strip()
    if key in _INT_KEYS:
        f = float(value)
        if not f.is_integer():
            raise ValidationError(f"{key} must be an integer, got {value!r}")
        return int(f)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} must be numeric, got {value!r}") from None


def validate(raw: Mapping[str, object]) -> Scenario:
    """Build a :class:`Scenario` from a key/value map.

    Keys follow the field names (``lambda`` is accepted for ``lam``).  The
    optional ``hdw_ratio`` sets ``sigma2_hdw`` as a multiple of the EMI level.
    Unknown keys are rejected.
    """
    kwargs = {}
    hdw_ratio = None
    for key, value in raw.items():
        k = _ALIASES.get(key.strip(), key.strip())
        if k == "hdw_ratio":
            hdw_ratio = _coerce(k, value)
            continue
        if k not in _FIELDS:
            raise ValidationError(f"unknown configuration key {key!r}")
        v = _coerce(k, value)
        if v is not None:
            kwargs[k] = v
    for required in ("Ls", "Lr", "d", "lam"):
        if required not in kwargs:
            raise ValidationError(f"missing required key {required!r}")
    sc = Scenario(**kwargs)
    if hdw_ratio is not None:
        if "sigma2_hdw" in kwargs:
            raise ValidationError("give either sigma2_hdw or hdw_ratio, not both")
        sc = sc.replace(sigma2_hdw=hdw_ratio * sc.noise_emi)
    return sc


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def load_config(path: str | Path, overrides: Mapping[str, str] | None = None) -> Scenario:
    raw = parse_config(Path(path).read_text())
    raw.update(overrides or {})
    return validate(raw)


def serialize(sc: Scenario) -> str:
    """Config text that :func:`validate` maps back to ``sc``."""
    lines = []
    for f in dataclasses.fields(Scenario):
        if f.name == "constants":
            continue
        v = getattr(sc, f.name)
        key = "lambda" if f.name == "lam" else f.name
        lines.append(f"{key} = {'none' if v is None else repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def system_snr(sc: Scenario, powers) -> float:
    """System SNR (linear) for per-mode powers ``|x_n|^2``."""
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("negative power entries")
    return float(p.sum() / (sc.sigma2 * sc.Ls))
