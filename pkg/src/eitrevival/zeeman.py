"""Zeeman level structure and frequency bookkeeping for the Cs ground manifold.

Units used throughout the package: field in gauss, frequency in MHz
(ordinary, not angular), time in microseconds. Phases are ``2*pi*f*t``.
"""
import enum
from dataclasses import dataclass, fields

import numpy as np

GROUND_F = 3
STORAGE_F = 4
BOLTZMANN = 1.380649e-23  # J/K


class DomainError(ValueError):
    """Argument outside the physical domain of an operation."""


@dataclass(frozen=True)
class PhysicalConstants:
    g_factor_per_gauss: float = 0.35  # MHz/G, magnitude for F=3 (F=4 is opposite)
    clock_frequency: float = 9.193  # GHz
    cs_mass: float = 2.207e-25  # kg
    signal_wavelength: float = 852.0  # nm

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{f.name} must be strictly positive, got {value!r}")


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class SublevelIndex:
    f: int
    m: int

    def __post_init__(self):
        if self.f not in (GROUND_F, STORAGE_F):
            raise DomainError(f"hyperfine level must be 3 or 4, got {self.f}")
        if abs(self.m) > self.f:
            raise DomainError(f"|m| must be <= {self.f}, got m={self.m}")


class Scheme(enum.Enum):
    """Which form of the retrieval model applies."""

    UNPOLARIZED = "unpolarized"  # all coherences with |n - m| <= 2
    SIGMA_PLUS = "sigma_plus"  # diagonal coherences n == m
    TWO_LEVEL = "two_level"  # only m = 2 and m = 3 populated

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if key == member.value.replace("_", ""):
                return member
        raise DomainError(f"unknown scheme {value!r}")


def larmor_frequency(b_field, consts=DEFAULT_CONSTANTS):
    """Larmor frequency ``g * B`` in MHz for a field in gauss."""
    negative = b_field < 0 if isinstance(b_field, (int, float)) else np.any(np.asarray(b_field) < 0)
    if negative:
        raise DomainError(f"magnetic field must be non-negative, got {b_field!r}")
    return consts.g_factor_per_gauss * b_field


def spin_wave_detuning(n, m, b_field, consts=DEFAULT_CONSTANTS):
    """Shift of the (n, m) spin wave from the clock transition, in MHz.

    The opposite sign of the F=4 g-factor is already folded in, so the shift
    is ``(n + m) * f_L``. For the diagonal coherence ``n == m`` this is
    ``2 * m * f_L``.
    """
    if abs(n) > GROUND_F or abs(m) > STORAGE_F:
        raise DomainError(f"sublevels out of range: n={n}, m={m}")
    return (n + m) * larmor_frequency(b_field, consts)


def selection_rule_allowed(n, m):
    """True if a two-photon coherence between ground n and storage m can form."""
    return abs(n) <= GROUND_F and abs(m) <= STORAGE_F and abs(n - m) <= 2


def allowed_pairs():
    """All (n, m) pairs permitted by :func:`selection_rule_allowed`."""
    return [
        (n, m)
        for n in range(-GROUND_F, GROUND_F + 1)
        for m in range(-STORAGE_F, STORAGE_F + 1)
        if selection_rule_allowed(n, m)
    ]
