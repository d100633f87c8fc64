"""Lifetime estimates for gradient-induced and motional dephasing.

All lifetimes use the 1/e convention of the Gaussian envelope
``exp(-t**2/tau**2)`` applied to the retrieved amplitude, which is the squared
modulus of the spin-wave coherence.
"""
import math
from dataclasses import dataclass

from .zeeman import BOLTZMANN, DEFAULT_CONSTANTS, DomainError

INFINITE_LIFETIME = math.inf


@dataclass(frozen=True)
class CloudGeometry:
    temperature: float = 13.0  # uK
    rms_size: float = 0.03  # cm, 1/e radius along the gradient (assumed, not measured)
    beam_angle: float = math.radians(0.5)  # rad
    wavelength: float = 852.0  # nm

    def __post_init__(self):
        for name in ("temperature", "rms_size", "beam_angle", "wavelength"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be strictly positive, got {value!r}")


def _gradient_rate(cloud, m_f, consts):
    # 1/tau per mG/cm of gradient, in 1/us
    g = consts.g_factor_per_gauss
    return 2.0 * math.pi * 2.0 * abs(m_f) * g * 1e-3 * cloud.rms_size / math.sqrt(2.0)


def gradient_lifetime(gradient, cloud=CloudGeometry(), m_f=3, consts=DEFAULT_CONSTANTS):
    """Lifetime in us set by a linear field gradient in mG/cm.

    A Gaussian density ``exp(-z**2/s**2)`` in a gradient ``G`` spreads the
    spin-wave frequency ``2 m g G z``. Averaging the phase factor gives a
    coherence ``exp(-(k s)**2 / 4)`` with ``k = 2 pi 2 m g G t``; squaring it
    yields ``exp(-t**2/tau**2)`` with ``tau = sqrt(2) / (2 pi 2 m g G s)``.
    """
    if gradient < 0:
        raise DomainError("gradient magnitude must be non-negative")
    rate = _gradient_rate(cloud, m_f, consts) * gradient
    if rate == 0:
        return INFINITE_LIFETIME
    return 1.0 / rate


def gradient_from_lifetime(tau, cloud=CloudGeometry(), m_f=3, consts=DEFAULT_CONSTANTS):
    """Inverse of :func:`gradient_lifetime`; returns mG/cm."""
    if not tau > 0:
        raise DomainError("lifetime must be positive")
    if math.isinf(tau):
        return 0.0
    if m_f == 0:
        raise DomainError("m_f = 0 coherence is insensitive to field gradients")
    return 1.0 / (_gradient_rate(cloud, m_f, consts) * tau)


def spin_wave_wavenumber(cloud):
    """``|k_sig - k_con|`` in rad/m for beams crossing at ``beam_angle``."""
    return 4.0 * math.pi / (cloud.wavelength * 1e-9) * math.sin(cloud.beam_angle / 2.0)


def thermal_velocity(cloud, consts=DEFAULT_CONSTANTS):
    """One-dimensional rms velocity in m/s."""
    return math.sqrt(BOLTZMANN * cloud.temperature * 1e-6 / consts.cs_mass)


def motional_lifetime(cloud=CloudGeometry(), consts=DEFAULT_CONSTANTS):
    """Lifetime in us from thermal motion washing out the spin-wave grating."""
    k = spin_wave_wavenumber(cloud)
    if k == 0:
        return INFINITE_LIFETIME
    return 1e6 / (k * thermal_velocity(cloud, consts))


def combined_lifetime(*taus):
    """Gaussian rates add in quadrature: ``1/tau**2 = sum 1/tau_i**2``."""
    rate = sum(0.0 if math.isinf(t) else 1.0 / t ** 2 for t in taus)
    if rate == 0:
        return INFINITE_LIFETIME
    return 1.0 / math.sqrt(rate)
