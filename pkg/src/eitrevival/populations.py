"""From pumping quality and two-photon detuning to diagonal coherence weights.

Each diagonal spin wave ``m`` is written with strength ``q_m * S(delta - 2 m f_L)``,
where ``q_m`` is the pumped share of sublevel ``m`` and ``S`` is a unit-peak
resonance of full width ``eit_width``. Detuning the control beam towards the
``m = 3`` resonance therefore favours the stretched state.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .interference import DiagonalCoherences, ModelParams, phase_extrema, relative_amplitude
from .zeeman import DEFAULT_CONSTANTS, GROUND_F, DomainError, Scheme, larmor_frequency

_SECH_HALF = math.acosh(2.0)  # sech(x) = 1/2 at x = acosh(2)


class RemainderPolicy(enum.Enum):
    ALL_IN_NEXT_LOWER = "all_in_next_lower"
    UNIFORM_BELOW = "uniform_below"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.value.replace("_", "")):
                return member
        raise DomainError(f"unknown remainder policy {value!r}")


class Lineshape(enum.Enum):
    """Resonance profile of the two-photon storage process."""

    SECH = "sech"
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key == member.value:
                return member
        raise DomainError(f"unknown lineshape {value!r}")


@dataclass(frozen=True)
class PumpState:
    polarized_fraction: float = 0.8
    remainder_policy: RemainderPolicy = RemainderPolicy.ALL_IN_NEXT_LOWER

    def __post_init__(self):
        object.__setattr__(self, "remainder_policy", RemainderPolicy.parse(self.remainder_policy))
        if not 0.0 <= self.polarized_fraction <= 1.0:
            raise DomainError(f"polarized_fraction must lie in [0, 1], got {self.polarized_fraction!r}")


@dataclass(frozen=True)
class SelectivityModel:
    eit_width: float = 2.0  # MHz, full width at half maximum
    detuning: float = 0.0  # MHz
    lineshape: Lineshape = Lineshape.SECH

    def __post_init__(self):
        object.__setattr__(self, "lineshape", Lineshape.parse(self.lineshape))
        if not self.eit_width > 0:
            raise DomainError(f"eit_width must be positive, got {self.eit_width!r}")

    def with_detuning(self, detuning):
        return SelectivityModel(self.eit_width, detuning, self.lineshape)

    def with_width(self, eit_width):
        return SelectivityModel(eit_width, self.detuning, self.lineshape)


def log_resonance(x, width, lineshape=Lineshape.SECH):
    """Natural log of :func:`resonance`, finite arbitrarily far off resonance."""
    x = np.asarray(x, dtype=float)
    lineshape = Lineshape.parse(lineshape)
    if lineshape is Lineshape.LORENTZIAN:
        return -np.log1p((2.0 * x / width) ** 2)
    if lineshape is Lineshape.GAUSSIAN:
        return -4.0 * math.log(2.0) * (x / width) ** 2
    u = np.abs(2.0 * _SECH_HALF * x / width)
    return math.log(2.0) - u - np.log1p(np.exp(-2.0 * u))


def resonance(x, width, lineshape=Lineshape.SECH):
    """Unit-peak resonance profile with full width ``width`` at half maximum."""
    return np.exp(log_resonance(x, width, lineshape))


def pump_distribution(pump):
    """Base weights ``q_m`` (index ``m + 3``) left behind by optical pumping."""
    q = np.zeros(2 * GROUND_F + 1)
    q[-1] = pump.polarized_fraction
    rest = 1.0 - pump.polarized_fraction
    if pump.remainder_policy is RemainderPolicy.ALL_IN_NEXT_LOWER:
        q[-2] = rest
    else:
        q[:-1] = rest / (q.size - 1)
    return q


def _check_base(q):
    q = np.asarray(q, dtype=float)
    if q.shape != (2 * GROUND_F + 1,):
        raise DomainError(f"base weights need 7 entries, got shape {q.shape}")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
        raise DomainError("base weights must be non-negative and sum to 1")
    return q


def _log_lines(sel, b_field, consts):
    # diagonal spin-wave shifts 2 m f_L for m = -3..3
    shift = 2.0 * np.arange(-GROUND_F, GROUND_F + 1) * larmor_frequency(b_field, consts)
    return log_resonance(sel.detuning - shift, sel.eit_width, sel.lineshape)


def selectivity_weights(q, sel, b_field, consts=DEFAULT_CONSTANTS):
    """Unnormalized storage strengths ``q_m * S(delta - 2 m f_L)``."""
    q = _check_base(q)
    return q * np.exp(_log_lines(sel, b_field, consts))


def storage_weight(q, sel, b_field, consts=DEFAULT_CONSTANTS):
    """Total storage strength; the retrieved amplitude scales as its square."""
    return float(selectivity_weights(q, sel, b_field, consts).sum())


def apply_detuning_selectivity(q, sel, b_field, consts=DEFAULT_CONSTANTS):
    """Normalized coherence weights ``p_m`` for the given detuning and field.

    Normalization happens in log space, so the relative weights stay defined
    even where every line has decayed below the smallest double.
    """
    q = _check_base(q)
    present = q > 0
    log_w = np.full(q.size, -np.inf)
    log_w[present] = np.log(q[present]) + _log_lines(sel, b_field, consts)[present]
    w = np.exp(log_w - log_w[present].max())
    return DiagonalCoherences(w / w.sum())


def relative_amplitude_of(coherences, points_per_period=1000):
    """Relative oscillation amplitude for arbitrary diagonal weights.

    Two or fewer populated coherences use the closed form; otherwise the
    extrema are located numerically.
    """
    support = coherences.support
    if len(support) <= 1:
        return 0.0
    if len(support) == 2:
        a, b = (coherences.p(m) for m in support)
        return relative_amplitude(a / (a + b)) if a + b > 0 else 0.0
    params = ModelParams(Scheme.SIGMA_PLUS, coherences, 1.0)
    a_max, a_min = phase_extrema(params, points_per_period)
    return (a_max - a_min) / a_max


def predicted_relative_amplitude(q, sel, b_field, consts=DEFAULT_CONSTANTS):
    return relative_amplitude_of(apply_detuning_selectivity(q, sel, b_field, consts))


def calibrate_width(
    q,
    b_field=2.6,
    detuning=6.5,
    target_r=0.25,
    lineshape=Lineshape.SECH,
    consts=DEFAULT_CONSTANTS,
    bracket=(1e-3, 1e3),
):
    """Resonance width that makes the relative amplitude equal ``target_r``.

    Defaults reproduce the anchor of R = 0.25 at 6.5 MHz detuning and 2.6 G.
    """
    def gap(log_w):
        sel = SelectivityModel(math.exp(log_w), detuning, lineshape)
        return predicted_relative_amplitude(q, sel, b_field, consts) - target_r

    lo, hi = (math.log(x) for x in bracket)
    if gap(lo) * gap(hi) > 0:
        raise DomainError(f"target relative amplitude {target_r} not reachable within width bracket")
    return math.exp(brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14))
