"""Spin-wave interference model for the retrieved pulse amplitude.

The retrieved amplitude is

    A(t) = A(0) * |sum_{n,m} P[n, m] exp(2j*pi*(n + m)*f_L*t)|**2 * f(t, tau)

where the sum runs over ground sublevels ``n`` (F=3) and storage sublevels
``m`` (F=4). The clock frequency is a common phase and drops out of the
modulus. With sigma+ beams only ``n == m`` survives; with only ``m = 2, 3``
populated it collapses to a single cosine.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._golden import golden_section_minimize
from .zeeman import (
    DEFAULT_CONSTANTS,
    GROUND_F,
    STORAGE_F,
    DomainError,
    PhysicalConstants,
    Scheme,
    larmor_frequency,
    selection_rule_allowed,
)

SUM_TOL = 1e-12
N_GROUND = 2 * GROUND_F + 1
N_STORAGE = 2 * STORAGE_F + 1


class ValidationError(ValueError):
    """Model parameters violate an invariant."""


class EnvelopeLaw(enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    NONE = "none"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key == member.value:
                return member
        raise DomainError(f"unknown envelope law {value!r}")


@dataclass(frozen=True)
class DecayEnvelope:
    """Dephasing envelope ``f(t, tau)``; tau in microseconds."""

    law: EnvelopeLaw = EnvelopeLaw.NONE
    tau: float = None

    def __post_init__(self):
        object.__setattr__(self, "law", EnvelopeLaw.parse(self.law))
        if self.law is EnvelopeLaw.NONE:
            object.__setattr__(self, "tau", None)
        elif self.tau is None or not self.tau > 0:
            raise ValidationError(f"{self.law.value} envelope needs tau > 0, got {self.tau!r}")

    @classmethod
    def gaussian(cls, tau):
        return cls(EnvelopeLaw.GAUSSIAN, tau)

    @classmethod
    def exponential(cls, tau):
        return cls(EnvelopeLaw.EXPONENTIAL, tau)

    @classmethod
    def none(cls):
        return cls(EnvelopeLaw.NONE)

    def __call__(self, t):
        return envelope_eval(self, t)


def envelope_eval(env, t):
    """Evaluate the decay factor at storage time ``t`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("storage time must be non-negative")
    if env.law is EnvelopeLaw.GAUSSIAN:
        out = np.exp(-(t_arr / env.tau) ** 2)
    elif env.law is EnvelopeLaw.EXPONENTIAL:
        out = np.exp(-t_arr / env.tau)
    else:
        out = np.ones_like(t_arr)
    return out if out.ndim else float(out)


def _check_weights(weights, what):
    if not np.all(np.isfinite(weights)):
        raise ValidationError(f"{what} contains non-finite values")
    if np.any(weights < 0):
        raise ValidationError(f"{what} must be non-negative")
    total = weights.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ValidationError(f"{what} must sum to 1, sums to {total!r}")


@dataclass(frozen=True, eq=False)
class CoherenceMatrix:
    """Weights ``P[n, m]`` stored as a 7x9 array indexed ``[n + 3, m + 4]``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (N_GROUND, N_STORAGE):
            raise ValidationError(f"coherence matrix must be 7x9, got {w.shape}")
        for i in range(N_GROUND):
            for j in range(N_STORAGE):
                if not selection_rule_allowed(i - GROUND_F, j - STORAGE_F) and w[i, j] != 0:
                    raise ValidationError(
                        f"P[{i - GROUND_F}, {j - STORAGE_F}] violates the selection rule"
                    )
        _check_weights(w, "coherence matrix")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls):
        """Equal weight on every allowed (n, m) pair."""
        w = np.zeros((N_GROUND, N_STORAGE))
        for i in range(N_GROUND):
            for j in range(N_STORAGE):
                if selection_rule_allowed(i - GROUND_F, j - STORAGE_F):
                    w[i, j] = 1.0
        return cls(w / w.sum())

    @classmethod
    def from_entries(cls, entries):
        """Build from a ``{(n, m): weight}`` mapping, normalizing the total."""
        w = np.zeros((N_GROUND, N_STORAGE))
        for (n, m), value in entries.items():
            if abs(n) > GROUND_F or abs(m) > STORAGE_F:
                raise ValidationError(f"sublevel pair out of range: {(n, m)}")
            w[n + GROUND_F, m + STORAGE_F] = value
        total = w.sum()
        if not total > 0:
            raise ValidationError("coherence weights are all zero")
        return cls(w / total)

    @classmethod
    def diagonal(cls, diag):
        w = np.zeros((N_GROUND, N_STORAGE))
        for m in range(-GROUND_F, GROUND_F + 1):
            w[m + GROUND_F, m + STORAGE_F] = diag.weights[m + GROUND_F]
        return cls(w)

    def entry(self, n, m):
        return float(self.weights[n + GROUND_F, m + STORAGE_F])

    def harmonic_coefficients(self):
        """Coefficients of ``exp(i k theta)`` for k = n + m, from k = -7 up."""
        kmin = -GROUND_F - STORAGE_F
        coeffs = np.zeros(N_GROUND + N_STORAGE - 1)
        for i in range(N_GROUND):
            for j in range(N_STORAGE):
                coeffs[i + j] += self.weights[i, j]
        return coeffs, kmin


@dataclass(frozen=True, eq=False)
class DiagonalCoherences:
    """Weights ``p_m`` for m = -3..3 stored at index ``m + 3``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (N_GROUND,):
            raise ValidationError(f"diagonal coherences need 7 entries, got {w.shape}")
        _check_weights(w, "diagonal coherences")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_mapping(cls, mapping):
        w = np.zeros(N_GROUND)
        for m, value in mapping.items():
            if abs(m) > GROUND_F:
                raise ValidationError(f"m out of range: {m}")
            w[m + GROUND_F] = value
        total = w.sum()
        if not total > 0:
            raise ValidationError("coherence weights are all zero")
        return cls(w / total)

    @classmethod
    def two_level(cls, p2):
        if not 0.0 <= p2 <= 1.0:
            raise DomainError(f"p2 must lie in [0, 1], got {p2!r}")
        w = np.zeros(N_GROUND)
        w[2 + GROUND_F] = p2
        w[3 + GROUND_F] = 1.0 - p2
        return cls(w)

    def p(self, m):
        return float(self.weights[m + GROUND_F])

    @property
    def support(self):
        return tuple(int(i) - GROUND_F for i in np.nonzero(self.weights)[0])

    def harmonic_coefficients(self):
        """Coefficients of ``exp(i k theta)`` for k = 2m, from k = -6 up."""
        coeffs = np.zeros(2 * N_GROUND - 1)
        coeffs[::2] = self.weights
        return coeffs, -2 * GROUND_F


@dataclass(frozen=True, eq=False)
class ModelParams:
    scheme: Scheme
    coherences: object
    b_field: float
    envelope: DecayEnvelope = field(default_factory=DecayEnvelope.none)
    amplitude_scale: float = 1.0
    consts: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not self.amplitude_scale >= 0:
            raise ValidationError("amplitude_scale must be >= 0")
        if not self.b_field >= 0:
            raise DomainError("b_field must be >= 0")
        if self.scheme is Scheme.UNPOLARIZED:
            if not isinstance(self.coherences, CoherenceMatrix):
                raise ValidationError("unpolarized scheme needs a CoherenceMatrix")
        else:
            if not isinstance(self.coherences, DiagonalCoherences):
                raise ValidationError(f"{self.scheme.value} scheme needs DiagonalCoherences")
            if self.scheme is Scheme.TWO_LEVEL and not set(self.coherences.support) <= {2, 3}:
                raise ValidationError("two-level scheme allows weight on m = 2, 3 only")

    def replace(self, **changes):
        values = {
            "scheme": self.scheme,
            "coherences": self.coherences,
            "b_field": self.b_field,
            "envelope": self.envelope,
            "amplitude_scale": self.amplitude_scale,
            "consts": self.consts,
        }
        values.update(changes)
        return ModelParams(**values)

    @property
    def p2(self):
        if self.scheme is Scheme.UNPOLARIZED:
            raise AttributeError("p2 is defined for diagonal schemes only")
        return self.coherences.p(2)


def _harmonics(params):
    """Coefficients, lowest harmonic and phase multiplier for the kernel."""
    coeffs, h0 = params.coherences.harmonic_coefficients()
    if params.scheme is Scheme.UNPOLARIZED:
        return coeffs, h0, 1.0
    # even harmonics only: evaluate on theta' = 2 theta with weights p_m directly
    return coeffs[::2], h0 // 2, 2.0


def _as_times(t):
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("storage time must be non-negative")
    return t_arr


def interference(t, params):
    """Envelope-free, unit-scale interference factor ``|sum P e^{i phi}|**2``."""
    t_arr = _as_times(t)
    coeffs, h0, mult = _harmonics(params)
    theta = (mult * 2.0 * math.pi * larmor_frequency(params.b_field, params.consts)) * t_arr
    out = kernels.interference_factor(np.ascontiguousarray(theta), coeffs, h0)
    return out if np.ndim(t) else float(out[0])


def _with_carrier(t, params, carrier_mhz):
    t_arr = _as_times(t)
    coeffs, h0, mult = _harmonics(params)
    theta = mult * 2.0 * math.pi * larmor_frequency(params.b_field, params.consts) * t_arr
    total = kernels.interference_sum(theta, coeffs, h0) * np.exp(2j * math.pi * carrier_mhz * t_arr)
    out = total.real ** 2 + total.imag ** 2
    return out if np.ndim(t) else float(out[0])


def retrieval(t, params, carrier_mhz=None):
    """Retrieved amplitude for any scheme."""
    if carrier_mhz is None:
        factor = interference(t, params)
    else:
        factor = _with_carrier(t, params, carrier_mhz)
    return params.amplitude_scale * factor * envelope_eval(params.envelope, t)


def retrieval_general(t, params, carrier_mhz=None):
    """Retrieved amplitude from the full (n, m) coherence matrix.

    ``carrier_mhz`` multiplies the sum by an explicit common phase
    ``exp(2j*pi*carrier*t)``; the result is unchanged, which is why the clock
    term is omitted by default.
    """
    if params.scheme is not Scheme.UNPOLARIZED:
        raise ValidationError("retrieval_general needs the unpolarized scheme")
    return retrieval(t, params, carrier_mhz)


def retrieval_sigma_plus(t, params, carrier_mhz=None):
    """Retrieved amplitude when only diagonal coherences ``n == m`` exist."""
    if params.scheme is Scheme.UNPOLARIZED:
        raise ValidationError("retrieval_sigma_plus needs diagonal coherences")
    return retrieval(t, params, carrier_mhz)


def retrieval_two_level(t, p2, b_field, envelope=None, a0=1.0, consts=DEFAULT_CONSTANTS):
    """Closed form for coherences on m = 2 and m = 3 only.

    ``A0 * [p3**2 + p2**2 + 2*p2*p3*cos(2*w_L*t)] * f(t, tau)`` with
    ``p3 = 1 - p2``.
    """
    if not 0.0 <= p2 <= 1.0:
        raise DomainError(f"p2 must lie in [0, 1], got {p2!r}")
    envelope = envelope or DecayEnvelope.none()
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("storage time must be non-negative")
    p3 = 1.0 - p2
    omega = 2.0 * math.pi * larmor_frequency(b_field, consts)
    # p3^2 + p2^2 + 2 p2 p3 cos(x) rewritten without cancellation near the collapse
    out = a0 * ((p3 - p2) ** 2 + 4.0 * p2 * p3 * np.cos(omega * t_arr) ** 2)
    out = out * envelope_eval(envelope, t_arr)
    return out if out.ndim else float(out)


def relative_amplitude(p2):
    """Peak-to-peak over maximum for two coherences: ``4 p2 (1 - p2)``."""
    if not 0.0 <= p2 <= 1.0:
        raise DomainError(f"p2 must lie in [0, 1], got {p2!r}")
    return 4.0 * p2 * (1.0 - p2)


def invert_relative_amplitude(r, return_alternate=False):
    """Weight ``p2 <= 0.5`` that produces relative amplitude ``r``.

    The quadratic has a second root ``1 - p2``; pass ``return_alternate=True``
    to get ``(p2, 1 - p2)``.
    """
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"relative amplitude must lie in [0, 1], got {r!r}")
    # r / (2 (1 + sqrt(1 - r))) == (1 - sqrt(1 - r)) / 2 without cancellation
    p2 = r / (2.0 * (1.0 + math.sqrt(1.0 - r)))
    if return_alternate:
        return p2, 1.0 - p2
    return p2


def oscillation_period(b_field, scheme, consts=DEFAULT_CONSTANTS):
    """Revival period in microseconds: 1/f_L, or 1/(2 f_L) for diagonal schemes."""
    f_l = larmor_frequency(b_field, consts)
    if f_l == 0:
        raise DomainError("no revivals: degenerate field")
    if Scheme.parse(scheme) is Scheme.UNPOLARIZED:
        return 1.0 / f_l
    return 1.0 / (2.0 * f_l)


def revival_times(b_field, scheme, horizon, consts=DEFAULT_CONSTANTS):
    """Times ``k * T`` of full rephasing up to ``horizon`` (inclusive)."""
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    if b_field < 0:
        raise DomainError("magnetic field must be non-negative")
    period = oscillation_period(b_field, scheme, consts)
    count = int(math.floor(horizon / period * (1 + 1e-12)))
    return [k * period for k in range(count + 1)]


def _refine(func, grid, values, index, sign):
    """Golden-section refinement of a grid extremum; ``sign`` -1 for a max."""
    lo = grid[max(index - 1, 0)]
    hi = grid[min(index + 1, grid.size - 1)]
    best = values[index]
    if hi > lo:
        _, f_ref = golden_section_minimize(lambda x: sign * func(x), lo, hi, xtol=1e-12 * max(1.0, hi))
        cand = sign * f_ref
        if sign * cand < sign * best:
            best = cand
    return best


def _extrema_on_grid(func, grid):
    values = func(grid)
    i_max = int(np.argmax(values))
    i_min = int(np.argmin(values))
    scalar = lambda x: float(func(np.array([x]))[0])  # noqa: E731
    return _refine(scalar, grid, values, i_max, -1.0), _refine(scalar, grid, values, i_min, 1.0)


def oscillation_extrema(params, window, points_per_period=1000):
    """Maximum and minimum of ``A(0) * interference`` over a time window.

    The envelope is ignored. The window must cover at least one revival
    period; a dense grid locates the extrema and golden-section search
    polishes them.
    """
    t0, t1 = (float(x) for x in window)
    if t0 < 0 or not t1 > t0:
        raise DomainError(f"invalid window {window!r}")
    if params.b_field == 0:
        raise DomainError("window shorter than one period: field is zero")
    period = oscillation_period(params.b_field, params.scheme, params.consts)
    if t1 - t0 < period * (1 - 1e-12):
        raise DomainError(
            f"window of {t1 - t0:g} us is shorter than one oscillation period ({period:g} us)"
        )
    n = int(math.ceil(points_per_period * (t1 - t0) / period)) + 1
    grid = np.linspace(t0, t1, n)
    a_max, a_min = _extrema_on_grid(lambda x: interference(x, params), grid)
    return params.amplitude_scale * a_max, params.amplitude_scale * a_min


def phase_extrema(params, points_per_period=1000):
    """Extrema over one full phase cycle, independent of the field strength.

    Equal to :func:`oscillation_extrema` over any window longer than a period
    whenever B > 0, and defines the B -> 0 limit.
    """
    coeffs, h0, _ = _harmonics(params)
    grid = np.linspace(0.0, 2.0 * math.pi, points_per_period + 1)
    a_max, a_min = _extrema_on_grid(
        lambda th: kernels.interference_factor(np.ascontiguousarray(th, dtype=float), coeffs, h0),
        grid,
    )
    return params.amplitude_scale * a_max, params.amplitude_scale * a_min
