"""Synthetic retrieval curves, spectral initialization and least-squares fits."""
import math
from dataclasses import dataclass, field

import numpy as np

from .interference import (
    CoherenceMatrix,
    DecayEnvelope,
    DiagonalCoherences,
    EnvelopeLaw,
    ModelParams,
    ValidationError,
    interference,
    invert_relative_amplitude,
    retrieval,
)
from .lm import levenberg_marquardt
from .zeeman import DEFAULT_CONSTANTS, DomainError, Scheme

INFINITE_LIFETIME = math.inf
MULTI_STARTS = 3
_MIN_POINTS_FFT = 32
_PEAK_TO_MEDIAN = 6.0
_DETREND_DEGREE = 4
_MIN_BIN = 2  # unpadded bins skipped next to DC


class EstimationError(RuntimeError):
    """A curve does not carry the information an estimator needs."""


class NoOscillationError(EstimationError):
    pass


class FieldIndistinguishableError(EstimationError):
    pass


@dataclass(frozen=True, eq=False)
class RetrievalCurve:
    t: np.ndarray
    a: np.ndarray
    sigma: np.ndarray = None

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        a = np.array(self.a, dtype=float)
        if t.ndim != 1 or t.shape != a.shape:
            raise ValidationError("times and amplitudes must be 1-d arrays of equal length")
        if t.size == 0:
            raise ValidationError("empty curve")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValidationError("amplitudes must be finite and non-negative")
        sigma = None
        if self.sigma is not None:
            sigma = np.array(self.sigma, dtype=float)
            if sigma.shape != t.shape or np.any(~(sigma > 0)):
                raise ValidationError("uncertainties must be positive, one per point")
            sigma.setflags(write=False)
        t.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma", sigma)

    def __len__(self):
        return self.t.size

    @property
    def points(self):
        sig = self.sigma if self.sigma is not None else [None] * len(self)
        return list(zip(self.t.tolist(), self.a.tolist(), list(sig)))

    def is_uniform(self, rtol=1e-4):
        if len(self) < 2:
            return False
        dt = np.diff(self.t)
        return bool(np.all(np.abs(dt - dt.mean()) <= rtol * dt.mean()))


@dataclass(frozen=True)
class NoiseSpec:
    relative_sigma: float = 0.0
    floor_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.relative_sigma < 0 or self.floor_sigma < 0:
            raise ValidationError("noise levels must be non-negative")


@dataclass
class FitResult:
    params: ModelParams
    names: list
    values: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    covariance_ok: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def stderr(self):
        return dict(zip(self.names, np.sqrt(np.clip(np.diag(self.covariance), 0, None))))

    @property
    def estimates(self):
        return dict(zip(self.names, self.values))


def synthesize_curve(params, times, noise=NoiseSpec()):
    """Sample the model and add seeded Gaussian noise, clipped at zero.

    The per-point standard deviation is ``relative * model + floor``; it is
    attached as the curve's uncertainty when it is positive everywhere.
    """
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValidationError("time grid is empty")
    model = np.asarray(retrieval(t, params), dtype=float)
    sd = noise.relative_sigma * model + noise.floor_sigma
    rng = np.random.default_rng(noise.seed)
    a = np.clip(model + sd * rng.standard_normal(t.size), 0.0, None)
    sigma = sd if np.all(sd > 0) else None
    return RetrievalCurve(t, a, sigma)


def _spectrum(a, n_fft=None):
    # a quartic trend removes most of the decay envelope before windowing
    u = np.linspace(-1.0, 1.0, a.size)
    x = a - np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyfit(u, a, _DETREND_DEGREE))
    window = np.hanning(x.size)
    return np.abs(np.fft.rfft(x * window, n=n_fft))


def dominant_frequency(curve):
    """Strongest oscillation frequency in MHz of a uniformly sampled curve.

    A quartic trend is subtracted first. What remains of the low-frequency
    lobe from the decay envelope is skipped by walking down the spectrum,
    starting two bins above DC, to its first local minimum; the peak beyond
    it is refined by a parabola through the log magnitudes of the three bins
    around it.
    """
    if len(curve) < _MIN_POINTS_FFT:
        raise DomainError(f"need at least {_MIN_POINTS_FFT} points, got {len(curve)}")
    if not curve.is_uniform():
        raise DomainError("time grid is not uniform; resample first")
    dt = (curve.t[-1] - curve.t[0]) / (len(curve) - 1)
    n_fft = 4 * len(curve)  # zero padding for a smoother peak, bins of 1/(4 N dt)
    spec = _spectrum(curve.a, n_fft)
    smooth = np.convolve(spec, np.ones(5) / 5.0, mode="same")
    # oscillations with at least three periods sit beyond two unpadded bins;
    # from there, walk down whatever is left of the envelope lobe
    k = _MIN_BIN * n_fft // len(curve)
    while k + 1 < smooth.size and smooth[k + 1] < smooth[k]:
        k += 1
    k_lo = k
    if k_lo >= spec.size - 2:
        raise NoOscillationError("no oscillation detected")
    search = spec[k_lo:]
    peak = k_lo + int(np.argmax(search))
    floor = np.median(search)
    scale = np.abs(curve.a).max() * len(curve)
    if peak == k_lo or not spec[peak] > 1e-9 * scale or spec[peak] < _PEAK_TO_MEDIAN * floor:
        raise NoOscillationError("no oscillation detected")
    offset = 0.0
    if peak < spec.size - 1 and np.all(spec[peak - 1 : peak + 2] > 0):
        y0, y1, y2 = np.log(spec[peak - 1 : peak + 2])
        denom = y0 - 2.0 * y1 + y2
        if denom < 0:
            offset = min(max(0.5 * (y0 - y2) / denom, -0.5), 0.5)
    return (peak + offset) / (n_fft * dt)


def alias_field_limit(curve, scheme, consts=DEFAULT_CONSTANTS):
    """Largest field whose fundamental oscillation the sampling can resolve (G).

    Above it the fundamental passes the Nyquist frequency of the finest time
    step and the field is no longer identifiable from the samples.
    """
    dt = np.diff(curve.t)
    dt = dt[dt > 0]
    if dt.size == 0:
        return np.inf
    harmonic = 1.0 if Scheme.parse(scheme) is Scheme.UNPOLARIZED else 2.0
    return 1.0 / (2.0 * dt.min() * harmonic * consts.g_factor_per_gauss)


def frequency_resolution(curve):
    """Width of one unpadded FFT bin in MHz."""
    return 1.0 / (len(curve) * (curve.t[1] - curve.t[0]))


def local_maxima(a):
    """Indices of local maxima after a 3-point median filter.

    The filter turns every smooth peak into a two-sample plateau, so a
    maximum is a run of equal filtered values strictly above the samples on
    either side; the raw-largest sample in the run is reported.
    """
    a = np.asarray(a, dtype=float)
    if a.size < 3:
        return np.array([], dtype=int)
    med = a.copy()
    med[1:-1] = np.median(np.stack([a[:-2], a[1:-1], a[2:]]), axis=0)
    starts = np.flatnonzero(np.diff(med, prepend=np.nan) != 0)
    ends = np.append(starts[1:], med.size)
    out = []
    for s, e in zip(starts, ends):
        if s == 0 or e == med.size:
            continue
        if med[s] > med[s - 1] and med[s] > med[e]:
            out.append(s + int(np.argmax(a[s:e])))
    return np.array(out, dtype=int)


def _envelope_peaks(curve, period):
    """Per-period maxima ``(t, a)``.

    When a period spans enough samples, peaks come from :func:`local_maxima`;
    coarser sampling, or a curve without interior maxima, falls back to the
    largest sample in each period-long segment.
    """
    dt = curve.t[1] - curve.t[0]
    idx = local_maxima(curve.a) if period / dt >= 9 else np.array([], dtype=int)
    if idx.size < 2:
        seg = np.floor((curve.t - curve.t[0]) / period).astype(int)
        idx = np.array(
            [np.flatnonzero(seg == s)[np.argmax(curve.a[seg == s])] for s in np.unique(seg)]
        )
    return curve.t[idx], curve.a[idx]


def _lifetime_from_peaks(t_peak, a_peak, law):
    ok = a_peak > 1e-3 * a_peak.max()
    t_peak, a_peak = t_peak[ok], a_peak[ok]
    if t_peak.size < 2 or law is EnvelopeLaw.NONE:
        return INFINITE_LIFETIME
    x = t_peak ** 2 if law is EnvelopeLaw.GAUSSIAN else t_peak
    slope, _ = np.polyfit(x, np.log(a_peak), 1)
    if slope >= -1e-15 * (1.0 / x.max()):
        return INFINITE_LIFETIME
    return math.sqrt(-1.0 / slope) if law is EnvelopeLaw.GAUSSIAN else -1.0 / slope


def initial_guess(
    curve,
    scheme,
    envelope_law=EnvelopeLaw.GAUSSIAN,
    coherences=None,
    consts=DEFAULT_CONSTANTS,
):
    """Rough model parameters read off the curve.

    Field from the dominant frequency, lifetime from a log fit to the
    sequence of per-period maxima, ``A(0)`` from the first maximum and, for
    diagonal schemes, ``p2`` from the early-time extrema ratio.
    """
    scheme = Scheme.parse(scheme)
    envelope_law = EnvelopeLaw.parse(envelope_law)
    harmonic = 1.0 if scheme is Scheme.UNPOLARIZED else 2.0
    try:
        f_dom = dominant_frequency(curve)
    except NoOscillationError:
        f_dom = None

    if f_dom is None:
        b_field = 0.0
        period = (curve.t[-1] - curve.t[0]) / 10.0
    else:
        b_field = f_dom / (harmonic * consts.g_factor_per_gauss)
        period = 1.0 / f_dom

    t_peak, a_peak = _envelope_peaks(curve, period)
    tau = _lifetime_from_peaks(t_peak, a_peak, envelope_law)
    if envelope_law is EnvelopeLaw.NONE or math.isinf(tau):
        envelope = DecayEnvelope.none()
    else:
        envelope = DecayEnvelope(envelope_law, tau)
    a0 = float(a_peak[0]) if a_peak.size else float(curve.a.max())

    if scheme is Scheme.UNPOLARIZED:
        coherences = coherences or CoherenceMatrix.uniform()
    else:
        p2 = 0.0
        if f_dom is not None:
            # several periods, early enough that the envelope has barely moved
            horizon = max(10.0 * period, 0.05 * (curve.t[-1] - curve.t[0]))
            if not math.isinf(tau):
                horizon = min(horizon, max(0.3 * tau, 3.0 * period))
            early = curve.t - curve.t[0] <= horizon
            norm = curve.a[early] / envelope_eval_safe(envelope, curve.t[early])
            a_hi, a_lo = norm.max(), norm.min()
            r = (a_hi - a_lo) / a_hi if a_hi > 0 else 0.0
            p2 = invert_relative_amplitude(min(max(r, 0.0), 1.0))
        if scheme is Scheme.TWO_LEVEL or coherences is None:
            coherences = DiagonalCoherences.two_level(p2)
    return ModelParams(scheme, coherences, b_field, envelope, a0, consts)


def envelope_eval_safe(envelope, t):
    return np.maximum(np.asarray(envelope(t), dtype=float), 1e-300)


class _Layout:
    """Packs model parameters into the free-parameter vector of a fit."""

    def __init__(self, template, free_b=True):
        self.template = template
        self.scheme = template.scheme
        self.law = template.envelope.law
        names, lower, upper = [], [], []
        if free_b:
            names.append("b_field")
            lower.append(1e-9)
            upper.append(np.inf)
        if self.law is not EnvelopeLaw.NONE:
            names.append("tau")
            lower.append(1e-9)
            upper.append(np.inf)
        if self.scheme is Scheme.TWO_LEVEL:
            names += ["p2", "amplitude_scale"]
            lower += [0.0, 0.0]
            upper += [1.0, np.inf]
        elif self.scheme is Scheme.SIGMA_PLUS:
            names += [f"w{m}" for m in range(-3, 4)]
            lower += [0.0] * 7
            upper += [np.inf] * 7
        else:
            names.append("amplitude_scale")
            lower.append(0.0)
            upper.append(np.inf)
        self.free_b = free_b
        self.names = names
        self.lower = np.array(lower)
        self.upper = np.array(upper)

    def pack(self, params, tau_fallback):
        x = []
        if self.free_b:
            x.append(max(params.b_field, 1e-9))
        if self.law is not EnvelopeLaw.NONE:
            tau = params.envelope.tau if params.envelope.tau is not None else tau_fallback
            x.append(tau)
        if self.scheme is Scheme.TWO_LEVEL:
            x += [params.coherences.p(2), params.amplitude_scale]
        elif self.scheme is Scheme.SIGMA_PLUS:
            x += list(np.sqrt(params.amplitude_scale) * params.coherences.weights)
        else:
            x.append(params.amplitude_scale)
        return np.array(x, dtype=float)

    def unpack(self, x):
        i = 0
        b_field = self.template.b_field
        if self.free_b:
            b_field = float(x[0])
            i = 1
        envelope = DecayEnvelope.none()
        if self.law is not EnvelopeLaw.NONE:
            envelope = DecayEnvelope(self.law, float(x[i]))
            i += 1
        if self.scheme is Scheme.TWO_LEVEL:
            coherences = DiagonalCoherences.two_level(float(np.clip(x[i], 0.0, 1.0)))
            a0 = float(x[i + 1])
        elif self.scheme is Scheme.SIGMA_PLUS:
            w = np.asarray(x[i : i + 7], dtype=float)
            total = w.sum()
            coherences = DiagonalCoherences(w / total) if total > 0 else self.template.coherences
            a0 = float(total ** 2)
        else:
            coherences = self.template.coherences
            a0 = float(x[i])
        return self.template.replace(
            b_field=b_field, envelope=envelope, coherences=coherences, amplitude_scale=a0
        )

    def model(self, x, t):
        return retrieval(t, self.unpack(x))


def _weights(curve, relative_sigma, floor_sigma):
    if curve.sigma is not None:
        return 1.0 / curve.sigma
    if relative_sigma or floor_sigma:
        return 1.0 / np.maximum(relative_sigma * curve.a, floor_sigma)
    return np.ones(len(curve))


def _solve(layout, curve, weights, x0, lower, upper):
    t = curve.t

    def residual(x):
        return (curve.a - layout.model(x, t)) * weights

    return levenberg_marquardt(residual, x0, lower, upper)


def _covariance(jac, cost, n_points):
    dof = max(n_points - jac.shape[1], 1)
    jtj = jac.T @ jac
    ok = True
    try:
        cond = np.linalg.cond(jtj)
        if not np.isfinite(cond) or cond > 1e14:
            ok = False
        cov = np.linalg.pinv(jtj) * (cost / dof)
    except np.linalg.LinAlgError:
        ok = False
        cov = np.full(jtj.shape, np.nan)
    return 0.5 * (cov + cov.T), ok


def fit_curve(
    curve,
    scheme,
    guess=None,
    bounds=None,
    envelope_law=EnvelopeLaw.GAUSSIAN,
    relative_sigma=0.0,
    floor_sigma=0.0,
    starts=MULTI_STARTS,
    fix_b_field=False,
    consts=DEFAULT_CONSTANTS,
):
    """Weighted least-squares fit of a retrieval curve.

    Starting points are the guess and copies with the field nudged by half a
    frequency bin either way; the lowest cost wins. ``bounds`` maps parameter
    names to ``(lo, hi)`` pairs and tightens the default box.
    """
    scheme = Scheme.parse(scheme)
    if guess is None:
        guess = initial_guess(curve, scheme, envelope_law, consts=consts)
    layout = _Layout(guess, free_b=not fix_b_field)
    if len(curve) < len(layout.names) + 2:
        raise ValidationError(
            f"need at least {len(layout.names) + 2} points for {len(layout.names)} parameters"
        )
    lower, upper = layout.lower.copy(), layout.upper.copy()
    if layout.free_b:
        upper[0] = max(alias_field_limit(curve, scheme, consts), 2.0 * lower[0])
    for name, (lo, hi) in (bounds or {}).items():
        i = layout.names.index(name)
        lower[i] = max(lower[i], lo)
        upper[i] = min(upper[i], hi)
    weights = _weights(curve, relative_sigma, floor_sigma)
    span = curve.t[-1] - curve.t[0]
    x0 = np.clip(layout.pack(guess, tau_fallback=10.0 * span), lower, upper)

    starts_x = [x0]
    if layout.free_b and starts > 1:
        if curve.is_uniform() and len(curve) > 1:
            harmonic = 1.0 if scheme is Scheme.UNPOLARIZED else 2.0
            db = 0.5 * frequency_resolution(curve) / (harmonic * consts.g_factor_per_gauss)
        else:
            db = 0.01 * x0[0]
        for sign in (-1.0, 1.0)[: starts - 1]:
            x = x0.copy()
            x[0] = max(x0[0] + sign * db, lower[0])
            starts_x.append(np.clip(x, lower, upper))

    best = None
    for x_start in starts_x:
        res = _solve(layout, curve, weights, x_start, lower, upper)
        if best is None or res.cost < best.cost:
            best = res
    cov, ok = _covariance(best.jacobian, best.cost, len(curve))
    if layout.free_b:
        # a field pinned to its box carries no usable uncertainty
        b = best.x[0]
        ok = ok and not (b <= lower[0] * (1 + 1e-6) or b >= upper[0] * (1 - 1e-6))
    return FitResult(
        params=layout.unpack(best.x),
        names=list(layout.names),
        values=best.x.copy(),
        covariance=cov,
        residual_norm=best.cost,
        converged=best.converged,
        iterations=best.iterations,
        covariance_ok=ok and best.converged,
    )


@dataclass(frozen=True)
class StrayFieldEstimate:
    b_field: float  # G
    sigma: float  # G, one standard deviation
    fit: FitResult

    @property
    def interval(self):
        return (self.b_field - self.sigma, self.b_field + self.sigma)


def _loglinear_start(curve, weights, factor, law):
    """Lifetime and scale from a weighted straight-line fit of ``log(a / factor)``."""
    ok = (curve.a > 0) & (factor > 1e-12)
    if ok.sum() < 2:
        return None
    y = np.log(curve.a[ok]) - np.log(factor[ok])
    w = (curve.a[ok] * weights[ok]) ** 2  # 1/var of log(a)
    if law is EnvelopeLaw.NONE:
        return [float(np.exp(np.average(y, weights=w)))]
    x = curve.t[ok] ** 2 if law is EnvelopeLaw.GAUSSIAN else curve.t[ok]
    slope, intercept = np.polyfit(x, y, 1, w=np.sqrt(w))
    span = curve.t[-1] - curve.t[0]
    if slope >= 0:
        tau = 10.0 * span
    else:
        tau = math.sqrt(-1.0 / slope) if law is EnvelopeLaw.GAUSSIAN else -1.0 / slope
    return [tau, float(np.exp(intercept))]


def _profile_candidates(curve, template, weights, b_grid):
    """Cost of the best (tau, A0) fit at each fixed field on ``b_grid``."""
    layout = _Layout(template, free_b=False)
    costs = []
    for b in b_grid:
        layout.template = template.replace(b_field=float(b))
        factor = interference(curve.t, layout.template)
        x0 = _loglinear_start(curve, weights, factor, layout.law)
        if x0 is None:
            x0 = layout.pack(layout.template, tau_fallback=curve.t[-1])
        x0 = np.clip(np.asarray(x0, dtype=float), layout.lower, layout.upper)
        res = _solve(layout, curve, weights, x0, layout.lower, layout.upper)
        costs.append((res.cost, float(b), res.x.copy()))
    return costs


def estimate_stray_field(
    curve,
    coherences=None,
    envelope_law=EnvelopeLaw.GAUSSIAN,
    relative_sigma=0.0,
    floor_sigma=0.0,
    consts=DEFAULT_CONSTANTS,
    n_grid=48,
):
    """Residual field from an unpolarized retrieval curve.

    The field-induced collapse and the dephasing envelope are separated by
    profiling the cost over a logarithmic field grid (lifetime and scale
    refitted at each field) and polishing the best candidates with a full
    fit. Raises :class:`FieldIndistinguishableError` when the fitted field is
    within two standard deviations of zero.
    """
    coherences = coherences or CoherenceMatrix.uniform()
    envelope_law = EnvelopeLaw.parse(envelope_law)
    weights = _weights(curve, relative_sigma, floor_sigma)
    span = curve.t[-1] - curve.t[0]
    dt_min = np.min(np.diff(curve.t)) if len(curve) > 1 else span
    g = consts.g_factor_per_gauss
    k_max = 7.0  # largest harmonic n + m
    b_lo = 0.02 / (2.0 * math.pi * g * span)
    b_hi = 0.5 / (k_max * g * dt_min)
    b_grid = list(np.geomspace(b_lo, b_hi, n_grid))
    try:
        b_grid.append(dominant_frequency(curve) / g)
    except (EstimationError, DomainError):
        pass

    a0 = float(curve.a[: max(3, len(curve) // 50)].max())
    if envelope_law is EnvelopeLaw.NONE:
        envelope = DecayEnvelope.none()
    else:
        envelope = DecayEnvelope(envelope_law, max(span, 1e-6))
    template = ModelParams(Scheme.UNPOLARIZED, coherences, b_lo, envelope, a0, consts)

    profile = sorted(_profile_candidates(curve, template, weights, sorted(b_grid)), key=lambda c: c[0])
    layout = _Layout(template, free_b=True)
    best = None
    for _, b, x_fixed in profile[:MULTI_STARTS]:
        x0 = np.concatenate([[b], x_fixed])
        res = _solve(layout, curve, weights, x0, layout.lower, layout.upper)
        if best is None or res.cost < best.cost:
            best = res
    cov, ok = _covariance(best.jacobian, best.cost, len(curve))
    fit = FitResult(
        params=layout.unpack(best.x),
        names=list(layout.names),
        values=best.x.copy(),
        covariance=cov,
        residual_norm=best.cost,
        converged=best.converged,
        iterations=best.iterations,
        covariance_ok=ok and best.converged,
    )
    b_hat = float(best.x[0])
    sigma_b = float(math.sqrt(max(cov[0, 0], 0.0)))
    if not np.isfinite(sigma_b) or b_hat <= 2.0 * sigma_b or b_hat <= 10 * b_lo:
        raise FieldIndistinguishableError("field indistinguishable from zero")
    return StrayFieldEstimate(b_hat, sigma_b, fit)
