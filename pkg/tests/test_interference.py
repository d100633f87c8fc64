import math

import numpy as np
import pytest

from eitrevival.interference import (
    CoherenceMatrix,
    DecayEnvelope,
    DiagonalCoherences,
    ModelParams,
    ValidationError,
    envelope_eval,
    invert_relative_amplitude,
    oscillation_extrema,
    oscillation_period,
    phase_extrema,
    relative_amplitude,
    retrieval,
    retrieval_general,
    retrieval_sigma_plus,
    retrieval_two_level,
    revival_times,
)
from eitrevival.zeeman import DomainError, Scheme, allowed_pairs
import oracles


def sigma_plus(p_by_m, b=1.0, envelope=None, a0=1.0):
    return ModelParams(
        Scheme.SIGMA_PLUS,
        DiagonalCoherences.from_mapping(p_by_m),
        b,
        envelope or DecayEnvelope.none(),
        a0,
    )


def unpolarized(entries=None, b=0.161, envelope=None):
    coh = CoherenceMatrix.from_entries(entries) if entries else CoherenceMatrix.uniform()
    return ModelParams(Scheme.UNPOLARIZED, coh, b, envelope or DecayEnvelope.none())


# -- envelopes ---------------------------------------------------------------

def test_envelope_examples():
    assert envelope_eval(DecayEnvelope.gaussian(440), 440) == pytest.approx(math.exp(-1))
    assert envelope_eval(DecayEnvelope.exponential(100), 100) == pytest.approx(0.3679, abs=1e-4)
    for env in (DecayEnvelope.gaussian(3), DecayEnvelope.exponential(3), DecayEnvelope.none()):
        assert envelope_eval(env, 0.0) == 1.0


def test_envelope_rejects_negative_time():
    with pytest.raises(DomainError):
        envelope_eval(DecayEnvelope.gaussian(1.0), -1.0)


@pytest.mark.parametrize("tau", [0.0, -1.0, None])
def test_envelope_needs_positive_tau(tau):
    with pytest.raises(ValidationError):
        DecayEnvelope("gaussian", tau)


# -- coherence containers ----------------------------------------------------

def test_uniform_matrix_matches_selection_rule():
    coh = CoherenceMatrix.uniform()
    nonzero = {(n, m) for n in range(-3, 4) for m in range(-4, 5) if coh.entry(n, m) > 0}
    assert nonzero == set(allowed_pairs())
    assert coh.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_matrix_rejects_forbidden_entry():
    w = np.zeros((7, 9))
    w[3, 4 + 3] = 1.0  # n = 0, m = 3
    with pytest.raises(ValidationError):
        CoherenceMatrix(w)


def test_matrix_rejects_bad_sum_and_sign():
    w = np.zeros((7, 9))
    w[6, 8] = 0.5
    with pytest.raises(ValidationError):
        CoherenceMatrix(w)
    w[6, 8], w[5, 7] = 1.5, -0.5
    with pytest.raises(ValidationError):
        CoherenceMatrix(w)


def test_diagonal_two_level():
    coh = DiagonalCoherences.two_level(0.07)
    assert coh.p(2) == 0.07 and coh.p(3) == pytest.approx(0.93)
    assert coh.support == (2, 3)


def test_scheme_representation_mismatch():
    with pytest.raises(ValidationError):
        ModelParams(Scheme.UNPOLARIZED, DiagonalCoherences.two_level(0.1), 1.0)
    with pytest.raises(ValidationError):
        ModelParams(Scheme.TWO_LEVEL, DiagonalCoherences.from_mapping({1: 0.5, 3: 0.5}), 1.0)
    with pytest.raises(ValidationError):
        ModelParams(Scheme.SIGMA_PLUS, DiagonalCoherences.two_level(0.1), 1.0, amplitude_scale=-1)


# -- retrieval ---------------------------------------------------------------

def test_single_coherence_never_collapses():
    params = unpolarized({(3, 4): 1.0}, b=0.7)
    t = np.linspace(0, 50, 501)
    np.testing.assert_allclose(retrieval_general(t, params), 1.0, atol=1e-14)


def test_general_matches_oracle_uniform():
    params = unpolarized(b=0.161, envelope=DecayEnvelope.gaussian(80.0))
    entries = {pair: 1.0 / 33 for pair in allowed_pairs()}
    for t in np.linspace(0, 120, 37):
        want = oracles.amplitude_general(t, entries, 0.161, law="gaussian", tau=80.0)
        assert retrieval_general(t, params) == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_general_peaks_every_larmor_period():
    params = unpolarized(b=0.161)
    peaks = oracles.local_peak_times(lambda t: retrieval_general(t, params), 0.0, 60.0, 60001)
    big = [t for t in peaks if retrieval_general(t, params) > 0.5]
    spacing = np.diff(big)
    assert spacing == pytest.approx([1 / (0.35 * 0.161)] * len(spacing), abs=2e-3)


def test_sigma_plus_single_coherence_follows_envelope():
    env = DecayEnvelope.gaussian(10.0)
    params = sigma_plus({3: 1.0}, envelope=env)
    t = np.linspace(0, 20, 41)
    np.testing.assert_allclose(retrieval_sigma_plus(t, params), env(t), rtol=1e-13)


def test_sigma_plus_balanced_pair_collapses_completely():
    params = sigma_plus({2: 0.5, 3: 0.5}, b=1.0)
    zeros = (2 * np.arange(4) + 1) / (2 * 0.7)
    np.testing.assert_allclose(retrieval_sigma_plus(zeros, params), 0.0, atol=1e-14)
    revivals = np.arange(4) / 0.7
    np.testing.assert_allclose(retrieval_sigma_plus(revivals, params), 1.0, rtol=1e-12)


def test_two_level_examples():
    assert retrieval_two_level(0.0, 0.07, 1.0) == pytest.approx(1.0)
    t_min = 1 / (2 * 0.7)
    assert retrieval_two_level(t_min, 0.07, 1.0) == pytest.approx(0.7396, abs=1e-12)
    assert retrieval_two_level(t_min, 0.5, 1.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        retrieval_two_level(0.0, 1.2, 1.0)


def test_two_level_matches_oracle_with_envelope():
    env = DecayEnvelope.gaussian(440)
    for t in np.linspace(0, 900, 31):
        want = oracles.amplitude_two_level(t, 0.07, 1.0, a0=0.8, law="gaussian", tau=440)
        assert retrieval_two_level(t, 0.07, 1.0, env, a0=0.8) == pytest.approx(want, rel=1e-12, abs=1e-300)


def test_retrieval_dispatch_and_scalar_shape():
    params = ModelParams(Scheme.TWO_LEVEL, DiagonalCoherences.two_level(0.2), 1.0)
    assert isinstance(retrieval(0.3, params), float)
    assert retrieval(np.array([0.3]), params).shape == (1,)
    with pytest.raises(ValidationError):
        retrieval_general(0.3, params)
    with pytest.raises(ValidationError):
        retrieval_sigma_plus(0.3, unpolarized())


def test_carrier_phase_changes_nothing():
    params = unpolarized(b=0.3)
    t = np.linspace(0, 30, 301)
    np.testing.assert_allclose(retrieval(t, params, carrier_mhz=9193.0), retrieval(t, params), rtol=1e-12, atol=1e-15)


# -- relative amplitude -------------------------------------------------------

@pytest.mark.parametrize("p2, r", [(0.07, 0.2604), (0.5, 1.0), (0.0, 0.0)])
def test_relative_amplitude_examples(p2, r):
    assert relative_amplitude(p2) == pytest.approx(r, abs=1e-15)


@pytest.mark.parametrize("r, p2", [(0.25, 0.0669872981), (1.0, 0.5), (0.0, 0.0)])
def test_invert_examples(r, p2):
    assert invert_relative_amplitude(r) == pytest.approx(p2, abs=1e-10)


def test_invert_alternate_root():
    lo, hi = invert_relative_amplitude(0.25, return_alternate=True)
    assert lo + hi == pytest.approx(1.0)
    assert relative_amplitude(hi) == pytest.approx(0.25)


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_relative_amplitude_domain(bad):
    with pytest.raises(DomainError):
        relative_amplitude(bad)
    with pytest.raises(DomainError):
        invert_relative_amplitude(bad)


# -- revivals and extrema ------------------------------------------------------

def test_revival_time_examples():
    np.testing.assert_allclose(
        revival_times(0.161, Scheme.UNPOLARIZED, 60), [0, 17.7462, 35.4925, 53.2387], atol=1e-4
    )
    np.testing.assert_allclose(revival_times(1.0, Scheme.SIGMA_PLUS, 3), [0, 1.428571, 2.857143], atol=1e-6)
    assert revival_times(5.0, Scheme.TWO_LEVEL, 1e-3) == [0.0]


def test_revival_times_zero_field():
    with pytest.raises(DomainError, match="no revivals: degenerate field"):
        revival_times(0.0, Scheme.UNPOLARIZED, 10.0)


def test_oscillation_extrema_examples():
    params = ModelParams(Scheme.TWO_LEVEL, DiagonalCoherences.two_level(0.07), 1.0)
    a_max, a_min = oscillation_extrema(params, (0, 2))
    assert a_max == pytest.approx(1.0, abs=1e-12)
    assert a_min == pytest.approx(0.7396, abs=1e-12)
    single = sigma_plus({3: 1.0})
    assert oscillation_extrema(single, (0, 2)) == pytest.approx((1.0, 1.0))


def test_oscillation_extrema_three_components_vs_dense_grid():
    params = sigma_plus({1: 1 / 3, 2: 1 / 3, 3: 1 / 3}, b=1.0)
    period = oscillation_period(1.0, Scheme.SIGMA_PLUS)
    hi, lo = oracles.dense_extrema(lambda t: oracles.amplitude_diagonal(t, {1: 1 / 3, 2: 1 / 3, 3: 1 / 3}, 1.0), 0, period, 200001)
    a_max, a_min = oscillation_extrema(params, (0, period))
    assert a_max == pytest.approx(hi, abs=1e-6)
    assert a_min == pytest.approx(lo, abs=1e-6)
    # refinement never does worse than the grid
    assert a_max >= hi - 1e-12 and a_min <= lo + 1e-12


def test_oscillation_extrema_short_window():
    params = sigma_plus({2: 0.3, 3: 0.7})
    with pytest.raises(DomainError):
        oscillation_extrema(params, (0, 0.5))


def test_phase_extrema_matches_time_window():
    params = sigma_plus({0: 0.1, 2: 0.3, 3: 0.6}, b=0.8)
    period = oscillation_period(0.8, Scheme.SIGMA_PLUS)
    np.testing.assert_allclose(phase_extrema(params), oscillation_extrema(params, (0, period)), atol=1e-9)
