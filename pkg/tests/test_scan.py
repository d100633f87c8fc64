import math
import random

import numpy as np
import pytest

from eitrevival.populations import PumpState, SelectivityModel, calibrate_width, pump_distribution
from eitrevival.scan import (
    Objective,
    ScanRow,
    ScanSpec,
    ScanVariable,
    extrema_at,
    optimize_detuning,
    scan_detuning,
    scan_field,
)
from eitrevival.zeeman import DomainError, spin_wave_detuning

PUMP = PumpState(0.8, "all_in_next_lower")
Q = pump_distribution(PUMP)
WIDTH = calibrate_width(Q)


def sech_line(x, w):
    return 1 / math.cosh(2 * math.acosh(2) * x / w)


def test_spec_invariants():
    with pytest.raises(DomainError):
        ScanSpec(ScanVariable.DETUNING, 1.0, 1.0, 5)
    with pytest.raises(DomainError):
        ScanSpec(ScanVariable.DETUNING, 0.0, 1.0, 1)
    with pytest.raises(DomainError):
        ScanRow(0.0, 0.5, 0.6, 0.0)


def test_rows_are_self_consistent_and_ordered():
    spec = ScanSpec(ScanVariable.DETUNING, -2, 12, 57, PUMP, SelectivityModel(WIDTH), b_field=2.6)
    rows = scan_detuning(spec)
    assert [r.x for r in rows] == list(spec.grid)
    for r in rows:
        assert r.a_min <= r.a_max
        assert r.r == pytest.approx((r.a_max - r.a_min) / r.a_max, abs=1e-15)


def test_threaded_and_permuted_evaluation_match_serial():
    spec = ScanSpec(ScanVariable.DETUNING, -2, 12, 41, PumpState(0.7, "uniform_below"), SelectivityModel(WIDTH), b_field=1.3)
    serial = scan_detuning(spec)
    assert scan_detuning(spec, workers=4) == serial
    order = list(range(spec.n_points))
    random.Random(7).shuffle(order)
    q = pump_distribution(spec.pump)
    for i in order:
        x = spec.grid[i]
        assert ScanRow(float(x), *extrema_at(q, spec.sel.with_detuning(float(x)), 1.3)) == serial[i]


def test_time_window_extrema_agree_with_phase_extrema():
    q = pump_distribution(PumpState(0.7, "uniform_below"))
    sel = SelectivityModel(WIDTH, 3.0)
    a = extrema_at(q, sel, 1.0)
    b = extrema_at(q, sel, 1.0, window=(0.0, 3.0))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_calibrated_scan_through_anchor():
    spec = ScanSpec(ScanVariable.DETUNING, 6.0, 7.0, 3, PUMP, SelectivityModel(WIDTH), b_field=2.6)
    assert scan_detuning(spec)[1].r == pytest.approx(0.25, abs=1e-10)


def test_field_scan_examples():
    spec = ScanSpec(ScanVariable.FIELD, 0.0, 3.0, 31, PUMP, SelectivityModel(WIDTH))
    rows = scan_field(spec)
    assert rows[0].r == pytest.approx(4 * 0.2 * 0.8)
    r = np.array([row.r for row in rows])
    assert np.all(np.diff(r) < 0)
    only3 = ScanSpec(ScanVariable.FIELD, 0.0, 3.0, 7, PumpState(1.0), SelectivityModel(WIDTH))
    assert all(row.r == 0.0 for row in scan_field(only3))
    with pytest.raises(DomainError):
        scan_field(ScanSpec(ScanVariable.FIELD, -1.0, 1.0, 3))
    with pytest.raises(DomainError):
        scan_field(ScanSpec(ScanVariable.DETUNING, 0.0, 1.0, 3))


def test_maximize_amax_single_coherence_sits_on_zeeman_shift():
    best = optimize_detuning(1.0, PumpState(1.0), SelectivityModel(2.0), Objective.MAXIMIZE_AMAX)
    assert best.detuning == pytest.approx(2.1, abs=1e-3)


def test_maximize_amax_matches_dense_oracle():
    # a_max of a two-component mix is the squared total storage strength
    w = 2.0
    grid = np.arange(-2.0, 12.0, 1e-4)
    amax = [(0.8 * sech_line(d - 2.1, w) + 0.2 * sech_line(d - 1.4, w)) ** 2 for d in grid]
    want = grid[int(np.argmax(amax))]
    best = optimize_detuning(1.0, PUMP, SelectivityModel(w), "maximize_amax")
    assert best.detuning == pytest.approx(want, abs=2e-3)
    assert best.value == pytest.approx(max(amax), rel=1e-6)


def test_minimize_r_degenerate_field_is_flat():
    best = optimize_detuning(0.0, PUMP, SelectivityModel(WIDTH), Objective.MINIMIZE_R)
    assert best.flat
    assert best.detuning == -2.0
    assert best.plateau_onset == -2.0


def test_minimize_r_at_high_field():
    sel = SelectivityModel(WIDTH)
    best = optimize_detuning(2.6, PUMP, sel, Objective.MINIMIZE_R)
    assert not best.flat
    assert best.detuning > spin_wave_detuning(3, 3, 2.6)
    r0 = extrema_at(Q, sel.with_detuning(0.0), 2.6)[2]
    assert best.value < r0
    # never worse than the best grid point; plateau onset within 1% of it
    assert best.value <= best.grid_values.min() + 1e-15
    onset_r = extrema_at(Q, sel.with_detuning(best.plateau_onset), 2.6)[2]
    assert onset_r <= 1.01 * best.grid_values.min()
    assert best.grid[0] == -2.0
    assert best.grid[-1] == pytest.approx(spin_wave_detuning(3, 3, 2.6) + 5 * WIDTH, abs=0.05)


def test_objective_parse():
    assert Objective.parse("MaximizeAmax") is Objective.MAXIMIZE_AMAX
    with pytest.raises(DomainError):
        Objective.parse("median")
