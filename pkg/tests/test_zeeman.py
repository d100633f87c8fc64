import math

import pytest
from hypothesis import given, strategies as st

from eitrevival.zeeman import (
    DEFAULT_CONSTANTS,
    DomainError,
    PhysicalConstants,
    Scheme,
    allowed_pairs,
    larmor_frequency,
    selection_rule_allowed,
    spin_wave_detuning,
)
from oracles import allowed_pairs_bruteforce


@pytest.mark.parametrize("b, f", [(1.0, 0.35), (0.0, 0.0), (0.161, 0.05635)])
def test_larmor_examples(b, f):
    assert larmor_frequency(b) == pytest.approx(f, abs=1e-12)


def test_larmor_negative_field():
    with pytest.raises(DomainError):
        larmor_frequency(-0.1)


def test_larmor_uses_configured_g():
    consts = PhysicalConstants(g_factor_per_gauss=0.7)
    assert larmor_frequency(2.0, consts) == pytest.approx(1.4)


@pytest.mark.parametrize(
    "n, m, b, expected",
    [(3, 3, 1.0, 2.1), (3, 3, 2.6, 5.46), (0, 0, 5.0, 0.0), (2, 2, 1.0, 1.4), (-3, -1, 1.0, -1.4)],
)
def test_spin_wave_detuning_examples(n, m, b, expected):
    assert spin_wave_detuning(n, m, b) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n, m", [(4, 3), (-4, 0), (0, 5), (0, -5)])
def test_spin_wave_detuning_range(n, m):
    with pytest.raises(DomainError):
        spin_wave_detuning(n, m, 1.0)


@pytest.mark.parametrize("n, m, ok", [(3, 4, True), (0, 3, False), (-3, -1, True), (4, 4, False), (0, -4, False)])
def test_selection_rule_examples(n, m, ok):
    assert selection_rule_allowed(n, m) is ok


def test_allowed_pairs_match_bruteforce():
    pairs = allowed_pairs()
    assert sorted(pairs) == sorted(allowed_pairs_bruteforce())
    # the brute-force count is 33 (7 diagonal + 12 at |n-m|=1 + 14 at |n-m|=2)
    assert len(pairs) == 33


def test_constants_validation():
    with pytest.raises(DomainError):
        PhysicalConstants(g_factor_per_gauss=0.0)
    assert DEFAULT_CONSTANTS.g_factor_per_gauss == 0.35


@pytest.mark.parametrize("text, scheme", [("two_level", Scheme.TWO_LEVEL), ("SigmaPlus", Scheme.SIGMA_PLUS), ("unpolarized", Scheme.UNPOLARIZED)])
def test_scheme_parse(text, scheme):
    assert Scheme.parse(text) is scheme


def test_scheme_parse_rejects():
    with pytest.raises(DomainError):
        Scheme.parse("pi")


@given(st.floats(0, 100), st.floats(0, 10))
def test_larmor_linear(a, b):
    assert math.isclose(larmor_frequency(a * b), a * larmor_frequency(b), rel_tol=1e-12, abs_tol=1e-12)


@given(st.integers(-3, 3), st.integers(-4, 4), st.floats(0, 10))
def test_detuning_antisymmetric(n, m, b):
    assert spin_wave_detuning(n, m, b) == -spin_wave_detuning(-n, -m, b)


@given(st.integers(-10, 10), st.integers(-10, 10))
def test_selection_rule_reflection(n, m):
    assert selection_rule_allowed(n, m) == selection_rule_allowed(-n, -m)
