import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dampwave.errors import (
    EmptySupport, LengthMismatch, NegativeDamping, NonPositiveGain, NonPositiveWaveSpeed,
    TableNotOnUnitInterval, UnknownPreset,
)
from dampwave.model import (
    Grid, InitialData, attractor_main, attractor_related, build_initial_data, preset,
    sample_function, trapz, validate_coefficients,
)

C1_RAW = {"a": 1.0, "q": {"indicator": [0.3, 0.5], "level": 5.0}}


def test_c1_coefficients():
    c = validate_coefficients(C1_RAW, 10)
    assert c.a_lo == c.a_hi == 1.0
    assert c.q_lo == c.q_hi == 5.0
    assert c.omega == (0.3, 0.5)
    assert all(v == 1.0 for v in c.gains().values())


def test_linear_speed_bounds():
    c = validate_coefficients({"a": "linear 1 1.5", "q": C1_RAW["q"]}, 10)
    assert c.a_lo == 1.0 and c.a_hi == 1.5


@pytest.mark.parametrize("gain", ["alpha1", "alpha2", "beta1", "gamma1", "mu1"])
def test_zero_gain_rejected(gain):
    with pytest.raises(NonPositiveGain, match=r"\(A3\)"):
        validate_coefficients({**C1_RAW, gain: 0.0}, 10)


def test_assumption_violations():
    with pytest.raises(NonPositiveWaveSpeed, match=r"\(A1\)"):
        validate_coefficients({"a": "linear 1 -1", "q": C1_RAW["q"]}, 10)
    with pytest.raises(NegativeDamping, match=r"\(A2\)"):
        validate_coefficients({"a": 1.0, "q": -1.0}, 10)
    with pytest.raises(EmptySupport):
        validate_coefficients({"a": 1.0, "q": 0.0}, 10)
    with pytest.raises(NonPositiveGain):
        validate_coefficients({**C1_RAW, "q0": -1.0}, 10)


def test_support_from_positive_run():
    q = np.zeros(11)
    q[2:6] = [1.0, 2.0, 3.0, 2.0]
    c = validate_coefficients({"a": 1.0, "q": q}, 10)
    assert c.omega == (0.2, 0.5)
    assert (c.q_lo, c.q_hi) == (1.0, 3.0)


def test_boundary_only_allowed_when_not_required():
    c = validate_coefficients({"a": 1.0, "q": 0.0}, 10, require_damping=False)
    assert c.omega is None and c.q_integral == 0.0


def test_sample_sine_mode():
    np.testing.assert_allclose(sample_function("sine-mode 1", 4),
                               [0.0, np.sqrt(2) / 2, 1.0, np.sqrt(2) / 2, 0.0], atol=1e-15)


def test_sample_constant_and_indicator():
    assert np.all(sample_function("constant 2.5", 7) == 2.5)
    ind = sample_function({"indicator": [0.3, 0.5], "level": 5}, 10)
    assert list(np.nonzero(ind)[0]) == [3, 4, 5]
    assert np.all(ind[3:6] == 5)


def test_sample_gaussian_and_table():
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(sample_function("gaussian-bump 0.5 0.1", 10),
                               np.exp(-((x - 0.5) / 0.1) ** 2))
    tab = sample_function({"table": [[0, 0], [0.5, 1], [1, 0]]}, 4)
    np.testing.assert_allclose(tab, [0, 0.5, 1, 0.5, 0])


def test_sample_errors():
    with pytest.raises(UnknownPreset):
        sample_function("cosine 3", 10)
    with pytest.raises(UnknownPreset):
        sample_function({"preset": "nope"}, 10)
    with pytest.raises(TableNotOnUnitInterval):
        sample_function({"table": [[0, 0], [0.5, 1]]}, 10)
    with pytest.raises(TableNotOnUnitInterval):
        sample_function({"table": [[-0.5, 0], [1, 1]]}, 10)
    with pytest.raises(LengthMismatch):
        sample_function(np.zeros(5), 10)


@settings(max_examples=60, deadline=None)
@given(lo=st.floats(0, 0.9), width=st.floats(0.01, 0.5), n=st.integers(4, 200))
def test_indicator_snaps_outward(lo, width, n):
    hi = min(1.0, lo + width)
    ind = sample_function({"indicator": [lo, hi], "level": 1.0}, n)
    x = np.linspace(0, 1, n + 1)
    on = x[ind > 0]
    # the support contains [lo, hi] and exceeds it by less than one cell on each side
    assert on[0] <= lo + 1e-9 and on[-1] >= hi - 1e-9
    assert on[0] > lo - 1.0 / n - 1e-9 and on[-1] < hi + 1.0 / n + 1e-9


def test_grid():
    g = Grid.for_speed(100, 2.25, 0.9)
    assert g.dx == 0.01 and np.isclose(g.dt, 0.9 * 0.01 / 1.5)
    assert Grid.unit(50).dt == 1 / 50
    with pytest.raises(ValueError):
        Grid(10, 0.1, 1.5)
    with pytest.raises(ValueError):
        Grid(0, 0.1)


def test_attractor_main_examples():
    u0 = np.linspace(0, 2.0, 11)
    assert attractor_main(InitialData(u0, np.zeros(11), eta2_0=0.5)) == 1.5
    assert attractor_main(InitialData(np.full(11, 3.0), np.zeros(11))) == 3.0
    assert attractor_main(InitialData(np.zeros(11), np.zeros(11))) == 0.0


def test_initial_data_length_check():
    with pytest.raises(LengthMismatch):
        InitialData(np.zeros(5), np.zeros(6))


def test_related_constant_steady_state():
    n, c = 50, 0.7
    coeffs = preset("C1-related", n)
    init = InitialData(np.full(n + 1, c), np.zeros(n + 1))
    assert np.isclose(attractor_related(init, coeffs, "corrected"), c, rtol=1e-14)
    den = coeffs.a_left * coeffs.q0 + coeffs.a_right * coeffs.q1
    expected = c * (den + coeffs.q_integral) / den
    assert np.isclose(attractor_related(init, coeffs, "as_printed"), expected, rtol=1e-14)
    assert not np.isclose(expected, c)


def test_related_variants_agree_without_damping():
    n = 30
    coeffs = validate_coefficients({"a": 1.0, "q": 0.0, "q0": 2.0, "q1": 0.5}, n, require_damping=False)
    init = build_initial_data({"u0": "gaussian-bump 0.4 0.2", "u1": "sine-mode 2", "eta": 0.3}, n)
    assert attractor_related(init, coeffs, "corrected") == attractor_related(init, coeffs, "as_printed")


def test_related_requires_gains():
    with pytest.raises(ValueError):
        attractor_related(build_initial_data({}, 10), preset("C1", 10))


def test_trapz_matches_numpy():
    y = np.random.default_rng(0).standard_normal(21)
    assert np.isclose(trapz(y, 0.05), np.trapezoid(y, dx=0.05) if hasattr(np, "trapezoid") else np.trapz(y, dx=0.05))


def test_shift_changes_main_attractor_by_constant():
    init = build_initial_data({"u0": "gaussian-bump 0.5 0.1", "eta2": 0.2}, 20)
    assert np.isclose(attractor_main(init.shifted(1.25)), attractor_main(init) + 1.25)
