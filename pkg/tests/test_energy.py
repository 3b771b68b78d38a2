import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampwave.energy import (
    check_young, dissipation, energy, fit_decay, hat_energy, komornik_ratio,
    sup_bound_constant, sup_deviation, young_constant,
)
from dampwave.errors import (
    InvalidEpsilon, InvalidExponent, NonpositiveEnergyInWindow, WindowEmpty, ZeroEnergyStart,
)
from dampwave.model import Grid, preset, validate_coefficients
from dampwave.solver_fd import WaveState

N = 40


def _state(u, v, u_star=0.0, mode="main"):
    return WaveState(0.0, np.asarray(u, float), np.asarray(u, float), np.asarray(v, float), mode, u_star)


@pytest.fixture
def undamped():
    return validate_coefficients({"a": 1.0, "q": 0.0}, N, require_damping=False), Grid.for_speed(N)


def test_zero_state(undamped):
    coeffs, grid = undamped
    br = energy(_state(np.zeros(N + 1), np.zeros(N + 1)), coeffs, grid)
    assert br.e_total == br.e_interior == br.e_boundary == 0.0
    assert br.dissipation == 0.0


def test_linear_profile_interior_energy(undamped):
    coeffs, grid = undamped
    br = energy(_state(grid.x, np.zeros(N + 1), u_star=1.0), coeffs, grid)
    assert math.isclose(br.e_interior, 0.5, rel_tol=1e-14)
    assert br.e_boundary == 0.0


def test_boundary_energy_formula(undamped):
    coeffs, grid = undamped
    v = np.zeros(N + 1)
    v[0] = v[-1] = 1.0
    u = np.zeros(N + 1)
    br = energy(_state(u, v, u_star=-1.0), coeffs, grid)
    assert math.isclose(br.e_boundary, 1.5, rel_tol=1e-14)
    assert math.isclose(br.e_total, br.e_interior + br.e_boundary, rel_tol=1e-15)


def test_dissipation_example(undamped):
    coeffs, grid = undamped
    v = np.zeros(N + 1)
    v[-1] = 1.0
    assert dissipation(_state(np.zeros(N + 1), v), coeffs, grid) == -1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(-5, 5).filter(lambda s: abs(s) > 1e-3),
       st.sampled_from([1.0, 1.5, 2.0, 3.0, 5.0]))
def test_parts_nonnegative_and_homogeneous(seed, lam, p):
    coeffs, grid = preset("C2", N), Grid.for_speed(N, 1.5)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal(N + 1), rng.standard_normal(N + 1)
    base = energy(_state(u, v, 0.3), coeffs, grid, p)
    scaled = energy(_state(lam * u, lam * v, 0.3 * lam), coeffs, grid, p)
    assert base.e_interior >= 0 and base.e_boundary >= 0
    assert math.isclose(base.e_total, base.e_interior + base.e_boundary, rel_tol=1e-14)
    assert math.isclose(scaled.e_total, abs(lam) ** p * base.e_total, rel_tol=1e-12)
    assert dissipation(_state(u, v), coeffs, grid) <= 0


def test_invalid_exponent(undamped):
    coeffs, grid = undamped
    with pytest.raises(InvalidExponent):
        energy(_state(np.zeros(N + 1), np.zeros(N + 1)), coeffs, grid, 0.5)
    with pytest.raises(InvalidExponent):
        hat_energy(np.zeros(3), np.zeros(3), 0.9)


def test_hat_energy_constant():
    assert math.isclose(hat_energy(np.full(11, 2.0), np.full(11, -1.0), 3.0), 9.0, rel_tol=1e-14)


@pytest.mark.parametrize("M, nu", [(1.0, 3.0), (5.0, 0.7)])
def test_fit_decay_exact(M, nu):
    t = np.linspace(0.0, 10.0, 201)
    fit = fit_decay(t, M * np.exp(-nu * t), (0.0, 10.0))
    assert math.isclose(fit.nu, nu, rel_tol=1e-12)
    assert math.isclose(fit.M, M, rel_tol=1e-12)
    assert abs(fit.r2 - 1.0) < 1e-12


def test_fit_decay_window_shift_invariant():
    t = np.linspace(0.0, 40.0, 801)
    e = 2.0 * np.exp(-0.4 * t)
    a = fit_decay(t, e, (5.0, 15.0))
    b = fit_decay(t, e, (20.0, 30.0))
    assert math.isclose(a.nu, b.nu, rel_tol=1e-10)
    assert math.isclose(a.log_M, b.log_M, abs_tol=1e-9)


def test_fit_decay_errors():
    t = np.linspace(0.0, 10.0, 101)
    with pytest.raises(WindowEmpty):
        fit_decay(t, np.exp(-t), (20.0, 30.0))
    e = np.exp(-t)
    e[60] = 0.0
    with pytest.raises(NonpositiveEnergyInWindow):
        fit_decay(t, e, (5.0, 10.0))


def test_komornik_ratio_exponential():
    nu = 0.5
    t = np.linspace(0.0, 60.0, 6001)
    assert math.isclose(komornik_ratio(t, np.exp(-nu * t)), 1.0 / nu, rel_tol=1e-4)


def test_komornik_ratio_plateau_is_large():
    t = np.linspace(0.0, 60.0, 601)
    e = np.where(t < 40.0, 1.0, np.exp(-(t - 40.0)))
    assert komornik_ratio(t, e) > 30.0


def test_komornik_zero_start():
    with pytest.raises(ZeroEnergyStart):
        komornik_ratio(np.arange(5.0), np.zeros(5))


def test_sup_deviation():
    x = np.linspace(0.0, 1.0, 41)
    assert sup_deviation(np.full(41, 0.7), 0.7) == 0.0
    assert math.isclose(sup_deviation(0.7 + np.sin(np.pi * x), 0.7), 1.0, rel_tol=1e-15)


def test_sup_bound_constant_dominates_state(rng):
    coeffs, grid = preset("C2", N), Grid.for_speed(N, 1.5)
    C = sup_bound_constant(coeffs)
    for _ in range(200):
        u, v = rng.standard_normal(N + 1), rng.standard_normal(N + 1)
        st_ = _state(u, v, u_star=u[-1] - rng.standard_normal())
        assert sup_deviation(st_, st_.u_star) ** 2 <= C * energy(st_, coeffs, grid).e_total


def test_young_p2_with_constant_three(rng):
    a, b = rng.uniform(-10, 10, 10**5), rng.uniform(-10, 10, 10**5)
    eps = rng.uniform(1e-6, 2.0, 10**5)
    assert np.all((a + b) ** 2 <= (1 + eps) * a * a + 3.0 / eps * b * b + 1e-9)
    assert young_constant(2.0, 0.5) >= 3.0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0])
def test_young_zero_a(p):
    eps = np.linspace(1e-3, 1.999, 50)
    assert np.all(young_constant(p, 1.0) * eps ** (1 - p) >= 1.0)


def test_young_p3_against_grid_sup():
    # by homogeneity b = 1; sup of (|a+1|^3 - (1+eps)|a|^3) eps^2 over a 1000 x 1000 grid
    a = np.linspace(-50.0, 50.0, 1000)[:, None]
    eps = np.linspace(2e-3, 1.998, 1000)[None, :]
    worst = np.max((np.abs(a + 1) ** 3 - (1 + eps) * np.abs(a) ** 3) * eps ** 2)
    assert worst <= young_constant(3.0, 1.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0])
def test_young_random_samples(p):
    assert check_young(p, 10**6, seed=7) == 0


def test_young_errors():
    with pytest.raises(InvalidExponent):
        young_constant(1.0, 0.5)
    with pytest.raises(InvalidEpsilon):
        young_constant(2.0, 2.0)
    with pytest.raises(InvalidEpsilon):
        young_constant(2.0, 0.0)
