import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dampwave.energy import fit_decay
from dampwave.errors import LengthMismatch, NonUnitCfl, RequiresConstantSpeed
from dampwave.model import BUMP_DATA, Grid, build_initial_data, preset
from dampwave.solver_riemann import (
    BoundaryFlowMatrices, RiemannState, boundary_flow, forced_step, from_riemann,
    initial_riemann_state, riemann_step, simulate_forced, simulate_riemann, to_riemann,
)
from dampwave.acceptance import iss_data


def test_to_riemann_examples():
    rho, xi = to_riemann(np.ones(5), np.zeros(5))
    assert np.all(rho == 1) and np.all(xi == 1)
    rho, xi = to_riemann(np.zeros(5), np.ones(5))
    assert np.all(rho == 1) and np.all(xi == -1)


def test_from_riemann_examples():
    v, w = from_riemann((np.full(4, 2.0), np.zeros(4)))
    assert np.all(v == 1) and np.all(w == 1)
    r = np.array([0.3, -1.0, 2.5])
    assert np.all(from_riemann((r, r))[1] == 0)


def test_shape_mismatch():
    with pytest.raises(LengthMismatch):
        to_riemann(np.zeros(3), np.zeros(4))
    with pytest.raises(LengthMismatch):
        from_riemann((np.zeros(3), np.zeros(4)))


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(arrays(float, 17, elements=finite), arrays(float, 17, elements=finite))
def test_round_trip(v, w):
    v2, w2 = from_riemann(to_riemann(v, w))
    np.testing.assert_allclose(v2, v, rtol=1e-15, atol=1e-9)
    np.testing.assert_allclose(w2, w, rtol=1e-15, atol=1e-9)


def test_pulse_moves_one_cell_per_step():
    n, j = 20, 7
    coeffs = preset("C1-boundary-only", n)
    xi = np.zeros(n + 1)
    xi[j] = 1.0
    rho = np.zeros(n + 1)
    rho[12] = -2.0
    out = riemann_step(RiemannState(0.0, rho, xi), coeffs, Grid.unit(n))
    expected_xi = np.zeros(n + 1)
    expected_xi[j + 1] = 1.0
    expected_rho = np.zeros(n + 1)
    expected_rho[11] = -2.0
    assert np.array_equal(out.xi, expected_xi)
    assert np.array_equal(out.rho, expected_rho)
    assert out.eta1 == out.eta2 == out.zeta1 == 0.0


def test_zero_state_stays_zero():
    n = 30
    out = riemann_step(RiemannState(0.0, np.zeros(n + 1), np.zeros(n + 1)), preset("C1", n), Grid.unit(n))
    assert np.all(out.rho == 0) and np.all(out.xi == 0)
    assert out.eta1 == out.eta2 == out.zeta1 == 0


def test_interior_values_are_permuted_without_damping(rng):
    n = 50
    rho, xi = rng.standard_normal(n + 1), rng.standard_normal(n + 1)
    r2, x2 = forced_step(rho, xi, np.zeros(n + 1), 1.0 / n, 0.0, 0.0)
    assert np.array_equal(r2[1:-1], rho[2:])
    assert np.array_equal(x2[1:-1], xi[:-2])


def test_boundary_compatibility_after_each_step():
    n = 100
    coeffs = preset("C1", n)
    grid = Grid.unit(n)
    state = initial_riemann_state(build_initial_data(BUMP_DATA, n), grid)
    mats = BoundaryFlowMatrices.build(coeffs, grid.dt)
    for _ in range(300):
        state = riemann_step(state, coeffs, grid, mats)
        assert abs(state.rho[-1] + state.xi[-1] - 2 * state.eta1) <= 1e-12
        assert abs(state.rho[0] + state.xi[0] - 2 * state.zeta1) <= 1e-12


def test_boundary_matrix_layout():
    coeffs = preset("C1", 20)
    m = BoundaryFlowMatrices.build(coeffs, 0.05)
    np.testing.assert_array_equal(m.A, [[0, 1, 0], [-1, -1, 0], [0, 0, -1]])
    np.testing.assert_array_equal(m.B, [[0, 0], [-0.5, 0], [0, 0.5]])


def test_boundary_flow_decoupled_scalar():
    coeffs = preset("C1", 20)
    dt = 0.05
    m = BoundaryFlowMatrices.build(coeffs, dt)
    y = boundary_flow((0.0, 0.0, 1.0), (0.0, 0.0), (0.0, 0.0), m)
    assert math.isclose(y[2], math.exp(-dt), rel_tol=1e-14)
    assert y[0] == y[1] == 0.0


def test_boundary_flow_zero_step_is_identity():
    coeffs = preset("C1", 20)
    m = BoundaryFlowMatrices.build(coeffs, 0.05)
    y = boundary_flow((0.4, -1.2, 0.7), (3.0, -2.0), (1.0, 5.0), m, dt=0.0)
    np.testing.assert_array_equal(y, [0.4, -1.2, 0.7])


def test_boundary_flow_matches_taylor_series():
    coeffs = preset("C1", 20)
    dt = 0.05
    m = BoundaryFlowMatrices.build(coeffs, dt)
    E, term = np.eye(3), np.eye(3)
    for k in range(1, 30):
        term = term @ (m.A * dt) / k
        E = E + term
    y = boundary_flow((1.0, 0.0, 0.0), (0.0, 0.0), (0.0, 0.0), m)
    np.testing.assert_allclose(y, E[:, 0], atol=1e-12)


def test_requires_unit_cfl_and_constant_speed():
    n = 20
    state = RiemannState(0.0, np.zeros(n + 1), np.zeros(n + 1))
    with pytest.raises(NonUnitCfl):
        riemann_step(state, preset("C1", n), Grid(n, 0.5 / n, 0.5))
    with pytest.raises(RequiresConstantSpeed):
        riemann_step(state, preset("C2", n), Grid.unit(n))


def test_unforced_energy_nonincreasing():
    n = 200
    coeffs = preset("C1", n)
    tr = simulate_riemann(build_initial_data(BUMP_DATA, n), coeffs, Grid.unit(n), 20.0)
    assert np.max(np.diff(tr.e_total)) <= 1e-10 * tr.e_total[0]
    assert tr.e_total[-1] < 0.01 * tr.e_total[0]


def test_forced_zero_data_gives_zero():
    n = 40
    t, e = simulate_forced(np.zeros(n + 1), np.zeros(n + 1), preset("C1", n).q_samples, 0.0, 0.0, 3.0, 2.0)
    assert np.all(e == 0) and len(t) == len(e) == 81


def test_forced_energy_with_closed_walls_nonincreasing():
    n = 200
    rho, xi = iss_data(n, seed=3)
    _, e = simulate_forced(rho, xi, preset("C1", n).q_samples, 0.0, 0.0, 2.0, 20.0)
    assert np.max(np.diff(e)) <= 1e-10 * e[0]


def test_forced_decay_rate_is_resolution_stable():
    rates = []
    for n in (200, 400):
        rho, xi = iss_data(n, seed=1)
        t, e = simulate_forced(rho, xi, preset("C1", n).q_samples, 0.0, 0.0, 3.0, 30.0)
        fit = fit_decay(t, e, (5.0, 30.0))
        assert fit.nu > 0
        rates.append(fit.nu)
    assert abs(rates[0] - rates[1]) <= 0.1 * rates[1]


def test_forced_input_length_checked():
    n = 10
    with pytest.raises(LengthMismatch):
        simulate_forced(np.zeros(n + 1), np.zeros(n + 1), np.zeros(n + 1), np.zeros(3), 0.0, 2.0, 1.0)
