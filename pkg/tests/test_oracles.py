import numpy as np
import pytest

from dampwave.errors import GridMismatch, ZeroInitialEnergy
from dampwave.model import BUMP_DATA, Grid, build_initial_data, preset
from dampwave.oracles import (
    conservation_check, convergence_ratio, cross_validate, dalembert_error, dalembert_reference, pinned_run,
)
from dampwave.solver_fd import simulate

X = np.linspace(0.0, 1.0, 101)


def sine(x):
    return np.sin(np.pi * x)


def zero(x):
    return np.zeros_like(x)


@pytest.mark.parametrize("t", [0.0, 0.37, 1.0, 1.6, 5.25])
def test_dalembert_eigenmodes(t):
    np.testing.assert_allclose(dalembert_reference(sine, zero, t, X), np.cos(np.pi * t) * sine(X), atol=1e-8)
    np.testing.assert_allclose(dalembert_reference(zero, sine, t, X),
                               np.sin(np.pi * t) * sine(X) / np.pi, atol=1e-8)


def test_dalembert_initial_time_exact():
    w0 = np.sin(3 * np.pi * X) + X * (1 - X)
    w0[[0, -1]] = 0.0  # Dirichlet data
    np.testing.assert_allclose(dalembert_reference(w0, np.zeros_like(w0), 0.0, X), w0, rtol=0, atol=4e-15)


def test_dalembert_period_two():
    for t in (0.2, 0.9, 1.45):
        a = dalembert_reference(sine, zero, t, X)
        np.testing.assert_allclose(dalembert_reference(sine, zero, 2.0 - t, X), a, atol=1e-12)
        np.testing.assert_allclose(dalembert_reference(sine, zero, t + 2.0, X), a, atol=1e-12)


def test_pinned_fd_converges_to_dalembert():
    e1 = dalembert_error("sine-mode 1", 0.0, 50, 1.3, w0_exact=sine)
    e2 = dalembert_error("sine-mode 1", 0.0, 100, 1.3, w0_exact=sine)
    assert e2 < 1e-3 and convergence_ratio(e1, e2) >= 3.5


def test_cross_validate_identical_is_zero():
    n = 40
    coeffs = preset("C1", n)
    tr = simulate(build_initial_data(BUMP_DATA, n), coeffs, Grid.for_speed(n), 2.0, snapshot_stride=5)
    rep = cross_validate(tr, tr)
    assert rep.max_abs_error == rep.l2_error == rep.energy_rel_error == 0.0


def test_cross_validate_grid_mismatch():
    a = simulate(build_initial_data(BUMP_DATA, 20), preset("C1", 20), Grid.for_speed(20), 0.5, snapshot_stride=1)
    b = simulate(build_initial_data(BUMP_DATA, 40), preset("C1", 40), Grid.for_speed(40), 0.5, snapshot_stride=1)
    with pytest.raises(GridMismatch):
        cross_validate(a, b)


def test_conservation_of_pinned_eigenmode():
    drifts = []
    for n in (200, 400):
        traj, _ = pinned_run("sine-mode 1", 0.0, n, 10.0, record_stride=1)
        drifts.append(conservation_check(traj))
    assert drifts[0] <= 5e-4 and drifts[0] / drifts[1] >= 3.5


def test_conservation_zero_data():
    traj, _ = pinned_run(0.0, 0.0, 20, 1.0)
    with pytest.raises(ZeroInitialEnergy):
        conservation_check(traj)
