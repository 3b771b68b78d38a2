"""Independent reference solutions and cross-checks between solvers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import GridMismatch, ZeroInitialEnergy
from .model import Grid, InitialData, build_initial_data, validate_coefficients

Profile = Union[Callable, np.ndarray]

# samples used when a profile is passed as a function
ORACLE_SAMPLES = 20000


@dataclass(frozen=True)
class ComparisonReport:
    max_abs_error: float
    l2_error: float
    energy_rel_error: float = 0.0
    convergence_ratio: float = float("nan")


def _as_samples(profile: Profile) -> np.ndarray:
    if callable(profile):
        return np.asarray(profile(np.linspace(0.0, 1.0, ORACLE_SAMPLES + 1)), dtype=float)
    return np.asarray(profile, dtype=float)


def _odd_periodic(samples: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Odd, 2-periodic extension of the piecewise-linear interpolant."""
    n = len(samples) - 1
    s = np.mod(s + 1.0, 2.0) - 1.0  # into [-1, 1)
    sign = np.sign(s)
    return sign * np.interp(np.abs(s), np.linspace(0.0, 1.0, n + 1), samples)


def _even_antiderivative(samples: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Exact antiderivative of the odd periodic extension, zero at s = 0.

    It is even and 2-periodic because the odd extension integrates to zero
    over a period.
    """
    n = len(samples) - 1
    dx = 1.0 / n
    nodes = np.concatenate([[0.0], np.cumsum(0.5 * dx * (samples[1:] + samples[:-1]))])
    s = np.abs(np.mod(s + 1.0, 2.0) - 1.0)
    j = np.minimum((s * n).astype(int), n - 1)
    tau = s - j * dx
    slope = (samples[j + 1] - samples[j]) / dx
    return nodes[j] + samples[j] * tau + 0.5 * slope * tau * tau


def dalembert_reference(w0: Profile, w1: Profile, t: float, x) -> Union[float, np.ndarray]:
    """Solution of w_tt = w_xx on [0, 1] with w = 0 at both walls.

    w0, w1 are uniform samples on [0, 1] (or functions, sampled finely);
    the w1 integral is exact for their piecewise-linear interpolant.
    """
    a0, a1 = _as_samples(w0), _as_samples(w1)
    x = np.asarray(x, dtype=float)
    val = 0.5 * (_odd_periodic(a0, x + t) + _odd_periodic(a0, x - t))
    val = val + 0.5 * (_even_antiderivative(a1, x + t) - _even_antiderivative(a1, x - t))
    return float(val) if val.ndim == 0 else val


def _normalise(snap) -> tuple[float, np.ndarray, np.ndarray]:
    """(t, nodal velocity, slope at cell midpoints)."""
    t, v, w = snap
    v, w = np.asarray(v), np.asarray(w)
    if len(w) == len(v):
        w = 0.5 * (w[1:] + w[:-1])
    return t, v, w


def cross_validate(traj_a, traj_b, t_end: Optional[float] = None) -> ComparisonReport:
    """Compare velocity/slope snapshots and E_2 series at common record times."""
    if traj_a.grid.n_cells != traj_b.grid.n_cells:
        raise GridMismatch("trajectories live on different grids")
    snaps_a = {round(s[0], 9): _normalise(s) for s in traj_a.snapshots}
    snaps_b = {round(s[0], 9): _normalise(s) for s in traj_b.snapshots}
    common = sorted(set(snaps_a) & set(snaps_b))
    if t_end is not None:
        common = [t for t in common if t <= t_end + 1e-9]
    if not common:
        raise GridMismatch("trajectories share no snapshot times")
    dx = traj_a.grid.dx
    max_err, sq = 0.0, []
    for t in common:
        _, va, wa = snaps_a[t]
        _, vb, wb = snaps_b[t]
        dv, dw = va - vb, wa - wb
        max_err = max(max_err, float(np.max(np.abs(dv))), float(np.max(np.abs(dw))))
        sq.append(float(np.sum(dv * dv) * dx + np.sum(dw * dw) * dx))
    l2 = float(np.sqrt(np.mean(sq)))

    ta = {round(t, 9): e for t, e in zip(traj_a.times, traj_a.e_total)}
    tb = {round(t, 9): e for t, e in zip(traj_b.times, traj_b.e_total)}
    et = sorted(set(ta) & set(tb))
    if t_end is not None:
        et = [t for t in et if t <= t_end + 1e-9]
    e0 = max(ta[et[0]], tb[et[0]]) if et else 0.0
    rel = max(abs(ta[t] - tb[t]) for t in et) / e0 if e0 > 0 else 0.0
    return ComparisonReport(max_err, l2, float(rel))


def convergence_ratio(coarse_error: float, fine_error: float) -> float:
    return float(coarse_error / fine_error) if fine_error > 0 else float("inf")


def conservation_check(traj) -> float:
    """Largest relative drift of E_2 from its initial value."""
    e = np.asarray(traj.e_total if hasattr(traj, "e_total") else traj, dtype=float)
    if not e[0] > 0:
        raise ZeroInitialEnergy("initial energy is zero; relative drift undefined")
    return float(np.max(np.abs(e - e[0])) / e[0])


def pinned_run(w0_spec, w1_spec, n_cells: int, horizon: float, cfl: float = 0.9,
               record_stride: Optional[int] = None):
    """Undamped run with the walls held at their initial values."""
    from .solver_fd import simulate

    coeffs = validate_coefficients({"a": 1.0, "q": 0.0}, n_cells, require_damping=False)
    grid = Grid.for_speed(n_cells, 1.0, cfl)
    init = build_initial_data({"u0": w0_spec, "u1": w1_spec}, n_cells)
    stride = record_stride or max(1, int(round(horizon / grid.dt)))
    return simulate(init, coeffs, grid, horizon, stride, mode="pinned"), init


def dalembert_error(w0_spec, w1_spec, n_cells: int, horizon: float, cfl: float = 0.9,
                    w0_exact: Optional[Callable] = None, w1_exact: Optional[Callable] = None) -> float:
    """Max nodal error of the pinned FD run against the reflected d'Alembert formula.

    The reference uses the exact profiles when given, otherwise the
    samples of a much finer grid.
    """
    from .model import sample_function

    traj, init = pinned_run(w0_spec, w1_spec, n_cells, horizon, cfl)
    state = traj.final_state
    fine = ORACLE_SAMPLES
    ref0 = w0_exact if w0_exact is not None else sample_function(w0_spec, fine)
    ref1 = w1_exact if w1_exact is not None else sample_function(w1_spec, fine)
    x = np.linspace(0.0, 1.0, n_cells + 1)
    exact = dalembert_reference(ref0, ref1, state.t, x)
    return float(np.max(np.abs(state.u - exact)))
