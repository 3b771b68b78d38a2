"""Exact-characteristics solver for the constant-speed system in Riemann
invariants rho = u_t + u_x (moves left) and xi = u_t - u_x (moves right).

With a = 1 the damped wave equation becomes

    rho_t - rho_x = -(q/2)(rho + xi),     xi_t + xi_x = -(q/2)(rho + xi),

and at unit CFL (dt = dx) both families hop exactly one node per step.  The
source is integrated by the trapezoid rule along each characteristic; the
implicit half couples rho and xi at the arrival node only through
s = rho + xi, which is solved in closed form.  The walls close the system
with (rho + xi)(1) = 2 eta1 and (rho + xi)(0) = 2 zeta1, and the boundary
triple (eta2, eta1, zeta1) follows y' = A y + B (rho - xi) integrated by the
variation-of-constants formula with a trapezoid rule for the input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import expm

from .errors import GridMismatch, InstabilityDetected, LengthMismatch, NonUnitCfl, RequiresConstantSpeed
from .energy import hat_energy
from .model import CoefficientSet, Grid, InitialData, attractor_main, trapezoid_weights

CORRECTED_SOURCE = 0.5
PRINTED_SOURCE = 2.0


@dataclass
class RiemannState:
    t: float
    rho: np.ndarray
    xi: np.ndarray
    eta1: float = 0.0
    eta2: float = 0.0
    zeta1: float = 0.0


@dataclass(frozen=True)
class BoundaryFlowMatrices:
    """Boundary ODE y' = A y + B w with y = (eta2, eta1, zeta1) and
    w = ((rho - xi)(1), (rho - xi)(0)), i.e. twice the wall slopes."""

    A: np.ndarray
    B: np.ndarray
    expA_dt: np.ndarray
    dt: float

    @classmethod
    def build(cls, coeffs: CoefficientSet, dt: float) -> "BoundaryFlowMatrices":
        a1, a2, b1, g1, m1 = (coeffs.alpha1, coeffs.alpha2, coeffs.beta1, coeffs.gamma1, coeffs.mu1)
        # eta1' = -alpha1 eta1 - alpha2 eta2 - beta1 u_x(1), in (eta2, eta1, zeta1) order
        A = np.array([[0.0, 1.0, 0.0], [-a2, -a1, 0.0], [0.0, 0.0, -g1]])
        B = np.array([[0.0, 0.0], [-0.5 * b1, 0.0], [0.0, 0.5 * m1]])
        return cls(A, B, expm(A * dt), float(dt))


def to_riemann(v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise LengthMismatch(f"velocity and slope shapes differ: {v.shape} vs {w.shape}")
    return v + w, v - w


def from_riemann(state: Union[RiemannState, tuple]) -> tuple[np.ndarray, np.ndarray]:
    rho, xi = (state.rho, state.xi) if isinstance(state, RiemannState) else state
    rho, xi = np.asarray(rho, dtype=float), np.asarray(xi, dtype=float)
    if rho.shape != xi.shape:
        raise LengthMismatch(f"rho and xi shapes differ: {rho.shape} vs {xi.shape}")
    return 0.5 * (rho + xi), 0.5 * (rho - xi)


def boundary_flow(boundary, traces_start, traces_end, matrices: BoundaryFlowMatrices,
                  dt: Optional[float] = None) -> np.ndarray:
    """One variation-of-constants step with trapezoid quadrature of the input."""
    y = np.asarray(boundary, dtype=float)
    if dt is None or dt == matrices.dt:
        E = matrices.expA_dt
        dt = matrices.dt
    else:
        E = expm(matrices.A * dt)
    w0 = np.asarray(traces_start, dtype=float)
    w1 = np.asarray(traces_end, dtype=float)
    return E @ y + 0.5 * dt * (E @ (matrices.B @ w0) + matrices.B @ w1)


def _check_grid(coeffs: CoefficientSet, grid: Grid) -> None:
    if abs(grid.dt - grid.dx) > 1e-14 * grid.dx:
        raise NonUnitCfl(f"characteristic stepping needs dt = dx, got dt={grid.dt:g}, dx={grid.dx:g}")
    if coeffs is not None:
        if not coeffs.is_constant_speed:
            raise RequiresConstantSpeed("the Riemann-invariant solver assumes a = 1")
        if coeffs.n_cells != grid.n_cells:
            raise GridMismatch("coefficients and grid sizes differ")


def _transport(rho, xi, q, dt, source_factor):
    """Explicit half of the trapezoid at the departure node, then shift.

    Returns (A, B): A[i] is the rho value arriving at node i from i+1
    (valid for i < N), B[i] the xi value arriving from i-1 (valid for i > 0).
    """
    c = 0.5 * dt * source_factor * q
    s = rho + xi
    rho_pre = rho - c * s
    xi_pre = xi - c * s
    A = np.empty_like(rho)
    B = np.empty_like(xi)
    A[:-1] = rho_pre[1:]
    B[1:] = xi_pre[:-1]
    A[-1] = np.nan
    B[0] = np.nan
    return A, B


def _implicit_interior(A, B, q, dt, source_factor, rho_new, xi_new):
    c = 0.5 * dt * source_factor * q[1:-1]
    a, b = A[1:-1], B[1:-1]
    s = (a + b) / (1.0 + 2.0 * c)
    rho_new[1:-1] = a - c * s
    xi_new[1:-1] = b - c * s


def riemann_step(state: RiemannState, coeffs: CoefficientSet, grid: Grid,
                 matrices: Optional[BoundaryFlowMatrices] = None,
                 source_factor: float = CORRECTED_SOURCE) -> RiemannState:
    """Advance the boundary-coupled system by dt = dx.

    ``source_factor`` k sets the source to -k q (rho + xi); 1/2 is what the
    wave equation gives.
    """
    _check_grid(coeffs, grid)
    if matrices is None:
        matrices = BoundaryFlowMatrices.build(coeffs, grid.dt)
    dt, q = grid.dt, coeffs.q_samples
    rho, xi = state.rho, state.xi
    A, B = _transport(rho, xi, q, dt, source_factor)
    rho_new = np.empty_like(rho)
    xi_new = np.empty_like(xi)
    _implicit_interior(A, B, q, dt, source_factor, rho_new, xi_new)

    # walls: xi_N = B_N - 2 c_N eta1+, rho_0 = A_0 - 2 c_0 zeta1+, and the
    # traces (rho - xi) are affine in the new boundary triple
    kN = dt * source_factor * q[-1]
    k0 = dt * source_factor * q[0]
    P = np.array([[0.0, 2.0 * (1.0 + kN), 0.0], [0.0, 0.0, -2.0 * (1.0 + k0)]])
    r = np.array([-2.0 * B[-1], 2.0 * A[0]])
    y = np.array([state.eta2, state.eta1, state.zeta1])
    w_start = np.array([rho[-1] - xi[-1], rho[0] - xi[0]])
    E, Bm = matrices.expA_dt, matrices.B
    lhs = np.eye(3) - 0.5 * dt * Bm @ P
    rhs = E @ y + 0.5 * dt * (E @ (Bm @ w_start) + Bm @ r)
    eta2, eta1, zeta1 = np.linalg.solve(lhs, rhs)

    xi_new[-1] = B[-1] - kN * eta1
    rho_new[-1] = 2.0 * eta1 - xi_new[-1]
    rho_new[0] = A[0] - k0 * zeta1
    xi_new[0] = 2.0 * zeta1 - rho_new[0]
    return RiemannState(state.t + dt, rho_new, xi_new, float(eta1), float(eta2), float(zeta1))


def forced_step(rho, xi, q, dt, h_left: float, h_right: float,
                source_factor: float = CORRECTED_SOURCE):
    """One step with prescribed wall sums rho + xi = h_left at 0, h_right at 1."""
    A, B = _transport(rho, xi, q, dt, source_factor)
    rho_new = np.empty_like(rho)
    xi_new = np.empty_like(xi)
    _implicit_interior(A, B, q, dt, source_factor, rho_new, xi_new)
    c0 = 0.5 * dt * source_factor * q[0]
    cN = 0.5 * dt * source_factor * q[-1]
    xi_new[-1] = B[-1] - cN * h_right
    rho_new[-1] = h_right - xi_new[-1]
    rho_new[0] = A[0] - c0 * h_left
    xi_new[0] = h_left - rho_new[0]
    return rho_new, xi_new


def initial_riemann_state(init: InitialData, grid: Grid) -> RiemannState:
    """Riemann data from (u0, u1): nodal slope by second-order differences."""
    v = np.array(init.u1_samples, dtype=float)
    v[-1], v[0] = init.eta1_0, init.zeta1_0
    w = np.gradient(np.asarray(init.u0_samples, dtype=float), grid.dx, edge_order=2)
    rho, xi = to_riemann(v, w)
    return RiemannState(0.0, rho, xi, init.eta1_0, init.eta2_0, init.zeta1_0)


def riemann_energy(state: RiemannState, coeffs: CoefficientSet) -> float:
    """E_2 of the main system, 1/2 int (u_t^2 + u_x^2) plus boundary terms."""
    v, w = from_riemann(state)
    wts = trapezoid_weights(len(v) - 1)
    interior = 0.5 * np.dot(wts, v * v + w * w)
    boundary = 0.5 * (coeffs.c1 * state.eta1 ** 2 + coeffs.c2 * state.eta2 ** 2 + coeffs.c3 * state.zeta1 ** 2)
    return float(interior + boundary)


@dataclass
class RiemannTrajectory:
    times: np.ndarray
    e_total: np.ndarray
    boundary_series: dict
    grid: Grid
    record_stride: int
    u_star: float
    snapshots: list = field(default_factory=list)
    final_state: Optional[RiemannState] = None


def simulate_riemann(init: InitialData, coeffs: CoefficientSet, grid: Grid, horizon: float,
                     record_stride: int = 1, snapshot_stride: Optional[int] = None,
                     source_factor: float = CORRECTED_SOURCE) -> RiemannTrajectory:
    """Boundary-coupled run; snapshots hold (t, v, w) with v = u_t, w = u_x."""
    _check_grid(coeffs, grid)
    mats = BoundaryFlowMatrices.build(coeffs, grid.dt)
    state = initial_riemann_state(init, grid)
    n_steps = int(round(horizon / grid.dt))
    times, energies, snaps = [], [], []
    bser = {"eta1": [], "eta2": [], "zeta1": []}
    for k in range(n_steps + 1):
        if k % record_stride == 0:
            times.append(state.t)
            energies.append(riemann_energy(state, coeffs))
            bser["eta1"].append(state.eta1)
            bser["eta2"].append(state.eta2)
            bser["zeta1"].append(state.zeta1)
            if snapshot_stride and (len(times) - 1) % snapshot_stride == 0:
                v, w = from_riemann(state)
                snaps.append((state.t, v, w))
        if k == n_steps:
            break
        state = riemann_step(state, coeffs, grid, mats, source_factor)
        if not (np.all(np.isfinite(state.rho)) and np.all(np.isfinite(state.xi))):
            raise InstabilityDetected(f"non-finite value at t={state.t:g}")
    return RiemannTrajectory(np.array(times), np.array(energies),
                             {k: np.array(v) for k, v in bser.items()}, grid, record_stride,
                             attractor_main(init), snaps, state)


def _sampler(h, n_steps: int, dt: float) -> np.ndarray:
    if callable(h):
        return np.array([float(h(k * dt)) for k in range(n_steps + 1)])
    if np.isscalar(h):
        return np.full(n_steps + 1, float(h))
    h = np.asarray(h, dtype=float)
    if len(h) < n_steps + 1:
        raise LengthMismatch(f"boundary input needs {n_steps + 1} samples, got {len(h)}")
    return h[:n_steps + 1]


def simulate_forced(rho0, xi0, q, h1: Union[Callable, np.ndarray, float],
                    h2: Union[Callable, np.ndarray, float], p: float, horizon: float,
                    grid: Optional[Grid] = None,
                    source_factor: float = CORRECTED_SOURCE) -> tuple[np.ndarray, np.ndarray]:
    """Run with prescribed wall sums and return (times, E_hat_p(t)).

    h1 feeds x = 0 and h2 feeds x = 1; either may be a function of t, a
    constant or an array sampled at the solver steps.
    """
    rho = np.array(rho0, dtype=float)
    xi = np.array(xi0, dtype=float)
    if rho.shape != xi.shape:
        raise LengthMismatch("rho0 and xi0 shapes differ")
    n = len(rho) - 1
    grid = grid or Grid.unit(n)
    _check_grid(None, grid)
    q = np.asarray(q, dtype=float)
    if q.shape != rho.shape:
        raise LengthMismatch("q must be sampled on the same grid")
    n_steps = int(round(horizon / grid.dt))
    hl = _sampler(h1, n_steps, grid.dt)
    hr = _sampler(h2, n_steps, grid.dt)
    out = np.empty(n_steps + 1)
    out[0] = hat_energy(rho, xi, p)
    for k in range(n_steps):
        rho, xi = forced_step(rho, xi, q, grid.dt, hl[k + 1], hr[k + 1], source_factor)
        out[k + 1] = hat_energy(rho, xi, p)
    if not np.all(np.isfinite(out)):
        raise InstabilityDetected("non-finite energy in forced run")
    return np.arange(n_steps + 1) * grid.dt, out
