"""Finite-difference time stepping for the damped wave equation with dynamic
boundary conditions.

The scheme is a lumped-mass leapfrog.  Each grid node i carries a mass m_i
(the trapezoid weight, plus a boundary mass at the two walls) and the
semi-discrete system reads

    M u'' + D u' = f(u),     f_i = a_{i+1/2} g_i - a_{i-1/2} g_{i-1} (+ spring),

with cell slopes g_i = (u_{i+1} - u_i)/dx.  The boundary ODEs are folded into
the end-node equations: in the main mode the right node has mass
c1 + dx/2, damping c1*alpha1 and a spring c2*(u_N - u_*), so that u_t(1) is
eta1 and u(1) - u_* is eta2; the left node has mass c3 + dx/2 and damping
c3*gamma1, so that u_t(0) is zeta1.  In time, damping is centred

    M (u+ - 2u + u-)/dt^2 + D (u+ - u-)/(2 dt) = f(u),

which gives an exact discrete energy balance.  D also carries a small
numerical viscosity theta*dx^2*u_txx that removes the undamped grid-scale
modes a pure leapfrog keeps alive; it is O(dx^2) and switched off in the
pinned oracle mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import CflViolation, GridMismatch, GridTooCoarse, InstabilityDetected
from .model import CoefficientSet, Grid, InitialData, attractor_main, attractor_related, trapezoid_weights

MODES = ("main", "related", "pinned")
DEFAULT_VISCOSITY = 1.0


@dataclass
class WaveState:
    """Snapshot of a run at time t.

    ``v`` is the centred velocity (u^{n+1} - u^{n-1})/(2 dt).  In the main
    mode eta1 = v[N], zeta1 = v[0] and eta2 = u[N] - u_star; in the related
    mode eta = v[N] and zeta = v[0].
    """

    t: float
    u: np.ndarray
    u_prev: np.ndarray
    v: np.ndarray
    mode: str = "main"
    u_star: float = 0.0

    @property
    def eta1(self) -> float:
        return float(self.v[-1]) if self.mode == "main" else 0.0

    @property
    def eta2(self) -> float:
        return float(self.u[-1] - self.u_star) if self.mode == "main" else 0.0

    @property
    def zeta1(self) -> float:
        return float(self.v[0]) if self.mode == "main" else 0.0

    @property
    def eta(self) -> float:
        return float(self.v[-1]) if self.mode == "related" else 0.0

    @property
    def zeta(self) -> float:
        return float(self.v[0]) if self.mode == "related" else 0.0

    @property
    def n_cells(self) -> int:
        return len(self.u) - 1

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.u) * self.n_cells

    def boundary(self) -> dict:
        if self.mode == "main":
            return {"eta1": self.eta1, "eta2": self.eta2, "zeta1": self.zeta1}
        if self.mode == "related":
            return {"eta": self.eta, "zeta": self.zeta}
        return {}


@dataclass
class Trajectory:
    """Recorded time series of a run.

    Energies are p = 2 values.  ``e_scheme`` is the mean of the two
    half-step energies around each record; the leapfrog dissipates it
    exactly and it differs from ``e_total`` by O(dt^2).  ``snapshots``
    holds (t, v, g) triples when requested.
    """

    times: np.ndarray
    e_total: np.ndarray
    e_interior: np.ndarray
    e_boundary: np.ndarray
    dissipation_series: np.ndarray
    boundary_series: dict
    sup_dev: np.ndarray
    e_scheme: np.ndarray
    u_star: float
    grid: Grid
    mode: str
    record_stride: int
    snapshots: list = field(default_factory=list)
    final_state: Optional[WaveState] = None

    @property
    def energy_series(self) -> list:
        from .energy import EnergyBreakdown
        return [EnergyBreakdown(2.0, et, ei, eb, d) for et, ei, eb, d in
                zip(self.e_total, self.e_interior, self.e_boundary, self.dissipation_series)]

    def window(self, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
        sel = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        return self.times[sel], self.e_total[sel]


class FDStepper:
    """Precomputed operator for one (coefficients, grid, mode) triple."""

    def __init__(self, coeffs: CoefficientSet, grid: Grid, mode: str = "main",
                 viscosity: Optional[float] = None, u_star: float = 0.0,
                 pinned_values: tuple[float, float] = (0.0, 0.0)):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if coeffs.n_cells != grid.n_cells:
            raise GridMismatch(f"coefficients sampled on N={coeffs.n_cells}, grid has N={grid.n_cells}")
        if grid.n_cells < 3:
            raise GridTooCoarse("need at least 3 cells")
        limit = grid.dx / math.sqrt(coeffs.a_hi)
        if grid.dt > limit * (1 + 1e-12):
            raise CflViolation(f"dt={grid.dt:g} exceeds the stability limit dx/sqrt(a_hi)={limit:g}")
        if mode == "related" and (coeffs.q0 is None or coeffs.q1 is None):
            raise ValueError("related mode needs the gains q0 and q1")
        if viscosity is None:
            viscosity = 0.0 if mode == "pinned" else DEFAULT_VISCOSITY

        n, dx = grid.n_cells, grid.dx
        self.coeffs, self.grid, self.mode = coeffs, grid, mode
        self.viscosity = float(viscosity)
        self.u_star = float(u_star)
        self.pinned_values = pinned_values
        self.dt = grid.dt
        self.ah = coeffs.a_half
        self.w = trapezoid_weights(n)

        m = self.w.copy()
        d = self.w * coeffs.q_samples
        self.spring = 0.0
        if mode == "main":
            m[-1] += coeffs.c1
            m[0] += coeffs.c3
            d[-1] += coeffs.c1 * coeffs.alpha1
            d[0] += coeffs.c3 * coeffs.gamma1
            self.spring = coeffs.c2
        elif mode == "related":
            m[-1] += coeffs.a_right
            m[0] += coeffs.a_left
            d[-1] += coeffs.a_right * coeffs.q1
            d[0] += coeffs.a_left * coeffs.q0
        self.m, self.d = m, d

        # viscous cell coefficient, one per cell
        self.kv = np.full(n, self.viscosity * dx)
        self.active = slice(1, n) if mode == "pinned" else slice(0, n + 1)

        diag = d.copy()
        diag[:-1] += self.kv
        diag[1:] += self.kv
        self.d_diag = diag
        h = 0.5 * self.dt
        lo, hi = self.active.start, self.active.stop
        size = hi - lo
        ab = np.zeros((2, size))
        ab[1] = m[lo:hi] + h * diag[lo:hi]
        ab[0, 1:] = -h * self.kv[lo:hi - 1]
        self._chol = cholesky_banded(ab, check_finite=False)

    # linear algebra helpers -------------------------------------------------
    def damping_apply(self, v: np.ndarray) -> np.ndarray:
        """D v with the viscous stencil (pinned walls count as v = 0)."""
        r = self.d_diag * v
        r[:-1] -= self.kv * v[1:]
        r[1:] -= self.kv * v[:-1]
        return r

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rhs)
        out[self.active] = cho_solve_banded((self._chol, False), rhs[self.active], check_finite=False)
        return out

    def force(self, u: np.ndarray) -> np.ndarray:
        flux = self.ah * np.diff(u) * self.grid.n_cells
        f = np.zeros_like(u)
        f[:-1] += flux
        f[1:] -= flux
        if self.spring:
            f[-1] -= self.spring * (u[-1] - self.u_star)
        return f

    # stepping ---------------------------------------------------------------
    def _advance(self, u: np.ndarray, u_prev: np.ndarray, f: np.ndarray) -> np.ndarray:
        h, dt = 0.5 * self.dt, self.dt
        rhs = 2.0 * self.m * u - self.m * u_prev + h * self.damping_apply(u_prev) + dt * dt * f
        if self.mode == "pinned":
            rhs = self._pinned_rhs(rhs)
        u_next = self._solve(rhs)
        if self.mode == "pinned":
            u_next[0], u_next[-1] = self.pinned_values
        return u_next

    def _pinned_rhs(self, rhs: np.ndarray) -> np.ndarray:
        # the wall values sit on both sides of the centred viscous term; move
        # the u+ part to the right-hand side so the two cancel
        h = 0.5 * self.dt
        rhs = rhs.copy()
        rhs[1] += h * self.kv[0] * self.pinned_values[0]
        rhs[-2] += h * self.kv[-1] * self.pinned_values[1]
        return rhs

    def velocity(self, u: np.ndarray, u_prev: np.ndarray, f: Optional[np.ndarray] = None) -> np.ndarray:
        """Centred velocity (u^{n+1} - u^{n-1})/(2dt) from u^n, u^{n-1} alone."""
        if f is None:
            f = self.force(u)
        rhs = self.m * (u - u_prev) / self.dt + 0.5 * self.dt * f
        v = self._solve(rhs)
        if self.mode == "pinned":
            v[0] = v[-1] = 0.0
        return v

    def start(self, u0: np.ndarray, v0: np.ndarray) -> np.ndarray:
        """u^{-1} from the second-order Taylor expansion of the semi-discrete system."""
        dt = self.dt
        acc = (self.force(u0) - self.damping_apply(v0)) / self.m
        u_prev = u0 - dt * v0 + 0.5 * dt * dt * acc
        if self.mode == "pinned":
            u_prev[0], u_prev[-1] = self.pinned_values
        return u_prev

    def initial_state(self, init: InitialData) -> WaveState:
        u0 = np.array(init.u0_samples, dtype=float)
        v0 = np.array(init.u1_samples, dtype=float)
        if len(u0) != self.grid.n_cells + 1:
            raise GridMismatch("initial data and grid sizes differ")
        if self.mode == "main":
            v0[-1], v0[0] = init.eta1_0, init.zeta1_0
        elif self.mode == "related":
            v0[-1], v0[0] = init.eta_0, init.zeta_0
        else:
            v0[0] = v0[-1] = 0.0
        return WaveState(0.0, u0, self.start(u0, v0), v0, self.mode, self.u_star)

    def step(self, state: WaveState) -> WaveState:
        f = self.force(state.u)
        u_next = self._advance(state.u, state.u_prev, f)
        if not np.all(np.isfinite(u_next)):
            raise InstabilityDetected(f"non-finite value at t={state.t + self.dt:g}")
        v_next = self.velocity(u_next, state.u)
        return WaveState(state.t + self.dt, u_next, state.u.copy(), v_next, self.mode, self.u_star)

    def scheme_energy(self, u_next: np.ndarray, u: np.ndarray) -> float:
        """Half-step energy that the leapfrog dissipates exactly.

        With K the stiffness (f = -K(u - u_eq)) and w = (u+ - u)/dt it is
        1/2 w^T (M - dt^2 K/4) w + 1/2 ((u+ + u)/2)^T K ((u+ + u)/2).
        """
        dt = self.dt
        wv = (u_next - u) / dt
        mid = 0.5 * (u_next + u)
        kin = 0.5 * float(np.dot(self.m, wv * wv)) - dt * dt / 8.0 * self._stiff_form(wv, homogeneous=True)
        return kin + 0.5 * self._stiff_form(mid, homogeneous=False)

    def _stiff_form(self, u: np.ndarray, homogeneous: bool) -> float:
        g = np.diff(u) * self.grid.n_cells
        val = float(np.sum(self.ah * g * g) * self.grid.dx)
        if self.spring:
            s = u[-1] if homogeneous else u[-1] - self.u_star
            val += self.spring * s * s
        return val


def _u_star_for(init: InitialData, coeffs: CoefficientSet, mode: str) -> float:
    if mode == "main":
        return attractor_main(init)
    if mode == "related":
        return attractor_related(init, coeffs, "corrected")
    return 0.0


def make_stepper(init: InitialData, coeffs: CoefficientSet, grid: Grid, mode: str = "main",
                 viscosity: Optional[float] = None) -> FDStepper:
    pinned = (float(init.u0_samples[0]), float(init.u0_samples[-1]))
    return FDStepper(coeffs, grid, mode, viscosity, _u_star_for(init, coeffs, mode), pinned)


def initial_state(init: InitialData, coeffs: CoefficientSet, grid: Grid, mode: str = "main",
                  viscosity: Optional[float] = None) -> WaveState:
    return make_stepper(init, coeffs, grid, mode, viscosity).initial_state(init)


def fd_step(state: WaveState, coeffs: CoefficientSet, grid: Grid,
            viscosity: Optional[float] = None) -> WaveState:
    """Advance one time step.  Builds the operator on each call; loops should
    hold an :class:`FDStepper` instead."""
    pinned = (float(state.u[0]), float(state.u[-1]))
    stepper = FDStepper(coeffs, grid, state.mode, viscosity, state.u_star, pinned)
    return stepper.step(state)


def boundary_derivative(state: WaveState, side: str, grid: Grid) -> float:
    """Second-order one-sided u_x at a wall."""
    u = state.u if isinstance(state, WaveState) else np.asarray(state, dtype=float)
    if grid.n_cells < 3 or len(u) < 4:
        raise GridTooCoarse("one-sided traces need N >= 3")
    dx = grid.dx
    if side == "right":
        return float((3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dx))
    if side == "left":
        return float((-3 * u[0] + 4 * u[1] - u[2]) / (2 * dx))
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def simulate(init: InitialData, coeffs: CoefficientSet, grid: Grid, horizon: float,
             record_stride: int = 1, mode: str = "main", viscosity: Optional[float] = None,
             snapshot_stride: Optional[int] = None) -> Trajectory:
    """Run to ``horizon`` recording every ``record_stride`` steps.

    Snapshots of (t, v, g) are kept every ``snapshot_stride`` records.
    """
    from .energy import dissipation, energy, sup_deviation

    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    stepper = make_stepper(init, coeffs, grid, mode, viscosity)
    state = stepper.initial_state(init)
    n_steps = int(round(horizon / grid.dt))

    times, et, ei, eb, diss, sup, es = [], [], [], [], [], [], []
    bser = {k: [] for k in state.boundary()}
    snaps = []

    u, u_prev = state.u, state.u_prev
    e_half_prev = stepper.scheme_energy(u, u_prev)
    for k in range(n_steps + 1):
        f = stepper.force(u)
        u_next = stepper._advance(u, u_prev, f)
        if not np.all(np.isfinite(u_next)):
            raise InstabilityDetected(f"non-finite value at t={(k + 1) * grid.dt:g}")
        e_half = stepper.scheme_energy(u_next, u)
        if k % record_stride == 0 or k == n_steps:
            if k == 0:
                st, v = state, state.v
            else:
                v = stepper.velocity(u, u_prev, f)
                st = WaveState(k * grid.dt, u, u_prev, v, mode, stepper.u_star)
            br = energy(st, coeffs, grid, 2.0)
            times.append(st.t)
            et.append(br.e_total)
            ei.append(br.e_interior)
            eb.append(br.e_boundary)
            diss.append(dissipation(st, coeffs, grid))
            sup.append(sup_deviation(st, stepper.u_star))
            es.append(0.5 * (e_half_prev + e_half))
            for name, val in st.boundary().items():
                bser[name].append(val)
            if snapshot_stride and (len(times) - 1) % snapshot_stride == 0:
                snaps.append((st.t, v.copy(), st.slopes))
            last = st
        if k == n_steps:
            break
        e_half_prev = e_half
        u_prev, u = u, u_next

    return Trajectory(
        times=np.array(times), e_total=np.array(et), e_interior=np.array(ei),
        e_boundary=np.array(eb), dissipation_series=np.array(diss),
        boundary_series={k: np.array(v) for k, v in bser.items()},
        sup_dev=np.array(sup), e_scheme=np.array(es), u_star=stepper.u_star, grid=grid,
        mode=mode, record_stride=record_stride, snapshots=snaps, final_state=last)
