"""Energy functionals, dissipation, decay fits and related inequalities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from .errors import (
    InvalidEpsilon,
    InvalidExponent,
    NonpositiveEnergyInWindow,
    WindowEmpty,
    ZeroEnergyStart,
)
from .model import CoefficientSet, Grid, trapezoid_weights

MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class EnergyBreakdown:
    p: float
    e_total: float
    e_interior: float
    e_boundary: float
    dissipation: Optional[float] = None


@dataclass(frozen=True)
class DecayFit:
    nu: float
    log_M: float
    r2: float
    window: tuple

    @property
    def M(self) -> float:
        return float(np.exp(self.log_M))


def _boundary_weights(coeffs: CoefficientSet, mode: str) -> tuple[list, list]:
    """(weights, damping weights) paired with the boundary values of a state."""
    if mode == "main":
        return [coeffs.c1, coeffs.c2, coeffs.c3], [coeffs.c1 * coeffs.alpha1, 0.0, coeffs.c3 * coeffs.gamma1]
    if mode == "related":
        return [coeffs.a_right, coeffs.a_left], [coeffs.a_right * coeffs.q1, coeffs.a_left * coeffs.q0]
    return [], []


def _boundary_values(state) -> list:
    if state.mode == "main":
        return [state.eta1, state.eta2, state.zeta1]
    if state.mode == "related":
        return [state.eta, state.zeta]
    return []


def energy(state, coeffs: CoefficientSet, grid: Grid, p: float = 2.0) -> EnergyBreakdown:
    """E_p split into interior and boundary parts.

    The interior part is (1/p) * [trapezoid sum of |v|^p + sum over cells of
    a_{i+1/2} |g_i|^p dx], with g the cell slopes.  Boundary weights are
    a(1)/beta1, a(1)alpha2/beta1, a(0)/mu1 for (eta1, eta2, zeta1).
    """
    if not p >= 1:
        raise InvalidExponent(f"p must be >= 1, got {p}")
    v = np.asarray(state.v, dtype=float)
    g = np.diff(np.asarray(state.u, dtype=float)) * grid.n_cells
    w = trapezoid_weights(grid.n_cells)
    e_int = (np.dot(w, np.abs(v) ** p) + np.sum(coeffs.a_half * np.abs(g) ** p) * grid.dx) / p
    weights, _ = _boundary_weights(coeffs, state.mode)
    e_bnd = sum(c * abs(b) ** p for c, b in zip(weights, _boundary_values(state))) / p
    diss = dissipation(state, coeffs, grid) if p == 2 else None
    return EnergyBreakdown(float(p), float(e_int + e_bnd), float(e_int), float(e_bnd), diss)


def dissipation(state, coeffs: CoefficientSet, grid: Grid) -> float:
    """Instantaneous energy loss rate: -int q v^2 - boundary damping terms."""
    v = np.asarray(state.v, dtype=float)
    w = trapezoid_weights(grid.n_cells)
    total = np.dot(w * coeffs.q_samples, v * v)
    _, damp = _boundary_weights(coeffs, state.mode)
    total += sum(c * b * b for c, b in zip(damp, _boundary_values(state)))
    return -float(total)


def hat_energy(rho: np.ndarray, xi: np.ndarray, p: float, dx: Optional[float] = None) -> float:
    """int_0^1 (|rho|^p + |xi|^p) dx by trapezoid."""
    if not p >= 1:
        raise InvalidExponent(f"p must be >= 1, got {p}")
    n = len(rho) - 1
    return float(np.dot(trapezoid_weights(n), np.abs(rho) ** p + np.abs(xi) ** p))


def fit_decay(times, values, window: tuple = (5.0, np.inf)) -> DecayFit:
    """Least-squares line through (t, log E) on the window."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t0, t1 = window
    sel = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    if np.count_nonzero(sel) < MIN_FIT_SAMPLES:
        raise WindowEmpty(f"fewer than {MIN_FIT_SAMPLES} samples in window [{t0}, {t1}]")
    t, e = times[sel], values[sel]
    if np.any(~(e > 0)):
        raise NonpositiveEnergyInWindow("energy must be strictly positive inside the fit window")
    res = stats.linregress(t, np.log(e))
    return DecayFit(nu=float(-res.slope), log_M=float(res.intercept),
                    r2=float(res.rvalue ** 2), window=(float(t[0]), float(t[-1])))


def komornik_ratio(times, values) -> float:
    """Smallest C with int_S^T E dt <= C E(S) over the sampled S."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not values[0] > 0:
        raise ZeroEnergyStart("energy vanishes at the start of the series")
    tail = cumulative_trapezoid(values[::-1], -times[::-1], initial=0.0)[::-1]
    ok = values > 0
    return float(np.max(tail[ok] / values[ok]))


def sup_deviation(state, u_star: float) -> float:
    u = state.u if hasattr(state, "u") else state
    return float(np.max(np.abs(np.asarray(u) - u_star)))


def sup_bound_constant(coeffs: CoefficientSet) -> float:
    """C with max_x |u - u_*|^2 <= C E(t) in the main system.

    |u(x) - u_*| <= |u(x) - u(1)| + |eta2|, the first term is bounded by
    (int u_x^2)^{1/2} <= (2E/a_lo)^{1/2} and eta2^2 <= 2 beta1 E/(a(1) alpha2).
    """
    return 4.0 / coeffs.a_lo + 4.0 * coeffs.beta1 / (coeffs.a_right * coeffs.alpha2)


def young_constant(p: float, eps: float) -> float:
    """Constant C(p) in |a+b|^p <= (1+eps)|a|^p + C eps^(1-p) |b|^p.

    Returns the envelope max(2^p, p 2^{p(p-1)}); it does not depend on eps.
    """
    if not p > 1:
        raise InvalidExponent(f"p must be > 1, got {p}")
    if not 0 < eps < 2:
        raise InvalidEpsilon(f"eps must lie in (0, 2), got {eps}")
    return float(max(2.0 ** p, p * 2.0 ** (p * (p - 1))))


def check_young(p: float, n_samples: int = 1_000_000, seed: int = 0,
                bound: float = 10.0) -> int:
    """Number of violations on random (a, b, eps) with a, b in [-bound, bound]."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-bound, bound, n_samples)
    b = rng.uniform(-bound, bound, n_samples)
    eps = rng.uniform(0.0, 2.0, n_samples)
    eps = np.where(eps == 0.0, np.nextafter(0.0, 1.0), eps)
    c = young_constant(p, 1.0)
    lhs = np.abs(a + b) ** p
    rhs = (1 + eps) * np.abs(a) ** p + c * eps ** (1 - p) * np.abs(b) ** p
    return int(np.count_nonzero(lhs > rhs * (1 + 1e-14)))


def dissipation_residual(times, e_total, dissipation_series, t_end: Optional[float] = None) -> float:
    """L1-in-time size of (E_{n+1} - E_{n-1})/(2 dt) - D_n over interior records."""
    times = np.asarray(times, dtype=float)
    e = np.asarray(e_total, dtype=float)
    d = np.asarray(dissipation_series, dtype=float)
    dt = times[1] - times[0]
    rate = (e[2:] - e[:-2]) / (times[2:] - times[:-2])
    res = np.abs(rate - d[1:-1])
    t_mid = times[1:-1]
    if t_end is not None:
        res = res[t_mid <= t_end + 1e-12]
    return float(np.sum(res) * dt)
