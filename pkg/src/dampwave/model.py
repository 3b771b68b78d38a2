"""Domain types, coefficient validation and attractor values.

Profiles live on the uniform grid ``x_i = i/N`` as nodal samples; anything
between nodes is linear interpolation.  All integrals over [0, 1] use the
composite trapezoid rule on that grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    EmptySupport,
    LengthMismatch,
    NegativeDamping,
    NonPositiveGain,
    NonPositiveWaveSpeed,
    TableNotOnUnitInterval,
    UnknownPreset,
    ZeroDenominator,
)

FunctionSpec = Union[float, int, str, Mapping[str, Any], Sequence[float], np.ndarray]

GAIN_NAMES = ("alpha1", "alpha2", "beta1", "gamma1", "mu1")

# snapping tolerance, in units of dx
_SNAP_EPS = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid on [0, 1]."""

    n_cells: int
    dt: float
    cfl: float = 0.9

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_cells + 1)

    @classmethod
    def for_speed(cls, n_cells: int, a_hi: float = 1.0, cfl: float = 0.9) -> "Grid":
        """Grid whose step sits at ``cfl`` times the explicit stability limit."""
        return cls(n_cells, cfl * (1.0 / n_cells) / math.sqrt(a_hi), cfl)

    @classmethod
    def unit(cls, n_cells: int) -> "Grid":
        """dt = dx, the characteristic grid of the constant-speed solver."""
        return cls(n_cells, 1.0 / n_cells, 1.0)


def trapezoid_weights(n_cells: int) -> np.ndarray:
    w = np.full(n_cells + 1, 1.0 / n_cells)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def trapz(values: np.ndarray, dx: float) -> float:
    values = np.asarray(values, dtype=float)
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def _n_cells_of(grid: Union[Grid, int]) -> int:
    return grid.n_cells if isinstance(grid, Grid) else int(grid)


def _snapped_nodes(lo: float, hi: float, n_cells: int) -> tuple[int, int]:
    if not 0.0 <= lo < hi <= 1.0:
        raise TableNotOnUnitInterval(f"support [{lo}, {hi}] is not a subinterval of [0, 1]")
    i_lo = math.floor(lo * n_cells + _SNAP_EPS)
    i_hi = math.ceil(hi * n_cells - _SNAP_EPS)
    return max(i_lo, 0), min(i_hi, n_cells)


def _preset(name: str, params: Mapping[str, Any], x: np.ndarray) -> np.ndarray:
    if name in ("constant", "zero"):
        return np.full_like(x, float(params.get("value", 0.0)))
    if name == "linear":
        start, end = float(params.get("start", 0.0)), float(params.get("end", 1.0))
        return start + (end - start) * x
    if name == "gaussian-bump":
        center = float(params.get("center", 0.5))
        width = float(params.get("width", 0.1))
        amplitude = float(params.get("amplitude", 1.0))
        return amplitude * np.exp(-(((x - center) / width) ** 2))
    if name == "sine-mode":
        k = int(params.get("k", 1))
        return float(params.get("amplitude", 1.0)) * np.sin(k * np.pi * x)
    raise UnknownPreset(f"unknown function preset {name!r}")


# positional parameter names for the compact string form, e.g. "gaussian-bump 0.5 0.1"
_POSITIONAL = {
    "constant": ("value",),
    "zero": (),
    "linear": ("start", "end"),
    "gaussian-bump": ("center", "width", "amplitude"),
    "sine-mode": ("k", "amplitude"),
}


def _parse_string(spec: str) -> tuple[str, dict]:
    parts = spec.split()
    if not parts:
        raise UnknownPreset("empty function description")
    name, args = parts[0], parts[1:]
    if name not in _POSITIONAL:
        raise UnknownPreset(f"unknown function preset {name!r}")
    keys = _POSITIONAL[name]
    if len(args) > len(keys):
        raise UnknownPreset(f"too many parameters for preset {name!r}: {spec!r}")
    try:
        params = {k: float(v) for k, v in zip(keys, args)}
    except ValueError:
        raise UnknownPreset(f"non-numeric parameter in {spec!r}") from None
    return name, params


def sample_function(spec: FunctionSpec, grid: Union[Grid, int]) -> np.ndarray:
    """Nodal samples (length N+1) of a function description.

    Accepted descriptions: a number (constant); a string preset such as
    ``"constant 2"``, ``"linear 1 1.5"``, ``"gaussian-bump 0.5 0.1"`` or
    ``"sine-mode 3"``; a mapping ``{"preset": name, **params}``; a table
    ``{"table": [[x, y], ...]}`` covering [0, 1]; an indicator
    ``{"indicator": [l, r], "level": c}`` whose support snaps outward to grid
    nodes; or a raw array of N+1 samples.
    """
    n = _n_cells_of(grid)
    x = np.linspace(0.0, 1.0, n + 1)

    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return np.full(n + 1, float(spec))
    if isinstance(spec, str):
        name, params = _parse_string(spec)
        return _preset(name, params, x)
    if isinstance(spec, Mapping):
        if "preset" in spec:
            params = {k: v for k, v in spec.items() if k != "preset"}
            return _preset(str(spec["preset"]), params, x)
        if "table" in spec:
            table = np.asarray(spec["table"], dtype=float)
            if table.ndim != 2 or table.shape[1] != 2 or len(table) < 2:
                raise TableNotOnUnitInterval("table must be a list of [x, y] pairs")
            xs, ys = table[:, 0], table[:, 1]
            if np.any(np.diff(xs) <= 0):
                raise TableNotOnUnitInterval("table abscissae must be strictly increasing")
            if xs[0] != 0.0 or xs[-1] != 1.0:
                raise TableNotOnUnitInterval(
                    f"table must span exactly [0, 1], got [{xs[0]}, {xs[-1]}]")
            return np.interp(x, xs, ys)
        if "indicator" in spec:
            lo, hi = (float(v) for v in spec["indicator"])
            i_lo, i_hi = _snapped_nodes(lo, hi, n)
            out = np.zeros(n + 1)
            out[i_lo:i_hi + 1] = float(spec.get("level", 1.0))
            return out
        raise UnknownPreset(f"cannot interpret function description {dict(spec)!r}")
    arr = np.asarray(spec, dtype=float)
    if arr.shape != (n + 1,):
        raise LengthMismatch(f"expected {n + 1} samples, got shape {arr.shape}")
    return arr.copy()


@dataclass(frozen=True)
class CoefficientSet:
    """Validated coefficients on a fixed grid.

    ``omega`` is ``None`` only for sets built with ``require_damping=False``
    (boundary damping alone), which deliberately leave (A2) unchecked.
    """

    a_samples: np.ndarray
    a_lo: float
    a_hi: float
    q_samples: np.ndarray
    omega: Optional[tuple[float, float]]
    q_lo: float
    q_hi: float
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta1: float = 1.0
    gamma1: float = 1.0
    mu1: float = 1.0
    q0: Optional[float] = None
    q1: Optional[float] = None

    @property
    def n_cells(self) -> int:
        return len(self.a_samples) - 1

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def a_half(self) -> np.ndarray:
        """a at cell midpoints (linear interpolation of the nodal samples)."""
        return 0.5 * (self.a_samples[1:] + self.a_samples[:-1])

    @property
    def a_left(self) -> float:
        return float(self.a_samples[0])

    @property
    def a_right(self) -> float:
        return float(self.a_samples[-1])

    @property
    def c1(self) -> float:
        return self.a_right / self.beta1

    @property
    def c2(self) -> float:
        return self.a_right * self.alpha2 / self.beta1

    @property
    def c3(self) -> float:
        return self.a_left / self.mu1

    @property
    def a_lipschitz(self) -> float:
        """Finite-difference slope bound standing in for ||a'||_inf."""
        return float(np.max(np.abs(np.diff(self.a_samples))) * self.n_cells)

    @property
    def is_constant_speed(self) -> bool:
        return bool(np.all(self.a_samples == 1.0))

    @property
    def q_integral(self) -> float:
        return trapz(self.q_samples, self.dx)

    def gains(self) -> dict:
        return {name: getattr(self, name) for name in GAIN_NAMES}

    def describe(self) -> dict:
        """Plain-data summary for reports."""
        return {
            "n_cells": self.n_cells,
            "a_lo": self.a_lo,
            "a_hi": self.a_hi,
            "q_lo": self.q_lo,
            "q_hi": self.q_hi,
            "omega": list(self.omega) if self.omega is not None else None,
            "q_integral": self.q_integral,
            **self.gains(),
            "q0": self.q0,
            "q1": self.q1,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
        }


def _longest_positive_run(q: np.ndarray) -> Optional[tuple[int, int]]:
    best, start = None, None
    for i, positive in enumerate(np.append(q > 0, False)):
        if positive and start is None:
            start = i
        elif not positive and start is not None:
            if best is None or (i - 1 - start) > (best[1] - best[0]):
                best = (start, i - 1)
            start = None
    return best


def validate_coefficients(raw: Mapping[str, Any], n_cells: int,
                          require_damping: bool = True) -> CoefficientSet:
    """Build a :class:`CoefficientSet` from a description.

    ``raw`` holds ``a`` and ``q`` function descriptions (see
    :func:`sample_function`), an optional ``omega`` interval, the gains
    ``alpha1, alpha2, beta1, gamma1, mu1`` (default 1) and optionally the
    related-system gains ``q0, q1``.
    """
    a = sample_function(raw.get("a", 1.0), n_cells)
    if not np.all(np.isfinite(a)) or np.min(a) <= 0:
        raise NonPositiveWaveSpeed(f"wave speed a(x) must be positive, min is {np.min(a):g}")

    q_spec = raw.get("q", 0.0)
    q = sample_function(q_spec, n_cells)
    if not np.all(np.isfinite(q)) or np.min(q) < 0:
        raise NegativeDamping(f"damping q(x) must be nonnegative, min is {np.min(q):g}")

    if "omega" in raw and raw["omega"] is not None:
        i_lo, i_hi = _snapped_nodes(*(float(v) for v in raw["omega"]), n_cells)
    elif isinstance(q_spec, Mapping) and "indicator" in q_spec and float(q_spec.get("level", 1.0)) > 0:
        i_lo, i_hi = _snapped_nodes(*(float(v) for v in q_spec["indicator"]), n_cells)
    else:
        run = _longest_positive_run(q)
        i_lo, i_hi = run if run is not None else (0, -1)

    omega, q_lo, q_hi = None, 0.0, 0.0
    if i_hi > i_lo:
        on_omega = q[i_lo:i_hi + 1]
        q_lo, q_hi = float(on_omega.min()), float(on_omega.max())
        if q_lo > 0:
            omega = (i_lo / n_cells, i_hi / n_cells)
    if omega is None:
        if require_damping:
            raise EmptySupport("damping q must be bounded below by a positive constant on a "
                               "nonempty open interval")
        q_lo = q_hi = 0.0

    gains = {}
    for name in GAIN_NAMES:
        value = float(raw.get(name, 1.0))
        if not value > 0:
            raise NonPositiveGain(f"gain {name} must be positive, got {value:g}")
        gains[name] = value
    for name in ("q0", "q1"):
        if raw.get(name) is not None:
            value = float(raw[name])
            if not value > 0:
                raise NonPositiveGain(f"related-system gain {name} must be positive, got {value:g}")
            gains[name] = value

    return CoefficientSet(a_samples=a, a_lo=float(a.min()), a_hi=float(a.max()),
                          q_samples=q, omega=omega, q_lo=q_lo, q_hi=q_hi, **gains)


@dataclass(frozen=True)
class InitialData:
    u0_samples: np.ndarray
    u1_samples: np.ndarray
    eta1_0: float = 0.0
    eta2_0: float = 0.0
    zeta1_0: float = 0.0
    eta_0: float = 0.0
    zeta_0: float = 0.0

    def __post_init__(self):
        if np.shape(self.u0_samples) != np.shape(self.u1_samples):
            raise LengthMismatch(
                f"u0 and u1 sample counts differ: {len(self.u0_samples)} vs {len(self.u1_samples)}")

    @property
    def n_cells(self) -> int:
        return len(self.u0_samples) - 1

    def is_compatible(self, mode: str = "main", tol: float = 1e-12) -> bool:
        """Whether u1 matches the boundary velocities (strong-solution data)."""
        right, left = (self.eta1_0, self.zeta1_0) if mode == "main" else (self.eta_0, self.zeta_0)
        return abs(self.u1_samples[-1] - right) <= tol and abs(self.u1_samples[0] - left) <= tol

    def shifted(self, c: float) -> "InitialData":
        return InitialData(self.u0_samples + c, self.u1_samples, self.eta1_0, self.eta2_0,
                           self.zeta1_0, self.eta_0, self.zeta_0)


def build_initial_data(raw: Mapping[str, Any], n_cells: int) -> InitialData:
    return InitialData(
        u0_samples=sample_function(raw.get("u0", 0.0), n_cells),
        u1_samples=sample_function(raw.get("u1", 0.0), n_cells),
        eta1_0=float(raw.get("eta1", 0.0)),
        eta2_0=float(raw.get("eta2", 0.0)),
        zeta1_0=float(raw.get("zeta1", 0.0)),
        eta_0=float(raw.get("eta", 0.0)),
        zeta_0=float(raw.get("zeta", 0.0)),
    )


def attractor_main(init: InitialData) -> float:
    """u(1) - eta2 at t = 0; conserved along every trajectory."""
    return float(init.u0_samples[-1] - init.eta2_0)


def attractor_related(init: InitialData, coeffs: CoefficientSet,
                      variant: str = "corrected") -> float:
    """Limit constant of the related system with boundary gains q0, q1.

    ``as_printed`` divides by a(0) q0 + a(1) q1 only; ``corrected`` adds the
    integral of q to the denominator, which is what the conserved quantity
    of the damped dynamics actually gives.
    """
    if coeffs.q0 is None or coeffs.q1 is None:
        raise ValueError("related-system gains q0 and q1 are required")
    if variant not in ("as_printed", "corrected"):
        raise ValueError(f"unknown variant {variant!r}")
    if init.n_cells != coeffs.n_cells:
        raise LengthMismatch("initial data and coefficients live on different grids")
    dx = coeffs.dx
    u0, u1, q = init.u0_samples, init.u1_samples, coeffs.q_samples
    a0, a1 = coeffs.a_left, coeffs.a_right
    numerator = (trapz(u1 + q * u0, dx)
                 + a0 * (init.zeta_0 + coeffs.q0 * u0[0])
                 + a1 * (init.eta_0 + coeffs.q1 * u0[-1]))
    denominator = a0 * coeffs.q0 + a1 * coeffs.q1
    if variant == "corrected":
        denominator += trapz(q, dx)
    if denominator == 0:
        raise ZeroDenominator("attractor denominator vanishes")
    return float(numerator / denominator)


# Reference configurations used throughout the tests and the acceptance suite.
PRESETS: dict[str, dict] = {
    "C1": {
        "a": 1.0,
        "q": {"indicator": [0.3, 0.5], "level": 5.0},
        "alpha1": 1.0, "alpha2": 1.0, "beta1": 1.0, "gamma1": 1.0, "mu1": 1.0,
    },
    "C2": {
        "a": "linear 1 1.5",
        "q": {"indicator": [0.3, 0.5], "level": 5.0},
        "alpha1": 1.0, "alpha2": 1.0, "beta1": 1.0, "gamma1": 1.0, "mu1": 1.0,
    },
    "C1-related": {
        "a": 1.0,
        "q": {"indicator": [0.3, 0.5], "level": 5.0},
        "q0": 1.0, "q1": 1.0,
    },
    "C1-boundary-only": {
        "a": 1.0, "q": 0.0,
        "alpha1": 1.0, "alpha2": 1.0, "beta1": 1.0, "gamma1": 1.0, "mu1": 1.0,
    },
}

BUMP_DATA: dict = {"u0": "gaussian-bump 0.5 0.1", "u1": 0.0}


def preset(name: str, n_cells: int) -> CoefficientSet:
    try:
        raw = PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown coefficient preset {name!r}") from None
    return validate_coefficients(raw, n_cells, require_damping=name != "C1-boundary-only")
