"""Discrete generator of the main system, its spectrum and resolvent norms.

State layout (dim 2N+2): cell slopes g_0..g_{N-1}, interior velocities
v_1..v_{N-1}, then eta1, eta2, zeta1, with v_N = eta1, v_0 = zeta1 and
eta2 = u(1) - u_*.  The matrix is exactly the semi-discrete system that
:mod:`solver_fd` integrates in time, so the energy is 1/2 U^T W U with the
diagonal Gram weights W below and d/dt of it is -Q(U).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import EigensolverFailure, GridMismatch, GridTooCoarse, SingularAtLambda
from .model import CoefficientSet, trapezoid_weights
from .solver_fd import DEFAULT_VISCOSITY

AXIS_TOL = 1e-10
SINGULAR_TOL = 1e-14


@dataclass
class GeneratorMatrix:
    dim: int
    matrix: np.ndarray
    gram_weights: np.ndarray
    dissipation_form: np.ndarray
    n_cells: int = 0
    ordering: str = "g_0..g_{N-1}, v_1..v_{N-1}, eta1, eta2, zeta1"

    def weighted(self) -> np.ndarray:
        """W^{1/2} A W^{-1/2}: the matrix in an orthonormal basis of the energy norm."""
        s = np.sqrt(self.gram_weights)
        return self.matrix * s[:, None] / s[None, :]


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    abscissa: float
    near_axis: list = field(default_factory=list)
    resolvent_samples: list = field(default_factory=list)
    resolvent_sup: float = float("nan")
    dissipativity_residual: float = float("nan")

    @property
    def h1(self) -> bool:
        return not self.near_axis

    def as_dict(self) -> dict:
        return {
            "abscissa": self.abscissa,
            "n_eigenvalues": int(len(self.eigenvalues)),
            "near_axis": [[z.real, z.imag] for z in self.near_axis],
            "resolvent_sup": self.resolvent_sup,
            "dissipativity_residual": self.dissipativity_residual,
            "H1": self.h1,
            "H2": bool(np.isfinite(self.resolvent_sup)),
        }


def assemble_generator(coeffs: CoefficientSet, n_cells: Optional[int] = None,
                       viscosity: float = DEFAULT_VISCOSITY) -> GeneratorMatrix:
    n = coeffs.n_cells if n_cells is None else int(n_cells)
    if n < 8:
        raise GridTooCoarse(f"need N >= 8, got {n}")
    if n != coeffs.n_cells:
        raise GridMismatch(f"coefficients sampled on N={coeffs.n_cells}, asked for N={n}")
    dx = 1.0 / n
    ah = coeffs.a_half
    w = trapezoid_weights(n)
    m = w.copy()
    m[-1] += coeffs.c1
    m[0] += coeffs.c3
    d = w * coeffs.q_samples
    d[-1] += coeffs.c1 * coeffs.alpha1
    d[0] += coeffs.c3 * coeffs.gamma1
    kv = np.full(n, viscosity * dx)

    dim = 2 * n + 2
    E1, E2, Z1 = 2 * n - 1, 2 * n, 2 * n + 1

    def vslot(i):
        # position of the velocity of node i in the state vector
        return Z1 if i == 0 else (E1 if i == n else n + i - 1)

    A = np.zeros((dim, dim))
    for i in range(n):
        A[i, vslot(i + 1)] += 1.0 / dx
        A[i, vslot(i)] -= 1.0 / dx
    # M v' = f(g) - D v, node by node
    for i in range(n + 1):
        r = vslot(i)
        if i < n:
            A[r, i] += ah[i] / m[i]
        if i > 0:
            A[r, i - 1] -= ah[i - 1] / m[i]
        A[r, r] -= d[i] / m[i]
    for c in range(n):
        i, j = vslot(c), vslot(c + 1)
        A[i, i] -= kv[c] / m[c]
        A[i, j] += kv[c] / m[c]
        A[j, j] -= kv[c] / m[c + 1]
        A[j, i] += kv[c] / m[c + 1]
    A[E1, E2] -= coeffs.c2 / m[n]
    A[E2, E1] = 1.0

    W = np.empty(dim)
    W[:n] = ah * dx
    W[n:2 * n - 1] = m[1:n]
    W[E1], W[E2], W[Z1] = m[n], coeffs.c2, m[0]

    # Q(U) = v^T D v with the viscous stencil, written in state slots
    Q = np.zeros((dim, dim))
    for i in range(n + 1):
        Q[vslot(i), vslot(i)] += d[i]
    for c in range(n):
        i, j = vslot(c), vslot(c + 1)
        Q[i, i] += kv[c]
        Q[j, j] += kv[c]
        Q[i, j] -= kv[c]
        Q[j, i] -= kv[c]
    return GeneratorMatrix(dim, A, W, Q, n)


def _as_generator(gen: Union[GeneratorMatrix, np.ndarray]) -> GeneratorMatrix:
    if isinstance(gen, GeneratorMatrix):
        return gen
    A = np.atleast_2d(np.asarray(gen, dtype=float))
    dim = A.shape[0]
    return GeneratorMatrix(dim, A, np.ones(dim), np.zeros((dim, dim)))


def spectrum(gen: Union[GeneratorMatrix, np.ndarray]) -> SpectralReport:
    gen = _as_generator(gen)
    try:
        ev = linalg.eigvals(gen.matrix)
    except linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigensolverFailure("eigensolver returned non-finite values")
    ev = ev[np.argsort(-ev.real)]
    near = [complex(z) for z in ev if z.real >= -AXIS_TOL]
    return SpectralReport(ev, float(ev.real.max()), near)


class _Resolvent:
    """Weighted resolvent norm 1/sigma_min(i lam - S), S = W^{1/2} A W^{-1/2}.

    S is sparse, so each frequency costs one sparse LU and a short Lanczos
    run on (R^H R)^{-1}.
    """

    def __init__(self, gen: GeneratorMatrix):
        self.S = sparse.csc_matrix(gen.weighted().astype(complex))
        self.eye = sparse.identity(gen.dim, dtype=complex, format="csc")
        self.dim = gen.dim
        self._warm = None

    def norm(self, lam: float) -> float:
        R = (1j * lam * self.eye - self.S).tocsc()
        if self.dim <= 60:
            smin = linalg.svdvals(R.toarray())[-1]
            if smin < SINGULAR_TOL:
                raise SingularAtLambda(f"i*{lam:g} is (numerically) an eigenvalue", lam)
            return float(1.0 / smin)
        try:
            lu = splu(R)
        except RuntimeError as exc:
            raise SingularAtLambda(f"i*{lam:g} is an eigenvalue ({exc})", lam) from exc
        op = LinearOperator((self.dim, self.dim), dtype=complex,
                            matvec=lambda x: lu.solve(lu.solve(x), trans="H"))
        try:
            vals, vecs = eigsh(op, k=1, which="LA", tol=1e-9, v0=self._warm)
        except ArpackNoConvergence as exc:
            raise EigensolverFailure(f"resolvent norm did not converge at lam={lam:g}") from exc
        top = float(np.max(np.real(vals)))
        if not np.isfinite(top) or top > SINGULAR_TOL ** -2:
            raise SingularAtLambda(f"i*{lam:g} is (numerically) an eigenvalue", lam)
        self._warm = vecs[:, 0]
        return float(np.sqrt(top))


def resolvent_sweep(gen: Union[GeneratorMatrix, np.ndarray], lambda_grid, refine: bool = True,
                    eigenvalues: Optional[np.ndarray] = None) -> tuple[list, float]:
    """Weighted resolvent norms ||(i lam - A)^{-1}|| on the grid.

    The norm is even in lam for a real matrix, so each |lam| is computed
    once.  With ``refine`` the largest grid values and the frequencies of
    the eigenvalues nearest the axis are polished by a bounded 1-D search;
    those extra samples are included in the output.
    """
    gen = _as_generator(gen)
    lams = np.asarray(lambda_grid, dtype=float)
    res = _Resolvent(gen)
    cache: dict = {}

    def value(lam):
        key = abs(float(lam))
        if key not in cache:
            cache[key] = res.norm(key)
        return cache[key]

    samples = [(float(l), value(l)) for l in lams]
    mags = np.unique(np.abs(lams))
    if refine and len(mags) > 1:
        lo, hi = float(mags[0]), float(mags[-1])
        step = float(np.max(np.diff(mags)))
        centres = [abs(l) for l, _ in sorted(samples, key=lambda s: -s[1])[:3]]
        if eigenvalues is None:
            eigenvalues = linalg.eigvals(gen.matrix)
        near = np.asarray(eigenvalues)[np.argsort(-np.real(eigenvalues))][:6]
        centres += [abs(z.imag) for z in near if lo <= abs(z.imag) <= hi]
        for c in centres:
            a, b = max(lo, c - step), min(hi, c + step)
            if b <= a:
                continue
            opt = minimize_scalar(lambda l: -value(l), bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-6 * max(1.0, c)})
            samples.append((float(opt.x), value(opt.x)))
    samples.sort()
    return samples, float(max(v for _, v in samples))


def dissipativity_residual(gen: GeneratorMatrix, n_samples: int = 1000,
                           seed: int = 0) -> tuple[float, float]:
    """(max |Re<A U, U>_W + Q(U)| / |U|_W^2, max Re<A U, U>_W / |U|_W^2)."""
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((gen.dim, n_samples))
    WA = gen.gram_weights[:, None] * gen.matrix
    form = np.einsum("ij,ij->j", U, WA @ U)
    q = np.einsum("ij,ij->j", U, gen.dissipation_form @ U)
    norm2 = np.einsum("i,ij->j", gen.gram_weights, U * U)
    return float(np.max(np.abs(form + q) / norm2)), float(np.max(form / norm2))


def symmetric_part_max(gen: GeneratorMatrix) -> float:
    """Largest eigenvalue of the symmetric part of W^{1/2} A W^{-1/2}."""
    S = gen.weighted()
    return float(linalg.eigvalsh(0.5 * (S + S.T))[-1])


def analyse(coeffs: CoefficientSet, lambda_max: float = 800.0, lambda_count: int = 201,
            n_samples: int = 1000, seed: int = 0, viscosity: float = DEFAULT_VISCOSITY) -> SpectralReport:
    gen = assemble_generator(coeffs, viscosity=viscosity)
    rep = spectrum(gen)
    if rep.h1:
        rep.resolvent_samples, rep.resolvent_sup = resolvent_sweep(
            gen, np.linspace(0.0, lambda_max, lambda_count), eigenvalues=rep.eigenvalues)
    rep.dissipativity_residual = dissipativity_residual(gen, n_samples, seed)[0]
    return rep
