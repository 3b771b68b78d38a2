"""The acceptance suite: thirteen numerical checks with fixed tolerances.

Each check returns a :class:`CriterionResult`.  Expensive runs are shared
between checks through small caches, so running the whole suite costs about
as much as its distinct simulations.  The ``fast`` suite differs from
``full`` only in the reference resolution of the decay-rate check (800
instead of 1600 cells).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .energy import (
    check_young,
    dissipation_residual,
    fit_decay,
    komornik_ratio,
    sup_bound_constant,
)
from .model import BUMP_DATA, Grid, attractor_related, build_initial_data, preset, sample_function
from .oracles import conservation_check, cross_validate, dalembert_error, pinned_run
from .solver_fd import simulate
from .solver_riemann import CORRECTED_SOURCE, simulate_forced, simulate_riemann
from .spectral import assemble_generator, dissipativity_residual, resolvent_sweep, spectrum

FIT_WINDOW = (10.0, 60.0)
HORIZON = 60.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{tag}] {self.number:2d} {self.name}: {info} ({self.seconds:.1f}s)"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


# shared runs -----------------------------------------------------------------

def _grid(name: str, n: int, cfl: float = 0.9) -> Grid:
    return Grid.for_speed(n, preset(name, n).a_hi, cfl)


@lru_cache(maxsize=None)
def main_run(name: str, n: int, horizon: float = HORIZON, stride: int = 1):
    coeffs = preset(name, n)
    return simulate(build_initial_data(BUMP_DATA, n), coeffs, _grid(name, n), horizon, stride)


@lru_cache(maxsize=None)
def spectral_report(name: str, n: int):
    gen = assemble_generator(preset(name, n))
    return gen, spectrum(gen)


@lru_cache(maxsize=None)
def resolvent_sup(name: str, n: int, lambda_max: float = 800.0, count: int = 201) -> float:
    gen, rep = spectral_report(name, n)
    return resolvent_sweep(gen, np.linspace(0.0, lambda_max, count), eigenvalues=rep.eigenvalues)[1]


def clear_caches() -> None:
    for f in (main_run, spectral_report, resolvent_sup, _riemann_pair):
        f.cache_clear()


# criteria -------------------------------------------------------------------

def c1_dissipation_identity(resolutions=(200, 400), horizon: float = 20.0) -> CriterionResult:
    t0 = time.perf_counter()
    residuals = []
    for n in resolutions:
        traj = simulate(build_initial_data(BUMP_DATA, n), preset("C2", n), _grid("C2", n), horizon, 1)
        residuals.append(dissipation_residual(traj.times, traj.e_total, traj.dissipation_series, horizon))
    runtime = time.perf_counter() - t0
    ratio = residuals[0] / residuals[1]
    return CriterionResult(1, "dissipation identity (C2)", ratio >= 1.8 and runtime < 10.0,
                           {"L1_residuals": residuals, "ratio": ratio, "runtime_s": runtime})


def c2_monotone(configs=("C1", "C2"), resolutions=(200, 400)) -> CriterionResult:
    worst, worst_scheme = -np.inf, -np.inf
    for name in configs:
        for n in resolutions:
            tr = main_run(name, n)
            worst = max(worst, float(np.max(np.diff(tr.e_total)) / tr.e_total[0]))
            es = tr.e_scheme
            worst_scheme = max(worst_scheme, float(np.max(np.diff(es)) / tr.e_total[0]))
    return CriterionResult(2, "monotone decay p=2", worst <= 1e-10 and worst_scheme <= 1e-10,
                           {"max_rel_increase": worst, "max_rel_increase_scheme": worst_scheme})


def c3_exponential_decay(reference_n: int = 1600, coarse=(200, 400)) -> CriterionResult:
    details, ok = {}, True
    for name in ("C1", "C2"):
        ref = main_run(name, reference_n, HORIZON, max(1, reference_n // 80))
        nu_ref = fit_decay(ref.times, ref.e_total, FIT_WINDOW).nu
        details[f"{name}_nu_ref(N={reference_n})"] = nu_ref
        for n in coarse:
            fit = fit_decay(main_run(name, n).times, main_run(name, n).e_total, FIT_WINDOW)
            rel = abs(fit.nu - nu_ref) / nu_ref
            details[f"{name}_N{n}"] = [fit.nu, fit.r2, rel]
            ok &= fit.nu >= 0.01 and fit.r2 >= 0.99 and rel <= 0.10
    return CriterionResult(3, "exponential decay", ok, details)


def c4_sup_norm(n: int = 400) -> CriterionResult:
    tr = main_run("C1", n)
    coeffs = preset("C1", n)
    C = sup_bound_constant(coeffs)
    bound = np.sqrt(C * tr.e_total)
    slack = float(np.min(bound - tr.sup_dev))
    ratio = float(tr.sup_dev[-1] / tr.sup_dev[0])
    return CriterionResult(4, "sup-norm attractor convergence", slack >= 0 and ratio <= 1e-3,
                           {"C": C, "scaling_vs_4/a+2": C / (4.0 / coeffs.a_lo + 2.0),
                            "min_slack": slack, "sup_dev_ratio_T60": ratio})


def c5_attractor(n: int = 400, horizon: float = 80.0, truth: str = "corrected") -> CriterionResult:
    coeffs = preset("C1-related", n)
    init = build_initial_data(BUMP_DATA, n)
    tr = simulate(init, coeffs, _grid("C1-related", n), horizon, 100, mode="related")
    u = tr.final_state.u
    target = attractor_related(init, coeffs, truth)
    other = attractor_related(init, coeffs, "as_printed" if truth == "corrected" else "corrected")
    err, miss = float(np.max(np.abs(u - target))), float(np.max(np.abs(u - other)))
    return CriterionResult(5, f"attractor formula ({truth} as truth)", err <= 1e-3 and miss >= 1e-2,
                           {"u_star_truth": target, "u_star_other": other, "err_truth": err,
                            "err_other": miss, "int_q": coeffs.q_integral})


@lru_cache(maxsize=None)
def _riemann_pair(n: int, horizon: float, source_factor: float):
    coeffs = preset("C1", n)
    init = build_initial_data(BUMP_DATA, n)
    fd = simulate(init, coeffs, Grid(n, 0.5 / n, 0.5), horizon, 2, snapshot_stride=1)
    rm = simulate_riemann(init, coeffs, Grid.unit(n), horizon, 1, snapshot_stride=1,
                          source_factor=source_factor)
    return cross_validate(fd, rm)


def c6_riemann_fd(resolutions=(200, 400), horizon: float = 10.0,
                  source_factor: float = CORRECTED_SOURCE) -> CriterionResult:
    reps = [_riemann_pair(n, horizon, source_factor) for n in resolutions]
    ratio = reps[0].max_abs_error / reps[1].max_abs_error
    e_rel = max(r.energy_rel_error for r in reps)
    return CriterionResult(6, "Riemann/FD equivalence", ratio >= 1.8 and e_rel <= 0.02,
                           {"max_err": [r.max_abs_error for r in reps], "ratio": ratio,
                            "E2_rel_diff": e_rel, "source_factor": source_factor})


def c7_dalembert(resolutions=(100, 200), t: float = 1.3) -> CriterionResult:
    details, ok = {}, True
    cases = {"eigenmode": ("sine-mode 1", lambda x: np.sin(np.pi * x)),
             "bump": ("gaussian-bump 0.5 0.1", None)}
    for label, (spec, exact) in cases.items():
        errs = [dalembert_error(spec, 0.0, n, t, w0_exact=exact) for n in resolutions]
        ratio = errs[0] / errs[1]
        details[label] = [errs[0], errs[1], ratio]
        ok &= ratio >= 3.5
    traj, _ = pinned_run("sine-mode 1", 0.0, 200, 10.0, record_stride=1)
    drift = conservation_check(traj)
    details["drift_N200_T10"] = drift
    return CriterionResult(7, "d'Alembert oracle", ok and drift <= 5e-4, details)


def c8_huang_pruss(configs=("C1", "C2"), n: int = 200, n_samples: int = 1000) -> CriterionResult:
    details, ok = {}, True
    for name in configs:
        gen, rep = spectral_report(name, n)
        sup_c, sup_f = resolvent_sup(name, n), resolvent_sup(name, 2 * n)
        rel = abs(sup_f - sup_c) / sup_c
        res, re_max = dissipativity_residual(gen, n_samples, seed=0)
        details[name] = [rep.abscissa, len(rep.near_axis), sup_c, sup_f, rel, res, re_max]
        ok &= rep.h1 and np.isfinite(sup_c) and rel <= 0.15 and res <= 1e-10 and re_max <= 1e-12
    details["fields"] = "abscissa,n_near_axis,sup_N,sup_2N,rel,residual,max_Re_form"
    return CriterionResult(8, "Huang-Pruss spectral check", ok, details)


def c9_spectral_time(n: int = 200) -> CriterionResult:
    _, rep = spectral_report("C1", n)
    tr = main_run("C1", n)
    nu = fit_decay(tr.times, tr.e_total, FIT_WINDOW).nu
    target = 2 * abs(rep.abscissa)
    rel = abs(nu - target) / target
    return CriterionResult(9, "spectral/time-domain consistency", rel <= 0.10,
                           {"nu_fit": nu, "2|abscissa|": target, "rel": rel})


def iss_data(n: int, seed: int = 0, modes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Smooth random (rho, xi) from u0 = sum a_k sin(k pi x), u1 = sum b_k sin(k pi x).

    u0 vanishes at both walls so the slope has zero mean; the mean of
    rho - xi is conserved by the unforced dynamics and would otherwise
    leave a non-decaying stationary part.
    """
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, n + 1)
    a, b = rng.standard_normal(modes), rng.standard_normal(modes)
    k = np.arange(1, modes + 1)[:, None] * np.pi
    w = np.sum(a[:, None] * k * np.cos(k * x), axis=0)
    v = np.sum(b[:, None] * np.sin(k * x), axis=0)
    return v + w, v - w


def iss_envelope(n: int, p: float, eps: float = 1.0, horizon: float = 40.0,
                 window=(5.0, 40.0), seed: int = 0) -> tuple[float, float, float]:
    """(alpha_p, R^2, C) for one resolution and exponent."""
    q = sample_function({"indicator": [0.3, 0.5], "level": 5.0}, n)
    rho, xi = iss_data(n, seed)
    t, e = simulate_forced(rho, xi, q, 0.0, 0.0, p, horizon)
    fit = fit_decay(t, e, window)
    tf, ef = simulate_forced(rho, xi, q, lambda s: np.exp(-s), 0.0, p, horizon)
    forcing = (1.0 - np.exp(-p * tf)) / p  # int_0^t |e^{-s}|^p ds
    bracket = np.exp(-fit.nu * tf) * ef[0] + eps ** (1 - p) * np.exp(eps * tf) * forcing
    return fit.nu, fit.r2, float(np.max(ef / bracket))


def c10_iss(resolutions=(200, 400), exponents=(2.0, 3.0, 4.0)) -> CriterionResult:
    details, ok = {}, True
    for p in exponents:
        rows = [iss_envelope(n, p) for n in resolutions]
        rel = abs(rows[1][2] - rows[0][2]) / rows[0][2]
        details[f"p={p:g}"] = [rows[0][0], rows[0][1], rows[0][2], rows[1][2], rel]
        ok &= all(r[0] > 0 for r in rows) and rel <= 0.20
    details["fields"] = "alpha,R2,C_N,C_2N,rel"
    return CriterionResult(10, "ISS estimate", ok, details)


def c11_young(exponents=(1.5, 2.0, 3.0, 5.0), n_samples: int = 1_000_000) -> CriterionResult:
    counts = [check_young(p, n_samples, seed=i) for i, p in enumerate(exponents)]
    return CriterionResult(11, "Young-type inequality", sum(counts) == 0,
                           {"violations": counts, "samples_each": n_samples})


def c12_komornik(n: int = 200) -> CriterionResult:
    tr = main_run("C1", n, 120.0, 1)
    short = tr.times <= HORIZON + 1e-9
    r60 = komornik_ratio(tr.times[short], tr.e_total[short])
    r120 = komornik_ratio(tr.times, tr.e_total)
    rel = abs(r120 - r60) / r60
    return CriterionResult(12, "integral decay bound", np.isfinite(r60) and rel <= 0.05,
                           {"ratio_T60": r60, "ratio_T120": r120, "rel": rel})


def c13_no_interior_damping(n: int = 200) -> CriterionResult:
    tr0, tr1 = main_run("C1-boundary-only", n), main_run("C1", n)
    nu0 = fit_decay(tr0.times, tr0.e_total, FIT_WINDOW).nu
    nu1 = fit_decay(tr1.times, tr1.e_total, FIT_WINDOW).nu
    s0 = abs(spectral_report("C1-boundary-only", n)[1].abscissa)
    s1 = abs(spectral_report("C1", n)[1].abscissa)
    ok = nu0 <= nu1 / 5 and s0 <= s1 / 5
    return CriterionResult(13, "interior damping needed", ok,
                           {"nu_q0": nu0, "nu_C1": nu1, "abscissa_q0": s0, "abscissa_C1": s1})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: c1_dissipation_identity, 2: c2_monotone, 3: c3_exponential_decay, 4: c4_sup_norm,
    5: c5_attractor, 6: c6_riemann_fd, 7: c7_dalembert, 8: c8_huang_pruss,
    9: c9_spectral_time, 10: c10_iss, 11: c11_young, 12: c12_komornik,
    13: c13_no_interior_damping,
}


def run_criterion(number: int, suite: str = "full", **overrides) -> CriterionResult:
    fn = CRITERIA[number]
    kwargs = dict(overrides)
    if number == 3 and suite == "fast":
        kwargs.setdefault("reference_n", 800)
    t0 = time.perf_counter()
    try:
        res = fn(**kwargs)
    except Exception as exc:  # a crash is a failed criterion, reported as such
        res = CriterionResult(number, fn.__name__, False, {"error": f"{type(exc).__name__}: {exc}"})
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(suite: str = "full", only: Optional[list] = None,
              echo: Optional[Callable[[str], None]] = None, **overrides) -> list:
    if suite not in ("fast", "full"):
        raise ValueError(f"suite must be 'fast' or 'full', got {suite!r}")
    results = []
    for number in sorted(only or CRITERIA):
        kw = overrides.get(number, {})
        res = run_criterion(number, suite, **kw)
        results.append(res)
        if echo:
            echo(res.line())
    return results
