"""Command-line runner.

    dampwave run CONFIG.json
    dampwave verify {fast,full}
    dampwave sweep CONFIG.json --param grid.n_cells --values 100 200 400

Exit codes: 0 success, 2 invalid configuration, 3 instability, 4 failed
acceptance criteria.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import DampWaveError, InstabilityDetected

log = logging.getLogger("dampwave")

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_FAILED = 0, 2, 3, 4
SCENARIOS = ("main", "related", "riemann", "iss", "spectral", "conservation", "verify-suite")
_TOP_KEYS = {"scenario", "grid", "coefficients", "initial_data", "p", "fit_window", "lambda_range",
             "lambda_count", "output", "seed", "viscosity", "suite"}


class ConfigError(DampWaveError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    n_cells: int = 200
    cfl: float = 0.9
    horizon: float = 60.0
    record_stride: int = 1
    coefficients: dict = field(default_factory=lambda: {"preset": "C1"})
    initial_data: dict = field(default_factory=lambda: {"u0": "gaussian-bump 0.5 0.1", "u1": 0.0})
    p: float = 2.0
    fit_window: tuple = (10.0, 60.0)
    lambda_range: tuple = (-800.0, 800.0)
    lambda_count: int = 401
    csv_path: Optional[str] = None
    json_path: Optional[str] = None
    seed: int = 0
    viscosity: Optional[float] = None
    suite: str = "fast"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        scenario = raw.get("scenario")
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
        grid = raw.get("grid", {})
        out = raw.get("output", {})
        try:
            cfg = cls(
                scenario=scenario,
                n_cells=int(grid.get("n_cells", 200)),
                cfl=float(grid.get("cfl", 0.9)),
                horizon=float(grid.get("horizon", 60.0)),
                record_stride=int(grid.get("record_stride", 1)),
                coefficients=dict(raw.get("coefficients", {"preset": "C1"})),
                initial_data=dict(raw.get("initial_data", {"u0": "gaussian-bump 0.5 0.1", "u1": 0.0})),
                p=float(raw.get("p", 2.0)),
                fit_window=tuple(float(v) for v in raw.get("fit_window", (10.0, 60.0))),
                lambda_range=tuple(float(v) for v in raw.get("lambda_range", (-800.0, 800.0))),
                lambda_count=int(raw.get("lambda_count", 401)),
                csv_path=out.get("csv_path"),
                json_path=out.get("json_path"),
                seed=int(raw.get("seed", 0)),
                viscosity=None if raw.get("viscosity") is None else float(raw["viscosity"]),
                suite=str(raw.get("suite", "fast")),
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from exc
        if cfg.n_cells < 8:
            raise ConfigError("grid.n_cells must be at least 8")
        if not 0 < cfg.cfl <= 1:
            raise ConfigError("grid.cfl must lie in (0, 1]")
        if not cfg.horizon > 0 or cfg.record_stride < 1:
            raise ConfigError("grid.horizon must be positive and grid.record_stride >= 1")
        if len(cfg.fit_window) != 2 or cfg.fit_window[0] >= cfg.fit_window[1]:
            raise ConfigError("fit_window must be an increasing pair")
        if cfg.fit_window[1] > cfg.horizon:
            warnings.warn(f"fit window end {cfg.fit_window[1]} exceeds the horizon {cfg.horizon}; "
                          "the fit uses the samples available")
        return cfg

    def summary(self) -> dict:
        return asdict(self)


def _coefficient_description(cfg: ExperimentConfig) -> tuple[dict, bool]:
    from .model import PRESETS

    desc = dict(cfg.coefficients)
    name = desc.pop("preset", None)
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"unknown coefficient preset {name!r}")
        desc = {**PRESETS[name], **desc}
    require = bool(desc.pop("require_damping", name != "C1-boundary-only"))
    return desc, require


def _write_csv(path: Optional[str], header: list, columns: list) -> None:
    if not path:
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{float(v):.17g}" for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _fit_or_none(times, values, window):
    from .energy import fit_decay

    try:
        fit = fit_decay(times, values, window)
    except DampWaveError as exc:
        log.warning("decay fit skipped: %s", exc)
        return None
    return {"nu": fit.nu, "M": fit.M, "log_M": fit.log_M, "r2": fit.r2, "window": list(fit.window)}


def execute(cfg: ExperimentConfig) -> dict:
    """Run one scenario, write the CSV and return the JSON summary."""
    from . import acceptance
    from .energy import komornik_ratio
    from .model import Grid, attractor_main, attractor_related, build_initial_data, validate_coefficients
    from .oracles import conservation_check, pinned_run
    from .solver_fd import simulate
    from .solver_riemann import simulate_riemann
    from .spectral import analyse

    summary: dict[str, Any] = {"config": cfg.summary()}
    n = cfg.n_cells

    if cfg.scenario == "verify-suite":
        results = acceptance.run_suite(cfg.suite)
        summary["criteria"] = [{"number": r.number, "name": r.name, "passed": r.passed,
                                "details": r.details} for r in results]
        summary["all_passed"] = all(r.passed for r in results)
        return summary

    if cfg.scenario == "conservation":
        traj, _ = pinned_run(cfg.initial_data.get("u0", "sine-mode 1"), cfg.initial_data.get("u1", 0.0),
                             n, cfg.horizon, cfg.cfl, cfg.record_stride)
        summary["relative_drift"] = conservation_check(traj)
        _write_csv(cfg.csv_path, ["t", "E_total"], [traj.times, traj.e_total])
        return summary

    desc, require = _coefficient_description(cfg)

    if cfg.scenario == "iss":
        from .model import sample_function
        from .solver_riemann import simulate_forced

        q = sample_function(desc.get("q", 0.0), n)
        rho, xi = acceptance.iss_data(n, cfg.seed)
        t, e0 = simulate_forced(rho, xi, q, 0.0, 0.0, cfg.p, cfg.horizon)
        _, e1 = simulate_forced(rho, xi, q, lambda s: np.exp(-s), 0.0, cfg.p, cfg.horizon)
        summary["p"] = cfg.p
        summary["unforced_fit"] = _fit_or_none(t, e0, cfg.fit_window)
        _write_csv(cfg.csv_path, ["t", "E_hat_unforced", "E_hat_forced"], [t, e0, e1])
        return summary

    coeffs = validate_coefficients(desc, n, require_damping=require)
    summary["coefficients"] = coeffs.describe()

    if cfg.scenario == "spectral":
        lo, hi = cfg.lambda_range
        rep = analyse(coeffs, max(abs(lo), abs(hi)), max(2, cfg.lambda_count // 2 + 1),
                      seed=cfg.seed, viscosity=1.0 if cfg.viscosity is None else cfg.viscosity)
        summary.update(rep.as_dict())
        samples = rep.resolvent_samples
        _write_csv(cfg.csv_path, ["lambda", "resolvent_norm"],
                   [[s[0] for s in samples], [s[1] for s in samples]])
        return summary

    init = build_initial_data(cfg.initial_data, n)

    if cfg.scenario == "riemann":
        traj = simulate_riemann(init, coeffs, Grid.unit(n), cfg.horizon, cfg.record_stride)
        summary["u_star"] = traj.u_star
        summary["fit"] = _fit_or_none(traj.times, traj.e_total, cfg.fit_window)
        b = traj.boundary_series
        _write_csv(cfg.csv_path, ["t", "E_total", "eta1", "eta2", "zeta1"],
                   [traj.times, traj.e_total, b["eta1"], b["eta2"], b["zeta1"]])
        return summary

    grid = Grid.for_speed(n, coeffs.a_hi, cfg.cfl)
    traj = simulate(init, coeffs, grid, cfg.horizon, cfg.record_stride, mode=cfg.scenario,
                    viscosity=cfg.viscosity)
    summary["fit"] = _fit_or_none(traj.times, traj.e_total, cfg.fit_window)
    if traj.e_total[0] > 0:
        summary["komornik_ratio"] = komornik_ratio(traj.times, traj.e_total)
    summary["max_relative_energy_increase"] = (
        float(np.max(np.diff(traj.e_total)) / traj.e_total[0]) if traj.e_total[0] > 0 else 0.0)
    b = traj.boundary_series
    if cfg.scenario == "main":
        summary["u_star"] = attractor_main(init)
        header = ["t", "E_total", "E_i", "E_b", "eta1", "eta2", "zeta1", "sup_dev", "dissipation"]
        cols = [traj.times, traj.e_total, traj.e_interior, traj.e_boundary,
                b["eta1"], b["eta2"], b["zeta1"], traj.sup_dev, traj.dissipation_series]
    else:
        summary["u_star"] = {"corrected": attractor_related(init, coeffs, "corrected"),
                             "as_printed": attractor_related(init, coeffs, "as_printed")}
        summary["final_sup_dev"] = {k: float(np.max(np.abs(traj.final_state.u - v)))
                                    for k, v in summary["u_star"].items()}
        header = ["t", "E_total", "E_i", "E_b", "eta", "zeta", "sup_dev", "dissipation"]
        cols = [traj.times, traj.e_total, traj.e_interior, traj.e_boundary,
                b["eta"], b["zeta"], traj.sup_dev, traj.dissipation_series]
    _write_csv(cfg.csv_path, header, cols)
    return summary


def _emit(summary: dict, path: Optional[str]) -> None:
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")
    else:
        print(text)


def load_config(path: str) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def _run_config(cfg: ExperimentConfig) -> int:
    try:
        summary = execute(cfg)
    except InstabilityDetected as exc:
        print(f"error: instability detected: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (DampWaveError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(summary, cfg.json_path)
    if cfg.scenario == "verify-suite" and not summary["all_passed"]:
        return EXIT_FAILED
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _run_config(cfg)


def cmd_verify(args) -> int:
    from .acceptance import run_suite

    only = [int(c) for c in args.only] if args.only else None
    results = run_suite(args.suite, only=only, echo=print)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        print(f"failed: {failed}")
        return EXIT_FAILED
    return EXIT_OK


def _set_path(raw: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _suffixed(path: Optional[str], tag: str) -> Optional[str]:
    if not path:
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{tag}{p.suffix}"))


def _sweep_one(raw: dict) -> int:
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _run_config(cfg)


def cmd_sweep(args) -> int:
    try:
        base = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    configs = []
    for text in args.values:
        raw = copy.deepcopy(base)
        value = _parse_value(text)
        _set_path(raw, args.param, value)
        tag = f"{args.param.split('.')[-1]}={text}"
        out = raw.setdefault("output", {})
        out["csv_path"] = _suffixed(out.get("csv_path"), tag)
        out["json_path"] = _suffixed(out.get("json_path"), tag)
        configs.append(raw)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_sweep_one, configs))
    else:
        codes = [_sweep_one(raw) for raw in configs]
    return max(codes) if codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dampwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a JSON config")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the acceptance suite")
    p_ver.add_argument("suite", choices=("fast", "full"))
    p_ver.add_argument("--only", nargs="+", help="criterion numbers to run")
    p_ver.set_defaults(func=cmd_verify)

    p_sw = sub.add_parser("sweep", help="repeat a run over values of one config entry")
    p_sw.add_argument("config")
    p_sw.add_argument("--param", required=True, help="dotted path, e.g. grid.n_cells")
    p_sw.add_argument("--values", nargs="+", required=True)
    p_sw.add_argument("--jobs", type=int, default=1)
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
