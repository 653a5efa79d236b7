"""Experiment scenarios, sweep fan-out and the run_scenario entry point.

Each scenario turns an ExperimentConfig into a list of independent runs,
executes them (optionally in a process pool), reduces the results to tables
and pass/fail verdicts, and hands everything to the writers.

run_scenario は例外を送出せず、
``status`` / ``message`` / ``error_type`` を含む dict を返す。
"""

import logging
import time as _time
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bathymetry import PROFILES, Bathymetry, BathymetryError, build_bathymetry
from .config import ConfigError, ExperimentConfig, InitialSpec, resolve_output_dir
from .diagnostics import (
    DEFAULT_N,
    DiagnosticsError,
    burgers_shock_time,
    detected_blowup_time,
    dispersion_omega,
    estimate_order,
    measure_dispersion,
    stacked_energy,
)
from .models import MAX_DERIVATIVE_ORDER, ModelError, ModelKind, build_system, time_derivative_stack
from .operators import (
    DENSE_NAME,
    OperatorError,
    OperatorHandle,
    OperatorKind,
    coercivity_report,
    hbA_estimate_report,
)
from .spectral import Grid, GridError
from .timeloop import TimeloopError, run, run_linear
from .verification import VerificationError, assemble_dense
from .writers import OutputError, write_outputs, write_snapshot

logger = logging.getLogger(__name__)


class ScenarioError(Exception):
    """シナリオ実行エラー"""

    pass


_KNOWN_ERRORS = (
    ScenarioError,
    ConfigError,
    GridError,
    BathymetryError,
    OperatorError,
    ModelError,
    TimeloopError,
    DiagnosticsError,
    VerificationError,
)


# ---------------------------------------------------------------------- initial conditions


def build_initial(spec: InitialSpec, grid: Grid, bath: Bathymetry) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Initial (zeta or u, V) for a named shape.

    - gaussian: A exp(-|x - c|^2 / w^2), V = 0
    - mode: A cos(k x), V = 0
    - burgers_sine: u = -A sin(k x), no velocity
    - gaussian_right_going: Gaussian zeta with V = zeta / sqrt(h_b) along x
    """
    x = grid.coords
    if spec.shape in ("gaussian", "gaussian_right_going"):
        center = spec.center if spec.center is not None else tuple(length / 2 for length in grid.lengths)
        centers = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
        r2 = sum((xi - c) ** 2 for xi, c in zip(x, centers))
        zeta = spec.amplitude * np.exp(-r2 / spec.width**2)
        vbar = np.zeros((grid.d,) + grid.shape)
        if spec.shape == "gaussian_right_going":
            vbar[0] = zeta / np.sqrt(bath.h_b)
        return zeta, vbar
    if spec.shape == "mode":
        grid.mode_index(spec.k, axis=0)
        return spec.amplitude * np.cos(spec.k * x[0]), np.zeros((grid.d,) + grid.shape)
    if spec.shape == "burgers_sine":
        grid.mode_index(spec.k, axis=0)
        return -spec.amplitude * np.sin(spec.k * x[0]), None
    raise ScenarioError(f"未知の初期条件です: {spec.shape}")


# ---------------------------------------------------------------------- runs


def derive_config(config: ExperimentConfig, **sections: Dict[str, Any]) -> ExperimentConfig:
    """Copy of ``config`` with the given sections partially overridden."""
    data = config.model_dump(mode="json")
    for name, values in sections.items():
        data[name] = {**data[name], **values}
    return ExperimentConfig.model_validate(data)


@dataclass(frozen=True)
class Case:
    """One independent run of a sweep."""

    name: str
    config: ExperimentConfig
    modes: Tuple[float, ...] = ()
    stack_depth: int = 0
    linear: bool = False


def execute_case(case: Case) -> Dict[str, Any]:
    """Build and integrate one run. Failures come back as an error dict."""
    cfg = case.config
    try:
        params = cfg.params.build()
        grid = cfg.grid.build(params.mu)
        bath = build_bathymetry(cfg.bathymetry.profile_spec(), cfg.bathymetry.beta, grid)
        system = build_system(params, bath)
        zeta, vbar = build_initial(cfg.initial, grid, bath)
        initial = system.state_from_zeta(zeta, vbar)
        integrate = run_linear if case.linear else run
        trajectory = integrate(initial, system, cfg.stepper.build(), N=DEFAULT_N, modes=case.modes, keep_states=False)
        final = trajectory.final
        result: Dict[str, Any] = {
            "name": case.name,
            "status": "success",
            "reason": trajectory.reason.value,
            "steps": trajectory.steps,
            "final_time": float(final.time),
            "message": trajectory.message,
            "runtime": trajectory.runtime,
            "records": trajectory.records,
            "grid": grid,
            "fields": {"zeta": system.zeta(final), "surface": final.surface, "velocity": final.velocity},
        }
        if case.stack_depth:
            depth = min(case.stack_depth, MAX_DERIVATIVE_ORDER, DEFAULT_N)
            result["stacked_energy"] = [
                stacked_energy(
                    time_derivative_stack(state, params, bath, depth, handle_B=system.handle),
                    params.mu,
                    DEFAULT_N,
                    grid,
                )
                for state in (initial, final)
            ]
        return result
    except _KNOWN_ERRORS as e:
        logger.warning(f"run failed: name={case.name} error={type(e).__name__}: {e}")
        return {"name": case.name, "status": "error", "message": str(e), "error_type": type(e).__name__}
    except Exception as e:
        logger.error(f"予期しないエラー: name={case.name}: {e}")
        return {"name": case.name, "status": "error", "message": str(e), "error_type": type(e).__name__}


def run_cases(cases: Sequence[Case], jobs: int = 1) -> List[Dict[str, Any]]:
    """Execute cases, in a process pool when jobs > 1. Result order follows ``cases``."""
    if jobs <= 1 or len(cases) <= 1:
        return [execute_case(case) for case in cases]
    with Pool(processes=min(jobs, len(cases))) as pool:
        return pool.map(execute_case, cases)


# ---------------------------------------------------------------------- outcomes


@dataclass
class Outcome:
    results: Dict[str, Any] = field(default_factory=dict)
    verdicts: Dict[str, bool] = field(default_factory=dict)
    runs: List[Dict[str, Any]] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    modes: Dict[str, Tuple[float, ...]] = field(default_factory=dict)


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or not np.isfinite(value):
        return None
    return float(value)


def _sup_difference(a: Dict[str, Any], b: Dict[str, Any]) -> float:
    fields_a, fields_b = a["fields"], b["fields"]
    diff = float(np.max(np.abs(fields_a["zeta"] - fields_b["zeta"])))
    if fields_a["velocity"] is not None and fields_b["velocity"] is not None:
        diff = max(diff, float(np.max(np.abs(fields_a["velocity"] - fields_b["velocity"]))))
    return diff


def _ok(result: Dict[str, Any]) -> bool:
    return result["status"] == "success" and result["reason"] == "completed"


def _order(points: List[Tuple[float, float]], min_points: int = 3) -> Optional[float]:
    try:
        return estimate_order(points, min_points=min_points)
    except DiagnosticsError as e:
        logger.warning(f"order estimate unavailable: {e}")
        return None


# ---------------------------------------------------------------------- scenarios


def _dispersion(config: ExperimentConfig, jobs: int, seed: int) -> Outcome:
    cases = []
    for mu in config.sweep.mu:
        for k in config.sweep.k:
            t_end = config.sweep.periods * 2 * np.pi / dispersion_omega(k, mu)
            cfg = derive_config(
                config,
                params={"eps": 0.0, "mu": mu, "model": "BP", "rescaled_time": False},
                bathymetry={"profile": "flat", "beta": 0.0, "params": {}},
                initial={"shape": "mode", "k": k},
                stepper={"t_end": t_end},
            )
            cases.append(Case(name=f"mu{mu:g}_k{k:g}", config=cfg, modes=(k,), linear=True))

    outcome = Outcome(runs=run_cases(cases, jobs))
    rows = []
    threshold = config.thresholds.dispersion_rel_err
    for case, result in zip(cases, outcome.runs):
        k, mu = case.modes[0], case.config.params.mu
        row: Dict[str, Any] = {"k": k, "mu": mu, "omega_expected": dispersion_omega(k, mu)}
        if _ok(result):
            try:
                measured = measure_dispersion(result["records"], k, mu)
                row.update(omega_measured=measured["omega"], rel_err=measured["rel_err"])
            except DiagnosticsError as e:
                result["message"] = str(e)
        row["passed"] = row.get("rel_err") is not None and row["rel_err"] <= threshold
        rows.append(row)
        outcome.modes[case.name] = case.modes
    outcome.tables["dispersion"] = rows
    outcome.results["max_rel_err"] = _finite(max((r.get("rel_err", np.inf) for r in rows), default=None))
    outcome.verdicts["dispersion_rel_err"] = all(r["passed"] for r in rows)
    return outcome


def _consistency(config: ExperimentConfig, jobs: int, seed: int) -> Outcome:
    cases = []
    for mu in config.sweep.mu:
        eps = mu if config.sweep.eps_equals_mu else config.params.eps
        for model in (ModelKind.SW, ModelKind.BP, ModelKind.MBP):
            cfg = derive_config(config, params={"eps": eps, "mu": mu, "model": model.value, "rescaled_time": False})
            cases.append(Case(name=f"{model.value}_mu{mu:g}", config=cfg))

    outcome = Outcome(runs=run_cases(cases, jobs))
    by_name = {case.name: result for case, result in zip(cases, outcome.runs)}
    rows = []
    for mu in config.sweep.mu:
        sw, bp, mbp = (by_name[f"{m}_mu{mu:g}"] for m in ("SW", "BP", "MBP"))
        row: Dict[str, Any] = {"mu": mu, "bp_sw": None, "bp_mbp": None}
        if _ok(bp) and _ok(sw):
            row["bp_sw"] = _sup_difference(bp, sw)
        if _ok(bp) and _ok(mbp):
            row["bp_mbp"] = _sup_difference(bp, mbp)
        rows.append(row)
    outcome.tables["consistency"] = rows

    order_sw = _order([(r["mu"], r["bp_sw"]) for r in rows if r["bp_sw"] is not None])
    order_mbp = _order([(r["mu"], r["bp_mbp"]) for r in rows if r["bp_mbp"] is not None])
    complete = all(r["bp_sw"] is not None and r["bp_mbp"] is not None for r in rows)
    outcome.results["order_bp_sw"] = order_sw
    outcome.results["order_bp_mbp"] = order_mbp
    outcome.verdicts["order_bp_sw"] = complete and order_sw is not None and order_sw >= config.thresholds.order_bp_sw
    outcome.verdicts["order_bp_mbp"] = (
        complete and order_mbp is not None and order_mbp >= config.thresholds.order_bp_mbp
    )
    return outcome


def _longtime(config: ExperimentConfig, jobs: int, seed: int) -> Outcome:
    horizon = config.stepper.t_end
    cases = []
    for eps in config.sweep.eps:
        mu = eps if config.sweep.eps_equals_mu else config.params.mu
        cfg = derive_config(
            config,
            params={"eps": eps, "mu": mu, "model": "MBP"},
            stepper={"t_end": horizon / eps},
        )
        cases.append(Case(name=f"eps{eps:g}", config=cfg, stack_depth=DEFAULT_N))
    contrast = config.sweep.contrast_eps
    if contrast is not None:
        mu = min(config.sweep.eps) if config.sweep.eps_equals_mu else config.params.mu
        cfg = derive_config(
            config,
            params={"eps": contrast, "mu": mu, "model": "MBP"},
            stepper={"t_end": horizon / contrast},
        )
        cases.append(Case(name=f"contrast_eps{contrast:g}", config=cfg))

    outcome = Outcome(runs=run_cases(cases, jobs))
    rows = []
    threshold = config.thresholds.longtime_growth
    for case, result in zip(cases, outcome.runs):
        row: Dict[str, Any] = {
            "name": case.name,
            "eps": case.config.params.eps,
            "mu": case.config.params.mu,
            "reason": result.get("reason", "error"),
            "growth": None,
            "stacked_energy_initial": None,
            "stacked_energy_final": None,
            "asserted": not case.name.startswith("contrast"),
        }
        if result["status"] == "success":
            energies = [r.EN for r in result["records"]]
            row["growth"] = _finite(max(energies) / energies[0]) if energies[0] > 0 else None
            if "stacked_energy" in result:
                row["stacked_energy_initial"], row["stacked_energy_final"] = result["stacked_energy"]
        row["passed"] = _ok(result) and row["growth"] is not None and row["growth"] <= threshold
        rows.append(row)
    outcome.tables["longtime"] = rows
    outcome.results["growth"] = {r["name"]: r["growth"] for r in rows}
    outcome.verdicts["longtime_bounded"] = all(r["passed"] for r in rows if r["asserted"])
    return outcome


def _burgers(config: ExperimentConfig, jobs: int, seed: int) -> Outcome:
    cases = []
    predicted = {}
    for eps in config.sweep.eps:
        cfg = derive_config(
            config,
            params={"eps": eps, "mu": 0.0, "model": "BURGERS", "rescaled_time": False},
            bathymetry={"profile": "flat", "beta": 0.0, "params": {}},
            stepper={"t_end": config.stepper.t_end / eps},
        )
        grid = cfg.grid.build()
        bath = build_bathymetry("flat", 0.0, grid)
        u0, _ = build_initial(cfg.initial, grid, bath)
        name = f"eps{eps:g}"
        predicted[name] = burgers_shock_time(u0, eps, grid)
        cases.append(Case(name=name, config=cfg))

    outcome = Outcome(runs=run_cases(cases, jobs))
    threshold = config.stepper.blowup_threshold
    rows = []
    for case, result in zip(cases, outcome.runs):
        eps = case.config.params.eps
        row: Dict[str, Any] = {"eps": eps, "predicted": predicted[case.name], "detected": None, "rel_err": None}
        if result["status"] == "success":
            detected = detected_blowup_time(result["records"], threshold)
            if detected is None and result["reason"] == "blowup":
                detected = result["final_time"]
            if detected is not None:
                row["detected"] = detected
                row["rel_err"] = abs(detected - row["predicted"]) / row["predicted"]
        row["passed"] = row["rel_err"] is not None and row["rel_err"] <= config.thresholds.burgers_rel_err
        rows.append(row)
    outcome.tables["burgers"] = rows

    slope = _order([(r["eps"], r["detected"]) for r in rows if r["detected"] is not None], min_points=2)
    outcome.results["slope"] = slope
    outcome.verdicts["burgers_shock_time"] = all(r["passed"] for r in rows)
    outcome.verdicts["burgers_slope"] = (
        slope is not None
        and len(rows) >= 2
        and all(r["detected"] is not None for r in rows)
        and abs(slope + 1.0) <= config.thresholds.burgers_slope_tol
    )
    return outcome


def _audit_grid(config: ExperimentConfig, index: int, seed: int) -> List[Dict[str, Any]]:
    mu = config.params.mu
    spec = config.audit.grids[index]
    grid = spec.build(mu)
    bath = build_bathymetry(config.bathymetry.profile_spec(), config.bathymetry.beta, grid)
    rng = np.random.default_rng(seed)
    rows = []
    for kind in OperatorKind:
        handle = OperatorHandle(kind, mu, bath)
        report = coercivity_report(handle, trials=config.audit.trials, seed=seed)

        dense = assemble_dense(DENSE_NAME[kind], mu, bath)
        v = rng.standard_normal((grid.d,) + grid.shape)
        direct = handle.weighted(v)
        report["dense_agreement"] = float(np.max(np.abs(dense.matvec(v) - direct)) / np.max(np.abs(direct)))
        report["dense_asymmetry"] = dense.asymmetry / float(np.max(np.abs(dense.entries)))

        iterative = OperatorHandle(kind, mu, bath, method="cg", tol=1e-12)
        rhs = rng.standard_normal((grid.d,) + grid.shape)
        reference = handle.solve(rhs)
        deviation = np.max(np.abs(iterative.solve(rhs) - reference))
        report["solver_agreement"] = float(deviation / np.max(np.abs(reference)))

        if kind is OperatorKind.HB_A and mu > 0:
            estimates = hbA_estimate_report(
                handle, N=config.audit.estimate_index, trials=config.audit.trials, seed=seed
            )
            report.update({key: estimates[key] for key in ("C1", "C2", "perp_residual")})
        report["grid_index"] = index
        rows.append(report)
    return rows


def _operator_audit(config: ExperimentConfig, jobs: int, seed: int) -> Outcome:
    outcome = Outcome()
    rows: List[Dict[str, Any]] = []
    for index in range(len(config.audit.grids)):
        try:
            rows.extend(_audit_grid(config, index, seed))
            outcome.runs.append({"name": f"grid{index}", "status": "success", "reason": "completed"})
        except _KNOWN_ERRORS as e:
            logger.warning(f"audit failed: grid={index} error={type(e).__name__}: {e}")
            outcome.runs.append(
                {"name": f"grid{index}", "status": "error", "message": str(e), "error_type": type(e).__name__}
            )

    table = []
    for report in rows:
        flat = {key: value for key, value in report.items() if key != "grid"}
        flat.update({f"grid_{key}": value for key, value in report["grid"].items() if key != "L"})
        table.append(flat)
    outcome.tables["operator_audit"] = table

    t = config.thresholds
    complete = bool(rows) and all(r["status"] == "success" for r in outcome.runs)
    outcome.results["min_quotient"] = {
        f"{r['kind']}_grid{r['grid_index']}": r["min_quotient"] for r in rows
    }
    outcome.verdicts["audit_symmetry"] = complete and all(r["symmetry_residual"] <= t.audit_symmetry for r in rows)
    outcome.verdicts["audit_coercivity"] = complete and all(r["min_quotient"] > 0 for r in rows)
    outcome.verdicts["audit_inverse"] = complete and all(r["inverse_residual"] <= t.audit_inverse for r in rows)
    outcome.verdicts["audit_dense_agreement"] = complete and all(
        r["dense_agreement"] <= t.audit_dense_agreement for r in rows
    )
    outcome.verdicts["audit_solver_agreement"] = complete and all(
        r["solver_agreement"] <= t.audit_solver_agreement for r in rows
    )
    return outcome


def _mollifier_study(config: ExperimentConfig, jobs: int, seed: int) -> Outcome:
    deltas = sorted(set(config.sweep.delta))
    cases = [Case(name=f"delta{d:g}", config=derive_config(config, stepper={"delta": d})) for d in deltas]
    outcome = Outcome(runs=run_cases(cases, jobs))
    by_delta = dict(zip(deltas, outcome.runs))
    reference = by_delta[0.0]

    rows = []
    for delta in deltas[1:]:
        result = by_delta[delta]
        diff = _sup_difference(result, reference) if _ok(result) and _ok(reference) else None
        rows.append({"delta": delta, "sup_diff": diff})
    outcome.tables["mollifier"] = rows

    diffs = [r["sup_diff"] for r in rows]
    complete = bool(rows) and all(d is not None for d in diffs)
    monotone = complete and all(a <= b for a, b in zip(diffs, diffs[1:]))
    check = next((r["sup_diff"] for r in rows if np.isclose(r["delta"], config.thresholds.mollifier_delta)), None)
    outcome.results["sup_diff"] = {f"{r['delta']:g}": r["sup_diff"] for r in rows}
    outcome.verdicts["mollifier_monotone"] = monotone
    outcome.verdicts["mollifier_limit"] = check is not None and check <= config.thresholds.mollifier_max_diff
    return outcome


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    runner: Callable[[ExperimentConfig, int, int], Outcome]


SCENARIOS: Dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario("dispersion", "flat-bottom linear BP modes against omega(k) = |k|/sqrt(1 + mu k^2/3)", _dispersion),
        Scenario("consistency", "mu-sweep of |BP - SW| (order 1) and |BP - MBP| (order 2)", _consistency),
        Scenario("longtime", "MBP runs to t = T/eps with E^N boundedness verdict", _longtime),
        Scenario("burgers", "eps-sweep of detected gradient blow-up against -1/(eps min u0')", _burgers),
        Scenario(
            "operator-audit",
            "symmetry, coercivity and inversion certificates of the elliptic operators",
            _operator_audit,
        ),
        Scenario("mollifier-study", "trajectory difference of the mollified system as delta -> 0", _mollifier_study),
    )
}


def list_scenarios() -> List[Dict[str, str]]:
    return [{"name": s.name, "description": s.description} for s in SCENARIOS.values()]


def validate_config(config: ExperimentConfig) -> None:
    """Check that every referenced preset resolves and the grid/bottom are admissible.

    Raises:
        ConfigError: With the dotted path of the offending entry
    """
    if config.bathymetry.profile not in PROFILES:
        profile = config.bathymetry.profile
        raise ConfigError(f"bathymetry.profile: unknown preset '{profile}' (known: {sorted(PROFILES)})")
    grids = [("grid", config.grid)] + [(f"audit.grids.{i}", g) for i, g in enumerate(config.audit.grids)]
    for path, spec in grids:
        try:
            grid = spec.build(config.params.mu)
        except GridError as e:
            raise ConfigError(f"{path}: {e}")
        try:
            build_bathymetry(config.bathymetry.profile_spec(), config.bathymetry.beta, grid)
        except BathymetryError as e:
            raise ConfigError(f"bathymetry: {e}")
    try:
        config.stepper.build()
        config.params.build()
    except TimeloopError as e:
        raise ConfigError(f"stepper: {e}")
    except ModelError as e:
        raise ConfigError(f"params: {e}")


# ---------------------------------------------------------------------- entry point


def _run_entry(result: Dict[str, Any]) -> Dict[str, Any]:
    keys = ("name", "status", "reason", "steps", "final_time", "message", "error_type")
    return {key: result[key] for key in keys if key in result}


def run_scenario(
    config: ExperimentConfig,
    out_dir: Optional[str] = None,
    jobs: int = 1,
    seed: Optional[int] = None,
) -> Dict[str, Any]:
    """Run one scenario and write its artifacts.

    Args:
        config: Validated experiment configuration
        out_dir: Output root (CLI value); falls back to config/env/default
        jobs: Worker processes for the sweep
        seed: Overrides config.seed

    Returns:
        dict: status, passed, verdicts, summary and written paths, or
        status="error" with message and error_type
    """
    seed = config.seed if seed is None else seed
    started = _time.perf_counter()
    try:
        validate_config(config)
        scenario = SCENARIOS[config.scenario]
        logger.info(f"scenario start: {scenario.name} name={config.run_name} jobs={jobs} seed={seed}")
        outcome = scenario.runner(config, jobs, seed)
    except ConfigError as e:
        return {"status": "error", "passed": False, "message": str(e), "error_type": "ConfigError"}
    except _KNOWN_ERRORS as e:
        logger.error(f"scenario failed: {type(e).__name__}: {e}")
        return {"status": "error", "passed": False, "message": str(e), "error_type": type(e).__name__}
    except Exception as e:
        logger.error(f"予期しないエラー: {e}")
        return {"status": "error", "passed": False, "message": str(e), "error_type": type(e).__name__}

    passed = bool(outcome.verdicts) and all(outcome.verdicts.values())
    timing = {"total": _time.perf_counter() - started}
    timing.update({r["name"]: r["runtime"] for r in outcome.runs if "runtime" in r})
    summary = {
        "scenario": config.scenario,
        "name": config.run_name,
        "seed": seed,
        "parameters": config.model_dump(mode="json"),
        "verdicts": outcome.verdicts,
        "passed": passed,
        "results": outcome.results,
        "runs": [_run_entry(r) for r in outcome.runs],
        "timing": timing,
    }

    target = resolve_output_dir(out_dir, config) / config.run_name
    runs = {}
    if config.output.trajectories:
        runs = {r["name"]: r["records"] for r in outcome.runs if "records" in r}
    try:
        written = write_outputs(target, summary, runs=runs, tables=outcome.tables, modes=outcome.modes)
        if config.output.snapshots:
            for r in outcome.runs:
                if "fields" not in r:
                    continue
                fields = {key: value for key, value in r["fields"].items() if value is not None}
                paths = write_snapshot(fields, r["grid"], r["final_time"], target / "snapshots" / r["name"])
                written[f"snapshots/{r['name']}"] = str(paths["binary"])
    except OutputError as e:
        logger.error(f"出力に失敗: {e}")
        return {"status": "error", "passed": False, "message": str(e), "error_type": "OutputError", "summary": summary}

    level = logging.INFO if passed else logging.WARNING
    logger.log(level, f"scenario done: {config.scenario} passed={passed} verdicts={outcome.verdicts}")
    return {
        "status": "success",
        "passed": passed,
        "verdicts": outcome.verdicts,
        "summary": summary,
        "output_dir": str(Path(target)),
        "written": written,
    }
