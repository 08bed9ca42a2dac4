"""Scenario orchestration and delimited-output emission.

Every run produces, per scenario and method, a trajectory CSV (all four
density-matrix entries plus the two headline observables) and, when
entanglement outputs are requested, a concurrence CSV and one summary row
with the non-Markovianity value.  Files carry a ``#``-prefixed metadata
block with full parameter provenance, and identical inputs produce
byte-identical outputs (no timestamps, fixed float formatting).  Figures
are rendered next to the CSVs unless plotting is disabled.
"""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bath
from .heom import propagate_heom
from .measures import non_markovianity, propagate_choi
from .model import ModelParams
from .scenarios import Scenario
from .tc2 import propagate_tc2, propagate_tc2_history_oracle
from .tl2 import propagate_tl2
from .trajectory import ExtendedTrajectory, Trajectory
from .units import wavenumber_to_angular

SUMMARY_COLUMNS = (
    "scenario", "method", "lambda_cm1", "gamma_cm1", "omega0_cm1",
    "j_coupling_cm1", "temperature_K", "nm_value", "max_concurrence_revival",
)


def _fmt(value) -> str:
    return format(float(value), ".17g")


@dataclass
class PointFailure:
    scenario: str
    method: str
    message: str


@dataclass
class ScenarioResult:
    scenario: str
    files: list = field(default_factory=list)
    summary_rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def _base_metadata(scenario: Scenario) -> dict:
    model = scenario.model
    meta = {
        "scenario": scenario.name,
        "omega0_cm1": _fmt(model.omega0),
        "j_coupling_cm1": _fmt(model.j_coupling),
        "lambda_cm1": _fmt(model.lam),
        "gamma_cm1": _fmt(model.gamma),
        "gamma_inverse_fs": (
            _fmt(1.0 / wavenumber_to_angular(model.gamma)) if model.gamma > 0 else "inf"
        ),
        "temperature_K": _fmt(model.temperature),
        "t_final_fs": _fmt(model.t_final),
        "dt_fs": _fmt(model.dt),
        "initial_state": (
            scenario.initial_state
            if isinstance(scenario.initial_state, str)
            else "custom"
        ),
    }
    return meta


def _write_csv(path: Path, metadata: dict, header: str, rows) -> Path:
    lines = [f"# {key}: {value}" for key, value in metadata.items()]
    lines.append(header)
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trajectory_csv(path: Path, traj: Trajectory, metadata: dict) -> Path:
    header = (
        "t_fs,re_rho_pp,im_rho_pp,re_rho_pm,im_rho_pm,"
        "re_rho_mp,im_rho_mp,re_rho_mm,im_rho_mm,rho_pp,abs_rho_mp"
    )
    rows = []
    for t, state in zip(traj.times, traj.states):
        cells = [_fmt(t)]
        for i in range(2):
            for j in range(2):
                cells.append(_fmt(state[i, j].real))
                cells.append(_fmt(state[i, j].imag))
        cells.append(_fmt(state[0, 0].real))
        cells.append(_fmt(abs(state[1, 0])))
        rows.append(",".join(cells))
    return _write_csv(path, metadata, header, rows)


def write_concurrence_csv(path: Path, times, values, metadata: dict) -> Path:
    rows = [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(times, values)]
    return _write_csv(path, metadata, "t_fs,concurrence", rows)


def read_concurrence_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a concurrence CSV (skipping the metadata block)."""
    times, values = [], []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("t_fs"):
                continue
            t_str, v_str = line.split(",")
            times.append(float(t_str))
            values.append(float(v_str))
    return np.array(times), np.array(values)


def _propagate(scenario: Scenario, method: str, series) -> Trajectory:
    rho0 = scenario.initial_density_matrix()
    if method == "tc2":
        return propagate_tc2(scenario.model, rho0, series=series)
    if method == "tl2":
        return propagate_tl2(scenario.model, rho0, series=series)
    if method == "heom":
        return propagate_heom(
            scenario.model, rho0, scenario.heom_depth,
            n_matsubara=scenario.matsubara_k, use_sparse=True,
        )
    raise ValueError(f"unknown method {method!r}")


def _choi(scenario: Scenario, method: str, series) -> ExtendedTrajectory:
    if method == "heom":
        return propagate_choi(
            "heom", scenario.model, heom_depth=scenario.heom_depth,
            n_matsubara=scenario.matsubara_k,
        )
    return propagate_choi(method, scenario.model, series=series)


def run_scenario(
    scenario: Scenario,
    out_dir,
    *,
    oracle: bool = False,
    plot: bool = True,
) -> ScenarioResult:
    """Execute one scenario; failures are recorded per method, not raised."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = ScenarioResult(scenario=scenario.name)
    model = scenario.model

    series = None
    bath_k = 0
    if model.lam > 0:
        bath_k = bath.choose_matsubara_count(
            bath.SpectralDensity(lam=model.lam, gamma=model.gamma), model.temperature
        )
        series = bath.default_series(model.lam, model.gamma, model.temperature, bath_k)
    else:
        series = bath.default_series(model.lam, model.gamma, model.temperature, 0)

    base_meta = _base_metadata(scenario)
    base_meta["bath_matsubara_k"] = bath_k
    base_meta["bath_residual_bound"] = _fmt(series.residual_bound)

    if "bath_audit" in scenario.outputs:
        audit_path = out_dir / f"{scenario.name}__bath_series.csv"
        bath.write_series_csv(series, audit_path, metadata=base_meta)
        result.files.append(audit_path)

    trajectories = {}
    concurrences = {}
    for method in scenario.methods:
        meta = dict(base_meta)
        meta["method"] = method
        if method == "heom":
            meta["heom_depth"] = scenario.heom_depth
            meta["heom_matsubara_k"] = scenario.matsubara_k
        try:
            traj = _propagate(scenario, method, series)
            trajectories[method] = traj
            path = out_dir / f"{scenario.name}__{method}__trajectory.csv"
            result.files.append(write_trajectory_csv(path, traj, meta))

            if oracle and method == "tc2":
                oracle_traj = propagate_tc2_history_oracle(
                    model, scenario.initial_density_matrix(), series=series
                )
                dev = float(np.max(np.abs(oracle_traj.states - traj.states)))
                ometa = dict(meta)
                ometa["method"] = "tc2_history_oracle"
                ometa["max_abs_dev_vs_tc2"] = _fmt(dev)
                opath = out_dir / f"{scenario.name}__tc2_oracle__trajectory.csv"
                result.files.append(write_trajectory_csv(opath, oracle_traj, ometa))

            if "concurrence" in scenario.outputs or "nm" in scenario.outputs:
                ext = _choi(scenario, method, series)
                report = non_markovianity(ext, scenario.rise_threshold)
                concurrences[method] = (ext.times, report.concurrence)
                cmeta = dict(meta)
                cmeta["rise_threshold"] = _fmt(scenario.rise_threshold)
                cpath = out_dir / f"{scenario.name}__{method}__concurrence.csv"
                result.files.append(
                    write_concurrence_csv(cpath, ext.times, report.concurrence, cmeta)
                )
                if "nm" in scenario.outputs:
                    result.summary_rows.append({
                        "scenario": scenario.name,
                        "method": method,
                        "lambda_cm1": model.lam,
                        "gamma_cm1": model.gamma,
                        "omega0_cm1": model.omega0,
                        "j_coupling_cm1": model.j_coupling,
                        "temperature_K": model.temperature,
                        "nm_value": report.nm_value,
                        "max_concurrence_revival": report.max_revival,
                    })
        except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
            result.failures.append(
                PointFailure(scenario.name, method, f"{exc}\n{traceback.format_exc()}")
            )

    if plot and trajectories:
        from . import plotting

        if "populations" in scenario.outputs or "coherence" in scenario.outputs:
            fig_path = out_dir / f"{scenario.name}__dynamics.png"
            plotting.plot_dynamics(fig_path, trajectories, title=scenario.name)
            result.files.append(fig_path)
        if concurrences:
            fig_path = out_dir / f"{scenario.name}__concurrence.png"
            plotting.plot_concurrence(fig_path, concurrences, title=scenario.name)
            result.files.append(fig_path)
    return result


def write_summary_csv(path: Path, rows) -> Path:
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        cells = [str(row["scenario"]), str(row["method"])]
        for key in SUMMARY_COLUMNS[2:]:
            cells.append(_fmt(row[key]))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def _run_one(args):
    scenario, out_dir, oracle, plot = args
    return run_scenario(scenario, out_dir, oracle=oracle, plot=plot)


def run_scenarios(
    scenarios,
    out_dir,
    *,
    methods=None,
    oracle: bool = False,
    plot: bool = True,
    jobs: int = 1,
) -> tuple[list[ScenarioResult], list[PointFailure]]:
    """Run a scenario list, write summary.csv and cross-scenario figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if methods:
        methods = tuple(m.lower() for m in methods)
        filtered = []
        for s in scenarios:
            keep = tuple(m for m in s.methods if m in methods)
            if keep:
                filtered.append(
                    Scenario(
                        name=s.name, model=s.model, methods=keep,
                        heom_depth=s.heom_depth, matsubara_k=s.matsubara_k,
                        initial_state=s.initial_state, outputs=s.outputs,
                        rise_threshold=s.rise_threshold,
                    )
                )
        scenarios = filtered

    tasks = [(s, out_dir, oracle, plot) for s in scenarios]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(task) for task in tasks]

    rows = [row for res in results for row in res.summary_rows]
    failures = [f for res in results for f in res.failures]
    if rows:
        write_summary_csv(out_dir / "summary.csv", rows)
        if plot:
            from . import plotting

            temps = {row["temperature_K"] for row in rows}
            if len(temps) > 1:
                plotting.plot_nm_vs_temperature(out_dir / "nm_vs_temperature.png", rows)
    return results, failures
