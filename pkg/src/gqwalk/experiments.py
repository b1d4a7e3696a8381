"""Experiment orchestration: plans, the resumable report runner, exports.

A plan is a JSON file naming instances, algorithms, a T grid, the step
size, and optimizer budgets.  The runner produces one report row per
(instance, algorithm, T) cell; rows carry checksums so interrupted runs
resume without redoing completed cells, and reruns with identical seeds
reproduce the report byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine, metrics, optimizer, problems, schedules, spectral

__all__ = [
    "ExperimentPlan",
    "PlanError",
    "load_plan",
    "run_plan",
    "export_figure_data",
    "cached_spectrum",
]

REPORT_COLUMNS = [
    "instance_id",
    "kind",
    "N",
    "T",
    "algorithm",
    "p_gs",
    "e_psi",
    "s_q",
    "r",
    "tts",
    "n_opt",
    "seed",
]
ALGORITHMS = ("gqw", "gqw_oracle", "qw", "qa")


class PlanError(ValueError):
    """Raised for malformed or inconsistent experiment plans."""


@dataclass
class ExperimentPlan:
    instances: list[str]
    algorithms: list[str]
    t_grid: list[float]
    dt: float = 1e-3
    seed: int = 0
    out_dir: str = "results"
    optimizer: dict = field(default_factory=dict)
    workers: int = 1
    traces: bool = False
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.instances:
            raise PlanError("plan names no instances")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise PlanError(f"unknown algorithm {alg!r}")
        ts = np.asarray(self.t_grid, dtype=float)
        if ts.size == 0 or np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
            raise PlanError("T grid must be strictly increasing and positive")
        for path in self.instance_paths():
            if not path.exists():
                raise PlanError(f"instance file not found: {path}")

    def instance_paths(self) -> list[Path]:
        return [Path(self.base_dir) / p for p in self.instances]

    def optimizer_config(self, seed: int) -> optimizer.OptimizerConfig:
        opts = dict(self.optimizer)
        opts.pop("seed", None)
        return optimizer.OptimizerConfig(seed=seed, **opts)


def load_plan(path) -> ExperimentPlan:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from exc
    t_grid = data.get("t_grid")
    if isinstance(t_grid, dict):
        start, stop, step = t_grid["start"], t_grid["stop"], t_grid["step"]
        n = int(round((stop - start) / step))
        t_grid = [round(start + i * step, 10) for i in range(n + 1)]
    try:
        return ExperimentPlan(
            instances=data["instances"],
            algorithms=data.get("algorithms", ["gqw", "qw", "qa"]),
            t_grid=t_grid,
            dt=data.get("dt", 1e-3),
            seed=data.get("seed", 0),
            out_dir=data.get("out_dir", "results"),
            optimizer=data.get("optimizer", {}),
            workers=data.get("workers", 1),
            traces=data.get("traces", False),
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise PlanError(f"plan is missing field {exc}") from exc
    except TypeError as exc:
        raise PlanError(f"invalid plan field: {exc}") from exc


# ---------------------------------------------------------------------------
# Spectrum cache
# ---------------------------------------------------------------------------


def _instance_digest(problem: problems.QuboProblem) -> str:
    payload = json.dumps(problems.instance_to_dict(problem), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def cached_spectrum(problem: problems.QuboProblem) -> problems.SpectrumTable:
    """Enumerate the spectrum, caching under $GQW_CACHE when set."""
    cache_dir = os.environ.get("GQW_CACHE")
    if not cache_dir:
        return problems.enumerate_spectrum(problem)
    path = Path(cache_dir) / f"spectrum_{_instance_digest(problem)}.npz"
    if path.exists():
        data = np.load(path)
        return problems.SpectrumTable(
            n_vars=problem.n_vars,
            energies=data["energies"],
            valid=data["valid"],
            ground_states=data["ground_states"],
            e_min=float(data["e_min"]),
            e_max=float(data["e_max"]),
            e_max_valid=float(data["e_max_valid"]),
        )
    table = problems.enumerate_spectrum(problem)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path,
        energies=table.energies,
        valid=table.valid,
        ground_states=table.ground_states,
        e_min=table.e_min,
        e_max=table.e_max,
        e_max_valid=table.e_max_valid,
    )
    return table


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _row_checksum(fields: list[str]) -> str:
    return hashlib.sha1(",".join(fields).encode()).hexdigest()[:8]


def _cell_seed(plan_seed: int, inst_idx: int, alg_idx: int, t_idx: int) -> int:
    seq = np.random.SeedSequence([plan_seed, inst_idx, alg_idx, t_idx])
    return int(seq.generate_state(1)[0])


def _run_cell(problem, spectrum, profile, alg, total_time, dt, opt_cfg, trace_path=None):
    """One (instance, algorithm, T) cell; returns observables and budget."""
    record = None
    n_opt = 0
    if alg in ("qa", "gqw_oracle"):
        if alg == "qa":
            sched = schedules.LinearQASchedule(total_time)
        else:
            sched = schedules.SpectralOracleSchedule(profile, total_time)
        _, record = engine.evolve(
            spectrum,
            sched,
            engine.EvolutionConfig(total_time=total_time, dt=dt),
            kind=problem.kind,
            record_traces=trace_path is not None,
        )
        if trace_path is not None:
            engine.write_trace_csv(record, trace_path)
    elif alg == "qw":
        outcome = optimizer.optimize_qw(
            spectrum, problem.kind, total_time, opt_cfg, dt=dt
        )
        record, n_opt = outcome.best_record, outcome.eval_count
    elif alg == "gqw":
        outcome = optimizer.optimize_gqw(
            spectrum, problem.kind, total_time, opt_cfg, dt=dt
        )
        record, n_opt = outcome.best_record, outcome.eval_count
    else:
        raise PlanError(f"unknown algorithm {alg!r}")
    tts = None
    if record.p_gs > 0:
        tts = metrics.time_to_solution(record.p_gs, total_time, n_opt)
    return record, n_opt, tts


def _cell_task(args):
    (instance_dict, alg, total_time, dt, opt_dict, cell_seed, want_profile) = args
    problem = problems.instance_from_dict(instance_dict)
    spectrum = cached_spectrum(problem)
    profile = spectral.build_gap_profile(spectrum) if want_profile else None
    cfg = optimizer.OptimizerConfig(seed=cell_seed, **opt_dict)
    return _run_cell(problem, spectrum, profile, alg, total_time, dt, cfg)


def run_plan(plan: ExperimentPlan, progress=None) -> Path:
    """Execute all missing cells of a plan and (re)write its report CSV.

    Existing rows with valid checksums are kept as is, so rerunning a
    completed plan performs no evolutions.  Returns the report path.
    """
    out_dir = Path(plan.base_dir) / plan.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.csv"

    loaded = [problems.load_instance(p) for p in plan.instance_paths()]
    ids = [p.stem for p in plan.instance_paths()]

    existing = {}
    if report_path.exists():
        with open(report_path) as fh:
            fh.readline()  # header
            for line in fh:
                parts = line.rstrip("\n").split(",")
                if len(parts) != len(REPORT_COLUMNS) + 1:
                    continue  # partial write
                fields, checksum = parts[:-1], parts[-1]
                if _row_checksum(fields) != checksum:
                    continue  # corrupted row
                key = (fields[0], fields[4], fields[3])
                existing[key] = parts

    rows = {}
    pending = []
    for i, (problem, inst_id) in enumerate(zip(loaded, ids)):
        for a, alg in enumerate(sorted(plan.algorithms)):
            for t_idx, total_time in enumerate(plan.t_grid):
                key = (inst_id, alg, _fmt(float(total_time)))
                if key in existing:
                    rows[key] = existing[key]
                    continue
                seed = _cell_seed(plan.seed, i, a, t_idx)
                pending.append((key, i, problem, inst_id, alg, total_time, seed))

    _spectrum_cache = {}
    _profile_cache = {}

    def spectrum_for(inst_id, problem):
        if inst_id not in _spectrum_cache:
            _spectrum_cache[inst_id] = cached_spectrum(problem)
        return _spectrum_cache[inst_id]

    def profile_for(inst_id, problem):
        if inst_id not in _profile_cache:
            _profile_cache[inst_id] = spectral.build_gap_profile(
                spectrum_for(inst_id, problem)
            )
        return _profile_cache[inst_id]

    def finish(key, problem, inst_id, alg, total_time, seed, result):
        record, n_opt, tts = result
        fields = [
            inst_id,
            problem.kind,
            str(problem.n_vars),
            _fmt(float(total_time)),
            alg,
            _fmt(record.p_gs),
            _fmt(record.e_psi),
            _fmt(record.s_q),
            _fmt(record.e_psi / spectrum_for(inst_id, problem).e_max),
            _fmt(tts),
            str(n_opt),
            str(seed),
        ]
        rows[key] = fields + [_row_checksum(fields)]
        if progress:
            progress(key)

    opt_dict = dict(plan.optimizer)
    opt_dict.pop("seed", None)

    if plan.workers > 1 and pending:
        tasks = [
            (
                problems.instance_to_dict(problem),
                alg,
                float(total_time),
                plan.dt,
                opt_dict,
                seed,
                alg == "gqw_oracle",
            )
            for (key, i, problem, inst_id, alg, total_time, seed) in pending
        ]
        for inst_id, problem in zip(ids, loaded):
            spectrum_for(inst_id, problem)  # for the r column
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            for (key, _, problem, inst_id, alg, total_time, seed), result in zip(
                pending, pool.map(_cell_task, tasks)
            ):
                finish(key, problem, inst_id, alg, total_time, seed, result)
    else:
        for key, i, problem, inst_id, alg, total_time, seed in pending:
            spectrum = spectrum_for(inst_id, problem)
            profile = (
                profile_for(inst_id, problem) if alg == "gqw_oracle" else None
            )
            cfg = optimizer.OptimizerConfig(seed=seed, **opt_dict)
            trace_path = None
            if plan.traces and alg in ("qa", "gqw_oracle"):
                trace_dir = out_dir / "traces"
                trace_dir.mkdir(exist_ok=True)
                trace_path = trace_dir / f"{inst_id}_{alg}_T{_fmt(float(total_time))}.csv"
            result = _run_cell(
                problem, spectrum, profile, alg, total_time, plan.dt, cfg,
                trace_path=trace_path,
            )
            finish(key, problem, inst_id, alg, total_time, seed, result)
        for inst_id, problem in zip(ids, loaded):
            spectrum_for(inst_id, problem)  # r column needs e_max even on resume

    ordered = sorted(rows)
    with open(report_path, "w") as fh:
        fh.write(",".join(REPORT_COLUMNS + ["checksum"]) + "\n")
        for key in ordered:
            fh.write(",".join(rows[key]) + "\n")
    return report_path


# ---------------------------------------------------------------------------
# Figure-data export
# ---------------------------------------------------------------------------

FIGURES = ("sq_vs_t", "t_vs_n", "tts_vs_n", "evolution_traces")
DEFAULT_THRESHOLDS = (0.01, 0.10, 0.90)


def _load_report(report_path):
    import pandas as pd

    df = pd.read_csv(report_path)
    if df.empty:
        raise ValueError("report is empty")
    missing = [c for c in REPORT_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"report is missing columns: {missing}")
    return df


def export_figure_data(
    report_path,
    figure: str,
    out_path,
    thresholds=DEFAULT_THRESHOLDS,
    traces_dir=None,
) -> None:
    """Write tidy CSVs matching the benchmark figures' data shapes."""
    import pandas as pd

    if figure == "evolution_traces":
        traces_dir = Path(traces_dir or Path(report_path).parent / "traces")
        files = sorted(traces_dir.glob("*.csv"))
        if not files:
            raise ValueError(f"no trace files under {traces_dir}")
        frames = []
        for f in files:
            frame = pd.read_csv(f)
            frame.insert(0, "run", f.stem)
            frames.append(frame)
        pd.concat(frames, ignore_index=True).to_csv(out_path, index=False)
        return

    df = _load_report(report_path)
    if figure == "sq_vs_t":
        rows = []
        for (n, t, alg), grp in df.groupby(["N", "T", "algorithm"]):
            gm, gs = metrics.geometric_aggregate(grp["s_q"].to_numpy())
            rows.append((n, t, alg, gm, gs))
        out = pd.DataFrame(
            rows, columns=["N", "T", "algorithm", "geo_mean_sq", "geo_std_sq"]
        ).sort_values(["algorithm", "N", "T"])
        out.to_csv(out_path, index=False)
        return

    if figure == "t_vs_n":
        rows = []
        for alg, alg_df in df.groupby("algorithm"):
            for thr in thresholds:
                crossings = []
                for n, n_df in alg_df.groupby("N"):
                    curve = (
                        n_df.groupby("T")["s_q"]
                        .apply(lambda v: metrics.geometric_aggregate(v)[0])
                        .sort_index()
                    )
                    t_cross = metrics.threshold_crossing(
                        curve.index.to_numpy(), curve.to_numpy(), thr
                    )
                    if t_cross is not None:
                        crossings.append((n, t_cross))
                fits = {}
                if len(crossings) >= 3:
                    for model in ("linear", "exponential"):
                        try:
                            fits[model] = metrics.fit_scaling(crossings, model)
                        except ValueError:
                            pass
                lin = fits.get("linear", (None, None, None))
                exp = fits.get("exponential", (None, None, None))
                for n, t_cross in crossings:
                    rows.append((alg, thr, n, t_cross) + lin + exp)
        out = pd.DataFrame(
            rows,
            columns=[
                "algorithm",
                "threshold",
                "N",
                "t_cross",
                "linear_a",
                "linear_b",
                "linear_residual",
                "exp_a",
                "exp_b",
                "exp_residual",
            ],
        )
        out.to_csv(out_path, index=False)
        return

    if figure == "tts_vs_n":
        rows = []
        for alg, alg_df in df.groupby("algorithm"):
            best = (
                alg_df.dropna(subset=["tts"]).groupby("N")["tts"].min().sort_index()
            )
            pts = list(zip(best.index.to_numpy(), best.to_numpy()))
            fit = (None, None, None)
            if len(pts) >= 3:
                fit = metrics.fit_scaling(pts, "exponential")
            for n, tts in pts:
                rows.append((alg, n, tts) + fit)
        out = pd.DataFrame(
            rows,
            columns=["algorithm", "N", "min_tts", "exp_a", "exp_b", "exp_residual"],
        )
        out.to_csv(out_path, index=False)
        return

    raise ValueError(f"unknown figure {figure!r}; choose from {FIGURES}")
