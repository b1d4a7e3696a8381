"""Derivative-free tuning of schedule hyperparameters.

Nelder-Mead with reflect/expand/contract/shrink coefficients (1, 2, 0.5,
0.5), box bounds handled by clamping, and seeded random restarts.  The
objective is the final energy expectation E_Psi of the evolved state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .problems import SpectrumTable
from .schedules import BezierGqwSchedule, ConstantSchedule, HyperParams

__all__ = [
    "OptimizerConfig",
    "RestartResult",
    "OptimizationOutcome",
    "nelder_mead",
    "optimize_gqw",
    "optimize_qw",
]

log = logging.getLogger(__name__)

GQW_BOUNDS = [(1e-6, 1.0 - 1e-6)] * 4 + [(0.0, 1.0)] * 2
QW_LOG_GAMMA_BOUNDS = [(-3.0, 2.0)]


@dataclass
class OptimizerConfig:
    """Restart and budget settings (N_rep restarts, N_opt evals each)."""

    n_restarts: int = 20
    max_evals: int = 100
    seed: int = 0
    simplex_scale: float = 0.1
    tol: float = 0.0  # objective-spread convergence; 0 disables early stop
    shots: int | None = None  # sampled-objective mode; None = exact E_Psi

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("need at least one restart")


@dataclass
class RestartResult:
    seed: list
    best_f: float
    best_x: np.ndarray
    history: list[float]


@dataclass
class OptimizationOutcome:
    """Global best over all restarts, with per-restart histories."""

    best_params: np.ndarray
    best_f: float
    best_record: engine.RunRecord | None
    eval_count: int
    restarts: list[RestartResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_params": [float(v) for v in np.atleast_1d(self.best_params)],
            "best_energy": self.best_f,
            "best_sq": self.best_record.s_q if self.best_record else None,
            "evals": self.eval_count,
            "restarts": [
                {
                    "seed": r.seed,
                    "best_f": r.best_f,
                    "history_len": len(r.history),
                }
                for r in self.restarts
            ],
        }


def _clamp(x: np.ndarray, bounds) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return np.minimum(np.maximum(x, lo), hi)


def nelder_mead(
    objective,
    x0: np.ndarray,
    bounds,
    max_evals: int,
    simplex_scale: float = 0.1,
    tol: float = 0.0,
):
    """Bounded Nelder-Mead minimization with a strict evaluation budget.

    Proposals are clamped into the box.  Returns (best_x, best_f, history)
    where history lists every objective value in evaluation order.  With
    max_evals = dim + 1 only the initial simplex is evaluated.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    if max_evals < dim + 1:
        raise ValueError("max_evals must cover the initial simplex (dim + 1)")
    history: list[float] = []
    best_seen = {"x": None, "f": np.inf}

    def f(x):
        val = float(objective(x))
        if not np.isfinite(val):
            raise ArithmeticError(f"objective returned non-finite value at {x}")
        history.append(val)
        if val < best_seen["f"]:
            best_seen["x"], best_seen["f"] = x.copy(), val
        return val

    simplex = [_clamp(x0, bounds)]
    for i in range(dim):
        lo, hi = bounds[i]
        step = simplex_scale * (hi - lo)
        vert = simplex[0].copy()
        vert[i] = vert[i] + step if vert[i] + step <= hi else vert[i] - step
        simplex.append(_clamp(vert, bounds))
    simplex = np.array(simplex)
    values = np.array([f(v) for v in simplex])

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    while len(history) < max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if tol > 0 and values[-1] - values[0] <= tol:
            break
        centroid = simplex[:-1].mean(axis=0)
        xr = _clamp(centroid + alpha * (centroid - simplex[-1]), bounds)
        fr = f(xr)
        if fr < values[0] and len(history) < max_evals:
            xe = _clamp(centroid + gamma * (xr - centroid), bounds)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if len(history) >= max_evals:
                break
            xc = _clamp(centroid + rho * (simplex[-1] - centroid), bounds)
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
            else:  # shrink toward the best vertex
                for i in range(1, dim + 1):
                    if len(history) >= max_evals:
                        break
                    simplex[i] = _clamp(
                        simplex[0] + sigma * (simplex[i] - simplex[0]), bounds
                    )
                    values[i] = f(simplex[i])

    return best_seen["x"], best_seen["f"], history


def _run_restarts(make_objective, draw_x0, bounds, cfg: OptimizerConfig):
    best_x, best_f = None, np.inf
    restarts = []
    evals = 0
    for i in range(cfg.n_restarts):
        seed = [cfg.seed, i]
        rng = np.random.default_rng(seed)
        x0 = draw_x0(rng)
        objective = make_objective(rng)
        try:
            x, fval, history = nelder_mead(
                objective,
                x0,
                bounds,
                cfg.max_evals,
                simplex_scale=cfg.simplex_scale,
                tol=cfg.tol,
            )
        except ArithmeticError as exc:
            log.warning("restart %d aborted: %s", i, exc)
            restarts.append(RestartResult(seed, np.inf, x0, []))
            continue
        evals += len(history)
        restarts.append(RestartResult(seed, fval, x, history))
        if fval < best_f:
            best_x, best_f = x, fval
    return best_x, best_f, restarts, evals


def _energy_objective(spectrum: SpectrumTable, config, make_schedule, shots, rng):
    if shots is None:

        def exact(x):
            _, record = engine.evolve(spectrum, make_schedule(x), config)
            return record.e_psi

        return exact

    def sampled(x):
        # finite-sample estimate of E_Psi, as a hardware loop would see it
        state, _ = engine.evolve(spectrum, make_schedule(x), config)
        probs = state.probabilities()
        counts = rng.multinomial(shots, probs / probs.sum())
        return float(counts @ spectrum.energies) / shots

    return sampled


def optimize_gqw(
    spectrum: SpectrumTable,
    kind: str,
    total_time: float,
    cfg: OptimizerConfig,
    dt: float = 1e-3,
) -> OptimizationOutcome:
    """Tune the six practical-schedule hyperparameters to minimize E_Psi."""
    config = engine.EvolutionConfig(total_time=total_time, dt=dt)

    def make_schedule(x):
        return BezierGqwSchedule(HyperParams.from_array(_clamp(x, GQW_BOUNDS)), total_time)

    def draw_x0(rng):
        lo = np.array([b[0] for b in GQW_BOUNDS])
        hi = np.array([b[1] for b in GQW_BOUNDS])
        return lo + rng.random(6) * (hi - lo)

    best_x, best_f, restarts, evals = _run_restarts(
        lambda rng: _energy_objective(spectrum, config, make_schedule, cfg.shots, rng),
        draw_x0,
        GQW_BOUNDS,
        cfg,
    )
    record = None
    if best_x is not None:
        _, record = engine.evolve(
            spectrum, make_schedule(best_x), config, kind=kind
        )
    return OptimizationOutcome(best_x, best_f, record, evals, restarts)


def optimize_qw(
    spectrum: SpectrumTable,
    kind: str,
    total_time: float,
    cfg: OptimizerConfig,
    dt: float = 1e-3,
) -> OptimizationOutcome:
    """Tune the single constant hopping rate (searched in log10 scale)."""
    config = engine.EvolutionConfig(total_time=total_time, dt=dt)

    def make_schedule(x):
        return ConstantSchedule(10.0 ** float(np.atleast_1d(x)[0]), total_time)

    def draw_x0(rng):
        (lo, hi), = QW_LOG_GAMMA_BOUNDS
        return np.array([lo + rng.random() * (hi - lo)])

    best_x, best_f, restarts, evals = _run_restarts(
        lambda rng: _energy_objective(spectrum, config, make_schedule, cfg.shots, rng),
        draw_x0,
        QW_LOG_GAMMA_BOUNDS,
        cfg,
    )
    record = None
    if best_x is not None:
        _, record = engine.evolve(
            spectrum, make_schedule(best_x), config, kind=kind
        )
    return OptimizationOutcome(best_x, best_f, record, evals, restarts)
