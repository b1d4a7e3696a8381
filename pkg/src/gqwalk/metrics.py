"""Benchmarking metrics: solution quality, approximation ratio, TTS, fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .problems import SpectrumTable

__all__ = [
    "MetricReport",
    "solution_quality",
    "approximation_ratio",
    "time_to_solution",
    "geometric_aggregate",
    "fit_scaling",
    "threshold_crossing",
    "metric_report",
]

ZERO_FLOOR = 1e-12


@dataclass
class MetricReport:
    """Per-run summary of the standard benchmark quantities."""

    p_gs: float
    e_psi: float
    s_q: float
    r: float
    valid_mass: float


def _probabilities(state_or_probs) -> np.ndarray:
    amps = getattr(state_or_probs, "amplitudes", None)
    if amps is not None:
        return np.abs(amps) ** 2
    return np.asarray(state_or_probs, dtype=float)


def solution_quality(state_or_probs, spectrum: SpectrumTable, kind: str) -> float:
    """Probability- and energy-weighted overlap with the valid states.

    S_q = sum over valid z of (1 - E_z / E_max_valid) * P_z.  Constraint-only
    problems (exact cover) use a zero energy weight for every valid state, so
    S_q equals the ground-state probability.  The same rule applies when all
    valid states share one energy (degenerate denominator).
    """
    probs = _probabilities(state_or_probs)
    valid = spectrum.valid
    if not valid.any():
        warnings.warn("no valid states: solution quality is 0", stacklevel=2)
        return 0.0
    e_valid = spectrum.energies[valid]
    p_valid = probs[valid]
    e_lo = e_valid.min()
    e_hi = spectrum.e_max_valid
    if kind == "exact_cover":
        return float(probs[spectrum.ground_states].sum())
    if e_hi - e_lo <= 1e-9 * max(1.0, abs(e_hi)):
        return float(p_valid.sum())
    if e_hi <= 0:
        # energy weights are undefined without a positive ceiling
        # (energies not mapped onto [0, 100]); credit the optimum only
        return float(probs[spectrum.ground_states].sum())
    return float(((1.0 - e_valid / e_hi) * p_valid).sum())


def approximation_ratio(state_or_probs, spectrum: SpectrumTable) -> float:
    """E_Psi / E_max."""
    if spectrum.e_max <= 0:
        raise ValueError("approximation ratio undefined for a nonpositive E_max")
    probs = _probabilities(state_or_probs)
    return float(probs @ spectrum.energies) / spectrum.e_max


def metric_report(state_or_probs, spectrum: SpectrumTable, kind: str) -> MetricReport:
    probs = _probabilities(state_or_probs)
    return MetricReport(
        p_gs=float(probs[spectrum.ground_states].sum()),
        e_psi=float(probs @ spectrum.energies),
        s_q=solution_quality(probs, spectrum, kind),
        r=approximation_ratio(probs, spectrum),
        valid_mass=float(probs[spectrum.valid].sum()),
    )


def time_to_solution(
    p_gs: float, total_time: float, n_opt: int, p_target: float = 0.9999
) -> float:
    """Expected total run time to hit the optimum once with confidence p_target.

    TTS = ln(1 - p_target)/ln(1 - p_gs) * T + n_opt * T, where the first
    factor counts repetitions of one evolution of length T and the second
    term charges the optimization phase.  At p_gs >= p_target a single
    repetition suffices, so the factor is clamped to 1.
    """
    if p_gs <= 0.0:
        raise ValueError("unreachable target: success probability is zero")
    if p_gs >= 1.0 or p_gs >= p_target:
        reps = 1.0
    else:
        reps = math.log(1.0 - p_target) / math.log(1.0 - p_gs)
        reps = max(reps, 1.0)
    return reps * total_time + n_opt * total_time


def geometric_aggregate(values) -> tuple[float, float]:
    """Geometric mean and geometric (population) standard deviation."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot aggregate an empty sequence")
    if np.any(values < 0):
        raise ValueError("geometric aggregation needs nonnegative values")
    if np.any(values < ZERO_FLOOR):
        warnings.warn(
            f"zeros floored at {ZERO_FLOOR} before geometric aggregation",
            stacklevel=2,
        )
        values = np.maximum(values, ZERO_FLOOR)
    logs = np.log(values)
    return float(np.exp(logs.mean())), float(np.exp(logs.std()))


def fit_scaling(points, model: str) -> tuple[float, float, float]:
    """Fit T(N) = a + b*N ("linear") or T(N) = a * 2^(b*N) ("exponential").

    Least squares in the model's natural space (log2 of T for the
    exponential model).  Returns (a, b, residual) with the residual summed
    over the fitted space.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (N, T) points")
    n, t = pts[:, 0], pts[:, 1]
    if model == "linear":
        (b, a), res = _lstsq_line(n, t)
        return a, b, res
    if model == "exponential":
        if np.any(t <= 0):
            raise ValueError("exponential model requires positive T values")
        (b, la), res = _lstsq_line(n, np.log2(t))
        return float(2.0**la), b, res
    raise ValueError(f"unknown scaling model {model!r}")


def _lstsq_line(x, y):
    coeffs, res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(res[0]) if res.size else 0.0
    return (float(coeffs[0]), float(coeffs[1])), residual


def threshold_crossing(ts: np.ndarray, values: np.ndarray, threshold: float):
    """First T where ``values`` crosses ``threshold``, linearly interpolated.

    Returns None when the threshold is never reached.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    above = values >= threshold
    if not above.any():
        return None
    i = int(np.argmax(above))
    if i == 0:
        return float(ts[0])
    t0, t1 = ts[i - 1], ts[i]
    v0, v1 = values[i - 1], values[i]
    if v1 == v0:
        return float(t1)
    return float(t0 + (threshold - v0) * (t1 - t0) / (v1 - v0))
