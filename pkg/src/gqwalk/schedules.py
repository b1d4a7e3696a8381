"""Hopping-rate schedules Gamma(t) on [0, T].

Four variants: constant (quantum walk), linear annealing, spectral-oracle
(built from the fitted mean largest-lower-gap profile), and the practical
cubic-Bezier parametrization with boundary hyperparameters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HyperParams",
    "ConstantSchedule",
    "LinearQASchedule",
    "BezierGqwSchedule",
    "SpectralOracleSchedule",
    "bezier_eval",
    "bezier_xy",
    "constant_schedule",
    "linear_qa_schedule",
    "gqw_schedule",
    "spectral_oracle_schedule",
    "gamma_opt_hypercube",
    "schedule_from_descriptor",
]

LINEAR_QA_CAP = 1e4
FIT_FLOOR = 1e-6
_TAU_GRID = 4097
_TIME_GRID = 2001


def bezier_xy(l0: float, l1: float, l2: float, l3: float, tau):
    """Cubic Bezier point with endpoints (0, 1) and (1, 0).

    Inner x-controls are sorted ascending so that x(tau) is monotone.
    """
    x1, x2 = sorted((l0, l2))
    y1, y2 = l1, l3
    tau = np.asarray(tau, dtype=float)
    omt = 1.0 - tau
    x = 3 * x1 * omt**2 * tau + 3 * x2 * omt * tau**2 + tau**3
    y = omt**3 + 3 * y1 * omt**2 * tau + 3 * y2 * omt * tau**2
    return x, y


def bezier_eval(l0: float, l1: float, l2: float, l3: float, u: float) -> float:
    """Solve u = x(tau) by bisection and return y(tau).

    Control coordinates live in (0, 1); the endpoints are fixed at (0, 1)
    and (1, 0), so bezier_eval(.., 0) = 1 and bezier_eval(.., 1) = 0.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        x, _ = bezier_xy(l0, l1, l2, l3, mid)
        if x < u:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    x, y = bezier_xy(l0, l1, l2, l3, tau)
    if abs(float(x) - u) > 1e-9:
        raise ValueError(f"bezier inversion did not converge at u={u}")
    return float(y)


@dataclass(frozen=True)
class HyperParams:
    """Six tunables of the practical schedule.

    (l0, l1) and (l2, l3) are the inner Bezier control points, all in
    (0, 1).  k_start and k_end in [0, 1] set the boundary hopping rates
    Gamma(0) = 10^(2*k_start) and Gamma(T) = 10^(-3*(1-k_end)).
    """

    l0: float
    l1: float
    l2: float
    l3: float
    k_start: float
    k_end: float

    def __post_init__(self):
        for name in ("l0", "l1", "l2", "l3"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} must lie in (0, 1)")
        for name in ("k_start", "k_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} must lie in [0, 1]")

    @property
    def gamma_start(self) -> float:
        return 10.0 ** (2.0 * self.k_start)

    @property
    def gamma_end(self) -> float:
        return 10.0 ** (-3.0 * (1.0 - self.k_end))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.l0, self.l1, self.l2, self.l3, self.k_start, self.k_end]
        )

    @staticmethod
    def from_array(x) -> "HyperParams":
        return HyperParams(*(float(v) for v in x))


class _Schedule:
    """Common surface: scalar gamma(t), vectorized gamma_many, descriptor."""

    variant: str
    total_time: float

    def gamma(self, t: float) -> float:
        return float(self.gamma_many(np.array([t]))[0])

    def gamma_many(self, ts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


class ConstantSchedule(_Schedule):
    variant = "constant"

    def __init__(self, gamma0: float, total_time: float):
        if gamma0 < 0:
            raise ValueError("hopping rate must be nonnegative")
        self.gamma0 = float(gamma0)
        self.total_time = float(total_time)

    def gamma_many(self, ts):
        return np.full(np.asarray(ts, dtype=float).shape, self.gamma0)

    def descriptor(self):
        return {"variant": "constant", "T": self.total_time, "gamma0": self.gamma0}


class LinearQASchedule(_Schedule):
    """Gamma(t) = (1 - t/T)/(t/T), capped near the t = 0 divergence."""

    variant = "linear_qa"

    def __init__(self, total_time: float, cap: float = LINEAR_QA_CAP):
        if total_time <= 0:
            raise ValueError("total_time must be positive")
        self.total_time = float(total_time)
        self.cap = float(cap)

    def gamma_many(self, ts):
        u = np.asarray(ts, dtype=float) / self.total_time
        with np.errstate(divide="ignore"):
            g = np.where(u > 0, (1.0 - u) / np.maximum(u, 1e-300), np.inf)
        return np.minimum(g, self.cap)

    def descriptor(self):
        return {"variant": "linear_qa", "T": self.total_time, "cap": self.cap}


class BezierGqwSchedule(_Schedule):
    """Gamma(t) = Gamma_end * (Gamma_start/Gamma_end)^y(t/T).

    y is the cubic Bezier shape, interpolated geometrically between the
    boundary rates so the curve acts uniformly across orders of magnitude.
    A running-minimum clamp on the shape enforces monotonicity for extreme
    control points.
    """

    variant = "bezier_gqw"

    def __init__(self, params: HyperParams, total_time: float):
        if total_time <= 0:
            raise ValueError("total_time must be positive")
        if params.gamma_start < params.gamma_end:
            raise ValueError("Gamma(0) must not be below Gamma(T)")
        self.params = params
        self.total_time = float(total_time)
        tau = np.linspace(0.0, 1.0, _TAU_GRID)
        x, y = bezier_xy(params.l0, params.l1, params.l2, params.l3, tau)
        self._x_grid = x
        self._y_grid = np.minimum.accumulate(y)

    def gamma_many(self, ts):
        u = np.clip(np.asarray(ts, dtype=float) / self.total_time, 0.0, 1.0)
        y = np.interp(u, self._x_grid, self._y_grid)
        gs, ge = self.params.gamma_start, self.params.gamma_end
        return ge * (gs / ge) ** y

    def descriptor(self):
        p = self.params
        return {
            "variant": "bezier_gqw",
            "T": self.total_time,
            "params": list(p.as_array()),
        }


class SpectralOracleSchedule(_Schedule):
    """Gamma(t) = Gamma_tilde(E(t)) from the fitted mean-gap profile.

    Gamma_tilde(E) = <gap>(E) / 4 (the driver's local gap magnitude is 2),
    with the rescaled sweep s(t) obtained by quadrature of the profile so
    that fast high-energy transfers are compensated.
    """

    variant = "spectral_oracle"

    def __init__(self, profile, total_time: float, grid: int = _TIME_GRID):
        if total_time <= 0:
            raise ValueError("total_time must be positive")
        self.total_time = float(total_time)
        self.profile = profile
        e_min, e_max = profile.e_min, profile.e_max
        e_grid = np.linspace(e_min, e_max, grid)
        delta = np.asarray(profile.fit_values(e_grid), dtype=float)
        if np.any(delta <= 0):
            warnings.warn(
                f"non-positive gap fit values clamped to {FIT_FLOOR}",
                stacklevel=2,
            )
            delta = np.maximum(delta, FIT_FLOOR)
        # F[i] = integral of the profile from e_grid[i] up to e_max
        de = e_grid[1] - e_grid[0]
        trap = 0.5 * (delta[1:] + delta[:-1]) * de
        upper = np.concatenate([np.cumsum(trap[::-1])[::-1], [0.0]])
        total = upper[0]
        ts = np.linspace(0.0, self.total_time, grid)
        e_lin = e_max + (e_min - e_max) * ts / self.total_time
        s = np.interp(e_lin, e_grid, upper) / total
        e_of_t = e_max + (e_min - e_max) * s
        gam = np.interp(e_of_t, e_grid, delta) / 4.0
        self._t_grid = ts
        self._gamma_grid = np.minimum.accumulate(gam)
        self._s_grid = s

    def s_of_t(self, ts) -> np.ndarray:
        """Rescaled time s(t) in [0, 1]; s(0) = 0 and s(T) = 1."""
        return np.interp(np.asarray(ts, dtype=float), self._t_grid, self._s_grid)

    def gamma_many(self, ts):
        return np.interp(
            np.clip(np.asarray(ts, dtype=float), 0.0, self.total_time),
            self._t_grid,
            self._gamma_grid,
        )

    def descriptor(self):
        return {
            "variant": "spectral_oracle",
            "T": self.total_time,
            "fit": self.profile.fit_dict(),
            "grid": self._t_grid.size,
        }


# Functional constructors matching the operation names.


def constant_schedule(gamma0: float, total_time: float) -> ConstantSchedule:
    return ConstantSchedule(gamma0, total_time)


def linear_qa_schedule(total_time: float) -> LinearQASchedule:
    return LinearQASchedule(total_time)


def gqw_schedule(params: HyperParams, total_time: float) -> BezierGqwSchedule:
    return BezierGqwSchedule(params, total_time)


def spectral_oracle_schedule(profile, total_time: float) -> SpectralOracleSchedule:
    return SpectralOracleSchedule(profile, total_time)


def gamma_opt_hypercube(n_qubits: int) -> float:
    """Closed-form optimal hopping rate for the hypercube search problem.

    Gamma_opt = 2^(-N) * sum_{r=1}^{N} binom(N, r) / (2 r).
    """
    total = sum(math.comb(n_qubits, r) / (2.0 * r) for r in range(1, n_qubits + 1))
    return total / 2.0**n_qubits


def schedule_from_descriptor(desc: dict, profile=None) -> _Schedule:
    """Rebuild a schedule from its JSON descriptor."""
    variant = desc["variant"]
    if variant == "constant":
        return ConstantSchedule(desc["gamma0"], desc["T"])
    if variant == "linear_qa":
        sched = LinearQASchedule(desc["T"])
        sched.cap = desc.get("cap", LINEAR_QA_CAP)
        return sched
    if variant == "bezier_gqw":
        return BezierGqwSchedule(HyperParams.from_array(desc["params"]), desc["T"])
    if variant == "spectral_oracle":
        if profile is None:
            from .spectral import GapProfile

            profile = GapProfile.from_fit_dict(desc["fit"])
        return SpectralOracleSchedule(profile, desc["T"], grid=desc.get("grid", _TIME_GRID))
    raise ValueError(f"unknown schedule variant {variant!r}")
