"""Guided-quantum-walk simulation and benchmarking for QUBO optimization.

Continuous-time quantum walks on the hypercube with a time-dependent
hopping rate Gamma(t), second-order product-formula propagation, schedule
construction (constant, annealing-style, spectral-oracle, and a practical
Bezier parametrization), derivative-free schedule tuning, and the standard
benchmark metrics.
"""

from __future__ import annotations

from .engine import (
    EvolutionAbort,
    EvolutionConfig,
    RunRecord,
    Statevector,
    equal_superposition,
    evolve,
    instantaneous_spectrum,
    load_statevector,
    save_statevector,
)
from .experiments import ExperimentPlan, PlanError, export_figure_data, load_plan, run_plan
from .metrics import (
    MetricReport,
    approximation_ratio,
    fit_scaling,
    geometric_aggregate,
    metric_report,
    solution_quality,
    threshold_crossing,
    time_to_solution,
)
from .optimizer import (
    OptimizationOutcome,
    OptimizerConfig,
    nelder_mead,
    optimize_gqw,
    optimize_qw,
)
from .problems import (
    IsingForm,
    ProblemError,
    QuboProblem,
    SpectrumTable,
    build_custom,
    build_exact_cover,
    build_garden,
    build_tsp,
    enumerate_spectrum,
    generate_instance,
    ising_from_qubo,
    load_instance,
    rescale,
    save_instance,
)
from .schedules import (
    BezierGqwSchedule,
    ConstantSchedule,
    HyperParams,
    LinearQASchedule,
    SpectralOracleSchedule,
    gamma_opt_hypercube,
    schedule_from_descriptor,
)
from .spectral import (
    GapProfile,
    build_gap_profile,
    rabi_probability,
    resonance_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "BezierGqwSchedule",
    "ConstantSchedule",
    "EvolutionAbort",
    "EvolutionConfig",
    "ExperimentPlan",
    "GapProfile",
    "HyperParams",
    "IsingForm",
    "LinearQASchedule",
    "MetricReport",
    "OptimizationOutcome",
    "OptimizerConfig",
    "PlanError",
    "ProblemError",
    "QuboProblem",
    "RunRecord",
    "SpectralOracleSchedule",
    "SpectrumTable",
    "Statevector",
    "approximation_ratio",
    "build_custom",
    "build_exact_cover",
    "build_gap_profile",
    "build_garden",
    "build_tsp",
    "enumerate_spectrum",
    "equal_superposition",
    "evolve",
    "export_figure_data",
    "fit_scaling",
    "gamma_opt_hypercube",
    "generate_instance",
    "geometric_aggregate",
    "instantaneous_spectrum",
    "ising_from_qubo",
    "load_instance",
    "load_plan",
    "load_statevector",
    "metric_report",
    "nelder_mead",
    "optimize_gqw",
    "optimize_qw",
    "rabi_probability",
    "rescale",
    "resonance_gamma",
    "run_plan",
    "save_instance",
    "save_statevector",
    "schedule_from_descriptor",
    "solution_quality",
    "threshold_crossing",
    "time_to_solution",
]
