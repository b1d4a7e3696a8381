"""Statevector representation and Suzuki-Trotter time evolution.

The Hamiltonian is H(t) = Gamma(t) * H_D + H_C with the hypercube driver
H_D = -sum_j sigma_x^j and a diagonal cost Hamiltonian.  A second-order
symmetric splitting is used, with the hopping rate evaluated at each step
midpoint.  Bit j of the amplitude-array index is qubit j.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .metrics import solution_quality
from .problems import SpectrumTable

__all__ = [
    "Statevector",
    "EvolutionConfig",
    "RunRecord",
    "EvolutionAbort",
    "equal_superposition",
    "apply_cost_phase",
    "apply_driver_rotation",
    "trotter_step",
    "evolve",
    "energy_expectation",
    "level_probabilities",
    "instantaneous_spectrum",
    "oracle_search_energies",
    "save_statevector",
    "load_statevector",
    "write_trace_csv",
]

NORM_ABORT = 1e-6
STATE_MAGIC = b"GQWSTATE"


class EvolutionAbort(RuntimeError):
    """Raised when the statevector norm drifts beyond the abort threshold."""


@dataclass(eq=False)
class Statevector:
    """2^N complex amplitudes indexed by bitstring (bit j = qubit j)."""

    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())


@dataclass
class EvolutionConfig:
    """Time grid and recording granularity for one evolution."""

    total_time: float
    dt: float = 1e-3
    record_stride: int | None = None  # default: ~200 samples per run
    energy_bins: int = 50

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.total_time < 0:
            raise ValueError("total_time must be nonnegative")
        if self.total_time > 0 and self.dt > self.total_time:
            raise ValueError("dt must not exceed total_time")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass(eq=False)
class RunRecord:
    """Final observables of an evolution plus optional time-series traces."""

    e_psi: float
    p_gs: float
    s_q: float
    schedule: dict = field(default_factory=dict)
    wall_time: float = 0.0
    trace_t: np.ndarray | None = None
    trace_gamma: np.ndarray | None = None
    trace_e_psi: np.ndarray | None = None
    trace_p_gs: np.ndarray | None = None
    trace_hist: np.ndarray | None = None  # (samples, bins)


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------


def equal_superposition(n_qubits: int) -> Statevector:
    """The uniform superposition |+>^N, every amplitude 2^(-N/2)."""
    if not 1 <= n_qubits <= 30:
        raise ValueError(f"unsupported qubit count {n_qubits}")
    dim = 1 << n_qubits
    amps = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    return Statevector(n_qubits, amps)


def apply_cost_phase(state: Statevector, energies: np.ndarray, tau: float) -> Statevector:
    """In place: psi_z <- psi_z * exp(-i E_z tau)."""
    if energies.shape[0] != state.amplitudes.shape[0]:
        raise ValueError("energy array length does not match the state dimension")
    state.amplitudes *= np.exp(-1j * tau * energies)
    return state


def apply_driver_rotation(state: Statevector, theta: float) -> Statevector:
    """In place: exp(-i Gamma H_D dt) = prod_j exp(+i theta sigma_x^j), theta = Gamma*dt."""
    c = np.cos(theta)
    s = 1j * np.sin(theta)
    psi = state.amplitudes
    for j in range(state.n_qubits):
        v = psi.reshape(-1, 2, 1 << j)
        a = v[:, 0, :].copy()
        b = v[:, 1, :]
        v[:, 0, :] = c * a + s * b
        v[:, 1, :] = s * a + c * b
    return state


def trotter_step(
    state: Statevector,
    energies: np.ndarray,
    schedule,
    t: float,
    dt: float,
) -> Statevector:
    """One symmetric step: cost half, driver at the midpoint rate, cost half."""
    apply_cost_phase(state, energies, dt / 2.0)
    apply_driver_rotation(state, schedule.gamma(t + dt / 2.0) * dt)
    apply_cost_phase(state, energies, dt / 2.0)
    return state


def energy_expectation(state: Statevector, energies: np.ndarray) -> float:
    """<Psi| H_C |Psi> = sum_z |psi_z|^2 E_z."""
    if energies.shape[0] != state.amplitudes.shape[0]:
        raise ValueError("energy array length does not match the state dimension")
    return float(state.probabilities() @ energies)


def level_probabilities(
    state: Statevector, spectrum: SpectrumTable, bins: int
) -> np.ndarray:
    """Probability mass per uniform energy bin over [e_min, e_max]; sums to 1."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    probs = state.probabilities()
    if spectrum.e_max - spectrum.e_min <= 0:
        hist = np.zeros(bins)
        hist[0] = probs.sum()
        return hist
    hist, _ = np.histogram(
        spectrum.energies,
        bins=bins,
        range=(spectrum.e_min, spectrum.e_max),
        weights=probs,
    )
    return hist


def oracle_search_energies(n_qubits: int, target: int = 0) -> np.ndarray:
    """Diagonal of the search oracle: -1 for the marked bitstring, 0 elsewhere."""
    energies = np.zeros(1 << n_qubits)
    energies[target] = -1.0
    return energies


# ---------------------------------------------------------------------------
# Fused evolution kernel
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _segment_kernel(psi, phase_half, phase_full, cos_t, sin_t, n_qubits):
    """Evolve a run of symmetric steps with adjacent cost half-phases fused."""
    dim = psi.shape[0]
    for z in range(dim):
        psi[z] = psi[z] * phase_half[z]
    for s in range(cos_t.shape[0]):
        if s > 0:
            for z in range(dim):
                psi[z] = psi[z] * phase_full[z]
        c = cos_t[s]
        sn = sin_t[s]
        for j in range(n_qubits):
            stride = 1 << j
            block = stride << 1
            for base in range(0, dim, block):
                for off in range(stride):
                    i0 = base + off
                    i1 = i0 + stride
                    a = psi[i0]
                    b = psi[i1]
                    psi[i0] = c * a + 1j * (sn * b)
                    psi[i1] = 1j * (sn * a) + c * b
    for z in range(dim):
        psi[z] = psi[z] * phase_half[z]


def _step_grid(total_time: float, dt: float):
    """Per-step durations covering [0, T] in ceil(T/dt) steps."""
    n_steps = int(np.ceil(total_time / dt - 1e-12))
    dts = np.full(n_steps, dt)
    if n_steps:
        dts[-1] = total_time - (n_steps - 1) * dt
    return dts


def evolve(
    spectrum: SpectrumTable,
    schedule,
    config: EvolutionConfig,
    kind: str = "custom",
    record_traces: bool = False,
    hook=None,
) -> tuple[Statevector, RunRecord]:
    """Run a full evolution from the equal superposition state.

    Returns the final state together with a RunRecord holding E_Psi, P_gs
    and S_q.  With ``record_traces`` the record additionally carries
    (t, Gamma, E_Psi, P_gs, level histogram) samples every
    ``config.record_stride`` steps.  ``hook(t, gamma, state)`` is called at
    every sample point when given.
    """
    start = time.perf_counter()
    energies = spectrum.energies
    n_qubits = spectrum.n_vars
    state = equal_superposition(n_qubits)
    psi = state.amplitudes

    dts = _step_grid(config.total_time, config.dt)
    n_steps = dts.size
    stride = config.record_stride or max(1, n_steps // 200)

    starts = np.concatenate([[0.0], np.cumsum(dts)])
    midpoints = starts[:-1] + dts / 2.0
    gammas = np.asarray(schedule.gamma_many(midpoints), dtype=float)
    thetas = gammas * dts

    phase_full = np.exp(-1j * config.dt * energies)
    phase_half = np.exp(-1j * (config.dt / 2.0) * energies)

    samples = []

    def observe(t):
        gamma = float(schedule.gamma_many(np.array([min(t, config.total_time)]))[0])
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > NORM_ABORT:
            raise EvolutionAbort(
                f"norm drift {abs(nrm - 1.0):.3e} at t={t:.6g} "
                f"(dt={config.dt}, schedule={schedule.descriptor()})"
            )
        if hook is not None:
            hook(t, gamma, state)
        if record_traces:
            probs = np.abs(psi) ** 2
            samples.append(
                (
                    t,
                    gamma,
                    float(probs @ energies),
                    float(probs[spectrum.ground_states].sum()),
                    level_probabilities(state, spectrum, config.energy_bins),
                )
            )

    if record_traces or hook is not None:
        observe(0.0)

    done = 0
    while done < n_steps:
        seg_end = min(done + stride, n_steps)
        # the shortened final step gets its own exact phases
        if seg_end == n_steps and dts[-1] != config.dt and seg_end - done > 1:
            seg_end -= 1
        seg_dts = dts[done:seg_end]
        if seg_dts[0] != config.dt:
            ph_full = np.exp(-1j * seg_dts[0] * energies)
            ph_half = np.exp(-1j * (seg_dts[0] / 2.0) * energies)
        else:
            ph_full, ph_half = phase_full, phase_half
        th = thetas[done:seg_end]
        _segment_kernel(psi, ph_half, ph_full, np.cos(th), np.sin(th), n_qubits)
        done = seg_end
        if done == n_steps or done % stride == 0:
            observe(float(starts[done]))

    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > NORM_ABORT:
        raise EvolutionAbort(
            f"final norm drift {abs(nrm - 1.0):.3e} (dt={config.dt})"
        )

    probs = np.abs(psi) ** 2
    record = RunRecord(
        e_psi=float(probs @ energies),
        p_gs=float(probs[spectrum.ground_states].sum()),
        s_q=solution_quality(probs, spectrum, kind),
        schedule=schedule.descriptor(),
        wall_time=time.perf_counter() - start,
    )
    if record_traces and samples:
        record.trace_t = np.array([s[0] for s in samples])
        record.trace_gamma = np.array([s[1] for s in samples])
        record.trace_e_psi = np.array([s[2] for s in samples])
        record.trace_p_gs = np.array([s[3] for s in samples])
        record.trace_hist = np.array([s[4] for s in samples])
    return state, record


# ---------------------------------------------------------------------------
# Instantaneous spectra
# ---------------------------------------------------------------------------


def _hamiltonian_sparse(energies: np.ndarray, gamma: float):
    from scipy import sparse

    dim = energies.size
    n_qubits = int(np.log2(dim))
    idx = np.arange(dim)
    rows = [idx]
    cols = [idx]
    vals = [energies]
    for j in range(n_qubits):
        rows.append(idx)
        cols.append(idx ^ (1 << j))
        vals.append(np.full(dim, -gamma))
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )


def instantaneous_spectrum(
    energies: np.ndarray,
    gamma: float,
    k: int | None = None,
    return_vectors: bool = False,
):
    """Lowest eigenvalues of Gamma * H_D + H_C, ascending.

    Dense diagonalization up to N = 14; iterative (Lanczos) low-end
    eigenvalues up to N = 20.
    """
    dim = energies.size
    n_qubits = int(np.log2(dim))
    if k is None or k >= dim - 1:
        if n_qubits > 14:
            raise ValueError("dense spectra are capped at N = 14")
        h = _hamiltonian_sparse(energies, gamma).toarray()
        if return_vectors:
            vals, vecs = np.linalg.eigh(h)
            return vals, vecs
        return np.linalg.eigvalsh(h)
    if n_qubits > 20:
        raise ValueError("iterative spectra are capped at N = 20")
    from scipy.sparse.linalg import eigsh

    h = _hamiltonian_sparse(energies, gamma)
    vals, vecs = eigsh(h, k=k, which="SA")
    order = np.argsort(vals)
    if return_vectors:
        return vals[order], vecs[:, order]
    return vals[order]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_statevector(state: Statevector, path) -> None:
    """Binary dump: 16-byte header (magic, u32 N, u32 reserved) + amplitudes."""
    with open(path, "wb") as fh:
        fh.write(STATE_MAGIC)
        fh.write(struct.pack("<II", state.n_qubits, 0))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_statevector(path) -> Statevector:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != STATE_MAGIC:
            raise ValueError("not a statevector dump")
        n_qubits, _ = struct.unpack("<II", fh.read(8))
        amps = np.frombuffer(fh.read(), dtype="<c16").astype(complex)
    if amps.size != 1 << n_qubits:
        raise ValueError("truncated statevector dump")
    return Statevector(n_qubits, amps)


def write_trace_csv(record: RunRecord, path) -> None:
    """Trace CSV: t, gamma, energy_expectation, p_gs, bin_0 ... bin_{B-1}."""
    if record.trace_t is None:
        raise ValueError("run record carries no traces")
    bins = record.trace_hist.shape[1]
    with open(path, "w") as fh:
        header = ["t", "gamma", "energy_expectation", "p_gs"]
        header += [f"bin_{b}" for b in range(bins)]
        fh.write(",".join(header) + "\n")
        for i in range(record.trace_t.size):
            row = [
                f"{record.trace_t[i]:.12g}",
                f"{record.trace_gamma[i]:.12g}",
                f"{record.trace_e_psi[i]:.12g}",
                f"{record.trace_p_gs[i]:.12g}",
            ]
            row += [f"{v:.12g}" for v in record.trace_hist[i]]
            fh.write(",".join(row) + "\n")
