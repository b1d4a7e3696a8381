"""QUBO problem construction, generation, rescaling, and exhaustive analysis.

Supports three problem families: exact cover (EC), traveling salesperson
(TSP) with a fixed starting location, and garden optimization (GO), plus
custom coefficient matrices.  Energies are stored in dimensionless units;
instances are typically rescaled so the ground state sits at 0 and the
maximum at 100.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuboProblem",
    "IsingForm",
    "SpectrumTable",
    "ProblemError",
    "build_exact_cover",
    "build_tsp",
    "build_garden",
    "build_custom",
    "ising_from_qubo",
    "rescale",
    "enumerate_spectrum",
    "generate_instance",
    "qubo_energies",
    "penalty_energies",
    "count_exact_covers",
    "save_instance",
    "load_instance",
    "write_spectrum_csv",
]

ENUMERATION_CAP = 26
VALIDITY_TOL = 1e-9


class ProblemError(ValueError):
    """Raised for malformed problem definitions or unsupported sizes."""


@dataclass(eq=False)
class QuboProblem:
    """A QUBO instance: minimize z^T Q z + offset over binary strings z.

    The coefficient matrix is upper triangular; the diagonal holds the
    linear terms (z_i^2 = z_i).  ``validity_meta`` carries the
    family-specific data needed to classify bitstrings as valid, and
    ``scale_record`` the cumulative affine rescaling (shift, factor)
    applied to the raw cost function, i.e. C' = factor * (C - shift).
    """

    n_vars: int
    coeffs: np.ndarray
    offset: float
    kind: str = "custom"
    validity_meta: dict = field(default_factory=dict)
    scale_record: tuple[float, float] | None = None
    seed: int | None = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.n_vars, self.n_vars):
            raise ProblemError(
                f"coefficient matrix shape {self.coeffs.shape} does not match "
                f"n_vars={self.n_vars}"
            )
        if np.any(np.tril(self.coeffs, -1) != 0.0):
            raise ProblemError("coefficient matrix must be upper triangular")

    def energy(self, z: np.ndarray) -> float:
        """Cost of a single binary assignment vector."""
        z = np.asarray(z, dtype=float)
        return float(z @ self.coeffs @ z) + self.offset


@dataclass(eq=False)
class IsingForm:
    """Spin-variable form: E(s) = -sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset.

    Exactly equivalent to the source QUBO under s_i = 1 - 2 z_i.
    """

    h: np.ndarray
    J: np.ndarray
    offset: float

    def energy(self, s: np.ndarray) -> float:
        s = np.asarray(s, dtype=float)
        return float(-self.h @ s + s @ np.triu(self.J, 1) @ s) + self.offset


@dataclass(eq=False)
class SpectrumTable:
    """Brute-force spectrum of a QUBO instance over all 2^N bitstrings.

    Bit j of the array index is variable j.  Built for benchmarking only;
    never persisted (always recomputed from the coefficients).
    """

    n_vars: int
    energies: np.ndarray
    valid: np.ndarray
    ground_states: np.ndarray
    e_min: float
    e_max: float
    e_max_valid: float

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(self.valid))


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_exact_cover(A: np.ndarray) -> QuboProblem:
    """QUBO for the exact cover problem defined by boolean matrix A (N x P).

    Rows are candidate subsets, columns are elements.  The cost is
    sum_k (sum_i A_ik z_i - 1)^2, expanded to Q_ii = sum_k A_ik (A_ik - 2),
    Q_ij = 2 sum_k A_ik A_jk for i < j, with global offset P.
    """
    A = np.asarray(A, dtype=int)
    if A.ndim != 2 or A.size == 0:
        raise ProblemError("exact cover matrix must be a nonempty 2-D array")
    n, p = A.shape
    coeffs = 2.0 * np.triu(A @ A.T, 1)
    coeffs[np.diag_indices(n)] = np.sum(A * (A - 2), axis=1)
    meta = {"A": A.tolist()}
    uncovered = np.flatnonzero(A.sum(axis=0) == 0)
    if uncovered.size:
        # no cover can exist; still constructible
        meta["uncovered_columns"] = uncovered.tolist()
    return QuboProblem(n, coeffs, float(p), kind="exact_cover", validity_meta=meta)


def _tsp_full_terms(costs: np.ndarray, lam: float):
    """Yield (i, j, weight) QUBO terms of the full M^2-variable TSP cost."""
    m = costs.shape[0]

    def var(k, t):
        return k * m + t

    # route costs: lam * c_kj z_{k,t} z_{j,t+1 mod M}
    for k in range(m):
        for j in range(m):
            if k == j:
                continue
            for t in range(m):
                yield var(k, t), var(j, (t + 1) % m), lam * costs[k, j]
    # one time slot per location, one location per time slot
    for k in range(m):
        for t in range(m):
            yield var(k, t), var(k, t), -1.0
            yield var(t, k), var(t, k), -1.0
            for t2 in range(t + 1, m):
                yield var(k, t), var(k, t2), 2.0
                yield var(t, k), var(t2, k), 2.0


def _accumulate(n: int, terms) -> tuple[np.ndarray, float]:
    """Fold (i, j, w) terms into an upper-triangular matrix."""
    q = np.zeros((n, n))
    for i, j, w in terms:
        if i <= j:
            q[i, j] += w
        else:
            q[j, i] += w
    return q


def _fix_variables(q: np.ndarray, offset: float, fixed: dict[int, int]):
    """Substitute fixed binary values into a QUBO, returning the reduced form."""
    n = q.shape[0]
    free = [i for i in range(n) if i not in fixed]
    sym = q + q.T - np.diag(np.diag(q))
    x = np.zeros(n)
    for i, v in fixed.items():
        x[i] = v
    offset = offset + float(x @ q @ x)
    lin = sym @ x  # cross contributions of fixed ones into free variables
    out = np.zeros((len(free), len(free)))
    for a, i in enumerate(free):
        out[a, a] = q[i, i] + lin[i]
        for b in range(a + 1, len(free)):
            j = free[b]
            out[a, b] = q[i, j] + q[j, i]
    return out, offset, free


def build_tsp(costs: np.ndarray, lam: float) -> QuboProblem:
    """QUBO for the traveling salesperson problem with a fixed start.

    ``costs`` is the M x M travel cost matrix (diagonal ignored) and
    ``lam`` scales the route cost against the unit permutation penalties.
    Location 0 is pinned to time step 0, leaving (M-1)^2 variables.
    Valid states are exactly the tours.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise ProblemError("cost matrix must be square")
    m = costs.shape[0]
    if m < 3:
        raise ProblemError("TSP needs at least 3 locations")
    if lam <= 0:
        raise ProblemError("lambda must be positive")
    q = _accumulate(m * m, _tsp_full_terms(costs, lam))
    offset = 2.0 * m  # constants of the two squared-constraint groups
    fixed = {0: 1}
    for t in range(1, m):
        fixed[t] = 0  # location 0 at time t
        fixed[t * m] = 0  # location t at time 0
    coeffs, offset, _ = _fix_variables(q, offset, fixed)
    n = (m - 1) ** 2
    meta = {"M": m, "lambda": lam, "costs": costs.tolist()}
    return QuboProblem(n, coeffs, offset, kind="tsp", validity_meta=meta)


def build_garden(
    J: np.ndarray,
    A: np.ndarray,
    c: np.ndarray,
    lam1: float,
    lam2: float,
) -> QuboProblem:
    """QUBO for the garden optimization problem.

    ``J`` is the M x M pot adjacency, ``A`` the P x P companion matrix in
    {-1, 0, 1}, and ``c`` the plant count per species (summing to M).
    Variable k*P + j places a plant of species j in pot k.  Valid states
    have exactly one plant per pot and the requested count per species.
    """
    J = np.asarray(J, dtype=float)
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=int)
    m = J.shape[0]
    p = A.shape[0]
    if not np.allclose(J, J.T) or np.any(np.diag(J) != 0):
        raise ProblemError("pot adjacency must be symmetric with zero diagonal")
    if not np.allclose(A, A.T):
        raise ProblemError("companion matrix must be symmetric")
    if c.sum() != m:
        raise ProblemError("species counts must sum to the number of pots")
    n = m * p

    def terms():
        for k in range(m):
            for k2 in range(m):
                if J[k, k2] == 0:
                    continue
                for j in range(p):
                    for j2 in range(p):
                        if A[j, j2] != 0:
                            yield k * p + j, k2 * p + j2, J[k, k2] * A[j, j2]
        for k in range(m):  # lam1 * (1 - sum_j z_kj)^2
            for j in range(p):
                yield k * p + j, k * p + j, -lam1
                for j2 in range(j + 1, p):
                    yield k * p + j, k * p + j2, 2.0 * lam1
        for j in range(p):  # lam2 * (c_j - sum_k z_kj)^2
            for k in range(m):
                yield k * p + j, k * p + j, lam2 * (1.0 - 2.0 * c[j])
                for k2 in range(k + 1, m):
                    yield k * p + j, k2 * p + j, 2.0 * lam2

    coeffs = _accumulate(n, terms())
    offset = float(J.sum()) + lam1 * m + lam2 * float(np.sum(c**2))
    meta = {
        "M": m,
        "P": p,
        "J": J.tolist(),
        "A": A.tolist(),
        "c": c.tolist(),
        "lambda1": lam1,
        "lambda2": lam2,
    }
    return QuboProblem(n, coeffs, offset, kind="garden", validity_meta=meta)


def build_custom(coeffs: np.ndarray, offset: float = 0.0) -> QuboProblem:
    """Wrap a raw upper-triangular coefficient matrix; all states are valid."""
    coeffs = np.asarray(coeffs, dtype=float)
    return QuboProblem(coeffs.shape[0], coeffs, float(offset), kind="custom")


# ---------------------------------------------------------------------------
# Transformations
# ---------------------------------------------------------------------------


def ising_from_qubo(problem: QuboProblem) -> IsingForm:
    """Exact spin-variable equivalent under the substitution z_i = (1 - s_i)/2."""
    q = problem.coeffs
    n = problem.n_vars
    off_diag = np.triu(q, 1)
    h = np.diag(q) / 2.0 + (off_diag.sum(axis=1) + off_diag.sum(axis=0)) / 4.0
    J = off_diag / 4.0
    offset = problem.offset + np.diag(q).sum() / 2.0 + off_diag.sum() / 4.0
    return IsingForm(h=h, J=J, offset=float(offset))


def rescale(problem: QuboProblem, lo: float = 0.0, hi: float = 100.0) -> QuboProblem:
    """Affinely map the energy range onto [lo, hi] (extremes from enumeration)."""
    energies = qubo_energies(problem.coeffs, problem.offset)
    e_min = float(energies.min())
    e_max = float(energies.max())
    if e_max - e_min < 1e-12:
        raise ProblemError("flat spectrum: cannot rescale a constant cost function")
    factor = (hi - lo) / (e_max - e_min)
    shift = e_min - lo / factor
    coeffs = problem.coeffs * factor
    offset = lo + factor * (problem.offset - e_min)
    if problem.scale_record is None:
        record = (shift, factor)
    else:
        s0, f0 = problem.scale_record
        record = (s0 + shift / f0, f0 * factor)
    return QuboProblem(
        problem.n_vars,
        coeffs,
        float(offset),
        kind=problem.kind,
        validity_meta=problem.validity_meta,
        scale_record=record,
        seed=problem.seed,
    )


# ---------------------------------------------------------------------------
# Exhaustive analysis
# ---------------------------------------------------------------------------


def qubo_energies(coeffs: np.ndarray, offset: float) -> np.ndarray:
    """Energies of all 2^N bitstrings (bit j of the index is variable j).

    Built by doubling over variables, O(2^N) time and memory.
    """
    n = coeffs.shape[0]
    if n > ENUMERATION_CAP:
        raise ProblemError(
            f"N={n} exceeds the enumeration cap ({ENUMERATION_CAP}); "
            "use a streaming evaluation instead"
        )
    e = np.array([offset], dtype=float)
    for k in range(n):
        w = np.zeros(1)
        for j in range(k):
            w = np.concatenate([w, w + coeffs[j, k]])
        e = np.concatenate([e, e + coeffs[k, k] + w])
    return e


def _penalty_problem(problem: QuboProblem) -> QuboProblem | None:
    """The constraint-only part of a problem, built from its family metadata."""
    meta = problem.validity_meta
    if problem.kind == "exact_cover":
        return build_exact_cover(np.array(meta["A"]))
    if problem.kind == "tsp":
        # unit route costs scaled to zero leave only the permutation penalties
        m = meta["M"]
        q = _accumulate(m * m, _tsp_full_terms(np.zeros((m, m)), 1.0))
        fixed = {0: 1}
        for t in range(1, m):
            fixed[t] = 0
            fixed[t * m] = 0
        coeffs, offset, _ = _fix_variables(q, 2.0 * m, fixed)
        return QuboProblem((m - 1) ** 2, coeffs, offset, kind="custom")
    if problem.kind == "garden":
        return build_garden(
            np.zeros((meta["M"], meta["M"])),
            np.zeros((meta["P"], meta["P"])),
            np.array(meta["c"]),
            meta["lambda1"],
            meta["lambda2"],
        )
    return None


def penalty_energies(problem: QuboProblem) -> np.ndarray | None:
    """Constraint-term energies per bitstring; None when every state is valid."""
    penalty = _penalty_problem(problem)
    if penalty is None:
        return None
    return qubo_energies(penalty.coeffs, penalty.offset)


def enumerate_spectrum(problem: QuboProblem) -> SpectrumTable:
    """Brute-force spectrum with validity flags and the ground-state set."""
    energies = qubo_energies(problem.coeffs, problem.offset)
    e_min = float(energies.min())
    e_max = float(energies.max())
    tol = VALIDITY_TOL * max(1.0, abs(e_min), abs(e_max))
    if e_max - e_min < tol:
        warnings.warn("flat spectrum: all states are ground states", stacklevel=2)
    pen = penalty_energies(problem)
    if pen is None:
        valid = np.ones(energies.shape, dtype=bool)
    else:
        valid = np.abs(pen) <= tol
    ground = np.flatnonzero(energies <= e_min + tol)
    e_max_valid = float(energies[valid].max()) if valid.any() else float("nan")
    return SpectrumTable(
        n_vars=problem.n_vars,
        energies=energies,
        valid=valid,
        ground_states=ground,
        e_min=e_min,
        e_max=e_max,
        e_max_valid=e_max_valid,
    )


def count_exact_covers(A: np.ndarray, limit: int = 2) -> int:
    """Count exact covers of the set system A (rows = subsets), up to ``limit``.

    Depth-first search over the column with the fewest candidate rows;
    stops as soon as ``limit`` covers are found.  Empty subsets (all-zero
    rows) are ignored: they could join any cover without changing it.
    """
    A = np.asarray(A, dtype=bool)
    n, p = A.shape
    col_rows = [np.flatnonzero(A[:, k]) for k in range(p)]
    count = 0

    def search(covered: np.ndarray, banned: np.ndarray):
        nonlocal count
        if count >= limit:
            return
        open_cols = np.flatnonzero(~covered)
        if open_cols.size == 0:
            count += 1
            return
        best = min(
            open_cols, key=lambda k: np.count_nonzero(~banned[col_rows[k]])
        )
        for r in col_rows[best]:
            if banned[r]:
                continue
            new_cov = covered | A[r]
            new_ban = banned | A[:, A[r]].any(axis=1)
            search(new_cov, new_ban)
            if count >= limit:
                return

    search(np.zeros(p, dtype=bool), np.zeros(n, dtype=bool))
    return count


# ---------------------------------------------------------------------------
# Random instance generation
# ---------------------------------------------------------------------------

EC_SIZES = {12, 15, 18, 21, 24, 30}
TSP_SIZES = {4: 9, 5: 16, 6: 25}
REJECTION_BUDGET = 2000


def _generate_exact_cover(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random EC matrix with a planted, unique exact cover (rejection sampled)."""
    p = n
    n_cover = max(2, n // 4)
    for _ in range(REJECTION_BUDGET):
        assignment = rng.integers(0, n_cover, size=p)
        planted = np.zeros((n_cover, p), dtype=int)
        planted[assignment, np.arange(p)] = 1
        if np.any(planted.sum(axis=1) == 0):
            continue
        extra = (rng.random((n - n_cover, p)) < 0.25).astype(int)
        A = np.vstack([planted, extra])
        A = A[rng.permutation(n)]
        if np.any(A.sum(axis=1) == 0):
            continue
        if count_exact_covers(A, limit=2) == 1:
            return A
    raise ProblemError("rejection budget exhausted while generating EC instance")


def generate_instance(
    kind: str,
    *,
    n: int | None = None,
    m: int | None = None,
    p: int = 3,
    seed: int = 0,
    rescaled: bool = True,
) -> QuboProblem:
    """Seeded random instance of one of the three problem families.

    EC: ``n`` subsets over ``n`` elements with a unique planted cover.
    TSP: ``m`` locations (N = (m-1)^2), costs uniform in [1, 10].
    GO: ``n`` = M * P variables, pots on a grid with 4-neighbor adjacency.
    Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    if kind == "exact_cover":
        if n is None or n < 2 or n > 30:
            raise ProblemError(f"unsupported EC size n={n}")
        problem = build_exact_cover(_generate_exact_cover(n, rng))
    elif kind == "tsp":
        if m is None and n is not None:
            matches = [mm for mm, nn in TSP_SIZES.items() if nn == n]
            if not matches:
                raise ProblemError(f"unsupported TSP size n={n}")
            m = matches[0]
        if m is None or m < 3 or m > 6:
            raise ProblemError(f"unsupported TSP size m={m}")
        costs = rng.uniform(1.0, 10.0, size=(m, m))
        np.fill_diagonal(costs, 0.0)
        # keep the costliest tour below the unit constraint penalty
        lam = 0.99 / (m * costs.max())
        problem = build_tsp(costs, lam)
    elif kind == "garden":
        if n is None or n % p != 0:
            raise ProblemError(f"unsupported GO size n={n} (needs n divisible by {p})")
        m = n // p
        if m < 2 or n > 30:
            raise ProblemError(f"unsupported GO size n={n}")
        width = int(np.ceil(np.sqrt(m)))
        J = np.zeros((m, m))
        for k in range(m):
            for k2 in range(k + 1, m):
                r1, c1 = divmod(k, width)
                r2, c2 = divmod(k2, width)
                if abs(r1 - r2) + abs(c1 - c2) == 1:
                    J[k, k2] = J[k2, k] = 1.0
        A = rng.integers(-1, 2, size=(p, p))
        A = np.triu(A) + np.triu(A, 1).T
        c = np.full(p, m // p)
        c[: m % p] += 1
        lam = 2.0 * float(np.abs(A).max()) + 1.0
        problem = build_garden(J, A, c, lam, lam)
    else:
        raise ProblemError(f"unknown problem kind {kind!r}")
    problem.seed = seed
    if rescaled:
        problem = rescale(problem)
    return problem


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def instance_to_dict(problem: QuboProblem) -> dict:
    i, j = np.nonzero(problem.coeffs)
    entries = [[int(a), int(b), float(problem.coeffs[a, b])] for a, b in zip(i, j)]
    return {
        "kind": problem.kind,
        "n_vars": problem.n_vars,
        "offset": problem.offset,
        "entries": entries,
        "validity_meta": problem.validity_meta,
        "scale_record": list(problem.scale_record) if problem.scale_record else None,
        "seed": problem.seed,
    }


def instance_from_dict(data: dict) -> QuboProblem:
    n = data["n_vars"]
    coeffs = np.zeros((n, n))
    for i, j, q in data["entries"]:
        coeffs[i, j] = q
    record = data.get("scale_record")
    return QuboProblem(
        n,
        coeffs,
        float(data["offset"]),
        kind=data["kind"],
        validity_meta=data.get("validity_meta", {}),
        scale_record=tuple(record) if record else None,
        seed=data.get("seed"),
    )


def save_instance(problem: QuboProblem, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(problem), fh, indent=1, sort_keys=True)


def load_instance(path) -> QuboProblem:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def write_spectrum_csv(table: SpectrumTable, path) -> None:
    with open(path, "w") as fh:
        fh.write("bitstring_index,energy,valid\n")
        for idx in range(table.energies.size):
            fh.write(
                f"{idx},{table.energies[idx]:.12g},{int(table.valid[idx])}\n"
            )
