"""QUBO builders, Ising equivalence, rescaling, enumeration, persistence."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gqwalk import problems


def bits(index: int, n: int) -> np.ndarray:
    """Bit j of the index is variable j."""
    return np.array([(index >> j) & 1 for j in range(n)])


# ---------------------------------------------------------------------------
# Direct cost-function oracles, written independently of the builders
# ---------------------------------------------------------------------------


def ec_cost(A: np.ndarray, z: np.ndarray) -> float:
    return float(sum((A[:, k] @ z - 1) ** 2 for k in range(A.shape[1])))


def tsp_cost(costs: np.ndarray, lam: float, z: np.ndarray) -> float:
    """Full-variable tour cost with location 0 pinned to time 0."""
    m = costs.shape[0]
    x = np.zeros((m, m))
    x[0, 0] = 1.0
    for k in range(1, m):
        for t in range(1, m):
            x[k, t] = z[(k - 1) * (m - 1) + (t - 1)]
    route = sum(
        lam * costs[k, j] * x[k, t] * x[j, (t + 1) % m]
        for k in range(m)
        for j in range(m)
        if k != j
        for t in range(m)
    )
    pens = sum((1.0 - x[k, :].sum()) ** 2 for k in range(m))
    pens += sum((1.0 - x[:, t].sum()) ** 2 for t in range(m))
    return float(route + pens)


def go_cost(J, A, c, lam1, lam2, z: np.ndarray) -> float:
    m, p = J.shape[0], A.shape[0]
    x = z.reshape(m, p)
    total = sum(
        J[k, k2] * (1.0 + x[k] @ A @ x[k2]) for k in range(m) for k2 in range(m)
    )
    total += lam1 * sum((1.0 - x[k].sum()) ** 2 for k in range(m))
    total += lam2 * sum((c[j] - x[:, j].sum()) ** 2 for j in range(p))
    return float(total)


# ---------------------------------------------------------------------------
# Builders against the oracles
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_exact_cover_matches_direct_cost(seed):
    rng = np.random.default_rng(seed)
    n, p = 6, 5
    A = (rng.random((n, p)) < 0.4).astype(int)
    problem = problems.build_exact_cover(A)
    assert problem.offset == p
    for idx in range(1 << n):
        z = bits(idx, n)
        assert problem.energy(z) == pytest.approx(ec_cost(A, z), abs=1e-12)


@pytest.mark.parametrize("m", [3, 4])
def test_tsp_matches_direct_cost(m):
    rng = np.random.default_rng(m)
    costs = rng.uniform(1.0, 10.0, size=(m, m))
    np.fill_diagonal(costs, 0.0)
    lam = 0.5 / costs.max()
    problem = problems.build_tsp(costs, lam)
    n = (m - 1) ** 2
    assert problem.n_vars == n
    for idx in range(1 << n):
        z = bits(idx, n)
        assert problem.energy(z) == pytest.approx(tsp_cost(costs, lam, z), abs=1e-10)


def test_tsp_valid_states_are_tours():
    m = 4
    rng = np.random.default_rng(7)
    costs = rng.uniform(1.0, 10.0, size=(m, m))
    np.fill_diagonal(costs, 0.0)
    lam = 0.9 / (m * costs.max())
    problem = problems.build_tsp(costs, lam)
    table = problems.enumerate_spectrum(problem)
    assert table.n_valid == math.factorial(m - 1)
    # each valid state's energy is lam times the length of some tour from 0
    import itertools

    tour_costs = set()
    for perm in itertools.permutations(range(1, m)):
        order = (0,) + perm
        length = sum(
            costs[order[t], order[(t + 1) % m]] for t in range(m)
        )
        tour_costs.add(round(lam * length, 9))
    got = {round(e, 9) for e in table.energies[table.valid]}
    assert got == tour_costs


def test_garden_matches_direct_cost():
    rng = np.random.default_rng(0)
    m, p = 4, 2
    J = np.zeros((m, m))
    J[0, 1] = J[1, 0] = 1.0
    J[2, 3] = J[3, 2] = 1.0
    A = rng.integers(-1, 2, size=(p, p))
    A = np.triu(A) + np.triu(A, 1).T
    c = np.array([2, 2])
    lam1 = lam2 = 3.0
    problem = problems.build_garden(J, A, c, lam1, lam2)
    n = m * p
    for idx in range(1 << n):
        z = bits(idx, n)
        assert problem.energy(z) == pytest.approx(
            go_cost(J, A, c, lam1, lam2, z), abs=1e-10
        )


def test_garden_valid_states():
    problem = problems.generate_instance("garden", n=8, p=2, seed=1, rescaled=False)
    table = problems.enumerate_spectrum(problem)
    meta = problem.validity_meta
    m, p = meta["M"], meta["P"]
    c = np.array(meta["c"])
    expected = 0
    for idx in range(1 << problem.n_vars):
        x = bits(idx, problem.n_vars).reshape(m, p)
        ok = np.all(x.sum(axis=1) == 1) and np.all(x.sum(axis=0) == c)
        expected += bool(ok)
        assert table.valid[idx] == ok
    assert table.n_valid == expected


# ---------------------------------------------------------------------------
# Enumeration and Ising form
# ---------------------------------------------------------------------------


@given(
    st.integers(min_value=1, max_value=7),
    st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=30, deadline=None)
def test_qubo_energies_match_naive_loop(n, seed):
    rng = np.random.default_rng(seed)
    coeffs = np.triu(rng.normal(size=(n, n)))
    offset = float(rng.normal())
    energies = problems.qubo_energies(coeffs, offset)
    for idx in range(1 << n):
        z = bits(idx, n)
        assert energies[idx] == pytest.approx(
            float(z @ coeffs @ z) + offset, abs=1e-9
        )


@given(
    st.integers(min_value=1, max_value=7),
    st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=30, deadline=None)
def test_ising_equivalent_to_qubo(n, seed):
    rng = np.random.default_rng(seed)
    coeffs = np.triu(rng.normal(size=(n, n)))
    problem = problems.build_custom(coeffs, offset=float(rng.normal()))
    ising = problems.ising_from_qubo(problem)
    for idx in range(1 << n):
        z = bits(idx, n)
        s = 1 - 2 * z
        assert ising.energy(s) == pytest.approx(problem.energy(z), abs=1e-9)


def test_enumeration_cap():
    with pytest.raises(problems.ProblemError):
        problems.qubo_energies(np.zeros((27, 27)), 0.0)


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_rescale_maps_to_target_range_and_preserves_order(seed):
    rng = np.random.default_rng(seed)
    n = 6
    coeffs = np.triu(rng.normal(scale=3.0, size=(n, n)))
    problem = problems.build_custom(coeffs, offset=float(rng.normal()))
    before = problems.qubo_energies(problem.coeffs, problem.offset)
    scaled = problems.rescale(problem)
    after = problems.qubo_energies(scaled.coeffs, scaled.offset)
    assert after.min() == pytest.approx(0.0, abs=1e-9)
    assert after.max() == pytest.approx(100.0, abs=1e-9)
    assert np.array_equal(np.argsort(before, kind="stable"),
                          np.argsort(after, kind="stable"))
    # the recorded affine map reproduces the rescaled energies
    shift, factor = scaled.scale_record
    assert np.allclose(factor * (before - shift), after, atol=1e-8)


def test_rescale_composes_cumulatively():
    rng = np.random.default_rng(3)
    coeffs = np.triu(rng.normal(size=(5, 5)))
    problem = problems.build_custom(coeffs, offset=1.0)
    raw = problems.qubo_energies(problem.coeffs, problem.offset)
    once = problems.rescale(problem)
    twice = problems.rescale(once, lo=0.0, hi=10.0)
    shift, factor = twice.scale_record
    after = problems.qubo_energies(twice.coeffs, twice.offset)
    assert np.allclose(factor * (raw - shift), after, atol=1e-8)


def test_rescale_rejects_flat_spectrum():
    problem = problems.build_custom(np.zeros((3, 3)), offset=5.0)
    with pytest.raises(problems.ProblemError):
        problems.rescale(problem)


# ---------------------------------------------------------------------------
# Generation and persistence
# ---------------------------------------------------------------------------


def test_generated_ec_has_unique_cover_and_is_deterministic():
    a = problems.generate_instance("exact_cover", n=8, seed=5)
    b = problems.generate_instance("exact_cover", n=8, seed=5)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert a.offset == b.offset
    A = np.array(a.validity_meta["A"])
    assert problems.count_exact_covers(A, limit=3) == 1
    table = problems.enumerate_spectrum(a)
    assert table.n_valid == 1
    assert table.energies[table.ground_states[0]] == pytest.approx(0.0, abs=1e-9)


def test_count_exact_covers_brute_force_agreement():
    rng = np.random.default_rng(9)
    for _ in range(20):
        A = (rng.random((5, 4)) < 0.5).astype(int)
        if np.any(A.sum(axis=1) == 0):
            continue  # empty subsets are outside the counter's contract
        expected = 0
        for idx in range(1 << 5):
            z = bits(idx, 5)
            if np.all(A.T @ z == 1):
                expected += 1
        assert problems.count_exact_covers(A, limit=64) == min(expected, 64)


def test_instance_round_trip(tmp_path):
    problem = problems.generate_instance("tsp", m=3, seed=2)
    path = tmp_path / "inst.json"
    problems.save_instance(problem, path)
    loaded = problems.load_instance(path)
    assert loaded.kind == problem.kind
    assert loaded.n_vars == problem.n_vars
    assert np.array_equal(loaded.coeffs, problem.coeffs)
    assert loaded.offset == problem.offset
    assert loaded.scale_record == problem.scale_record
    assert loaded.seed == problem.seed
    assert loaded.validity_meta == problem.validity_meta


def test_spectrum_csv_format(tmp_path):
    problem = problems.generate_instance("exact_cover", n=4, seed=0)
    table = problems.enumerate_spectrum(problem)
    path = tmp_path / "spec.csv"
    problems.write_spectrum_csv(table, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bitstring_index,energy,valid"
    assert len(lines) == 1 + (1 << 4)
    idx, energy, valid = lines[1 + 3].split(",")
    assert int(idx) == 3
    assert float(energy) == pytest.approx(table.energies[3], rel=1e-10)
    assert int(valid) == int(table.valid[3])


def test_upper_triangular_enforced():
    bad = np.ones((3, 3))
    with pytest.raises(problems.ProblemError):
        problems.QuboProblem(3, bad, 0.0)
