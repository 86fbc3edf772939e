import numpy as np
import pytest

from cardtrack.encoding import build_scheme, decode_units
from cardtrack.errors import ProblemTooLargeError
from cardtrack.objectives import ObjectiveConfig, build_tracking, tracking_terms
from cardtrack.qubo import QuboModel, energies
from cardtrack.solver import (
    AnnealConfig,
    Solution,
    filter_rank,
    initial_temperature,
    solve_exhaustive,
    solve_sa,
)

from helpers import portfolio_brute_force, random_index_panel, term_weights


def _all_assignments(M):
    codes = np.arange(1 << M)
    # variable 0 is the most significant bit: row order is lexicographic
    return ((codes[:, None] >> np.arange(M - 1, -1, -1)) & 1).astype(np.int8)


def _enumerated_minimum(model):
    A = _all_assignments(model.n_vars)
    e = energies(model, A)
    return A[int(np.argmin(e))], float(e.min())


def _random_model(M, seed):
    rng = np.random.default_rng(seed)
    return QuboModel(rng.normal(size=M), np.triu(rng.normal(size=(M, M)), k=1), rng.normal())


def test_exhaustive_single_variable():
    sol = solve_exhaustive(QuboModel.from_terms(1, {0: -1.0}))
    assert sol.assignment.tolist() == [1]
    assert sol.energy == -1.0


def test_exhaustive_two_variables():
    sol = solve_exhaustive(QuboModel.from_terms(2, {0: 1.0, 1: 1.0}, {(0, 1): -3.0}))
    assert sol.assignment.tolist() == [1, 1]
    assert sol.energy == -1.0


@pytest.mark.parametrize("seed", range(10))
def test_exhaustive_matches_enumeration(seed):
    model = _random_model(10, seed)
    a, e = _enumerated_minimum(model)
    sol = solve_exhaustive(model)
    assert sol.energy == pytest.approx(e, abs=1e-12)
    assert sol.assignment.tolist() == a.tolist()


def test_exhaustive_tie_goes_to_lexicographically_smallest():
    # every single-variable assignment has energy -1; (0,...,0,1) is smallest
    M = 4
    J = np.triu(np.full((M, M), 5.0), k=1)
    sol = solve_exhaustive(QuboModel(np.full(M, -1.0), J))
    assert sol.assignment.tolist() == [0, 0, 0, 1]


def test_exhaustive_all_tied_falls_back_to_zero_vector():
    sol = solve_exhaustive(QuboModel.zeros(15))
    assert not sol.assignment.any()


def test_exhaustive_size_limit():
    with pytest.raises(ProblemTooLargeError):
        solve_exhaustive(QuboModel.zeros(25))


def test_exhaustive_on_tracking_matches_portfolio_brute_force():
    panel = random_index_panel(3, n_periods=40, seed=1)
    scheme = build_scheme(3, 2, 1.0, 3)
    cfg = ObjectiveConfig(auto_scale=True)
    weights = term_weights(tracking_terms(panel, scheme, cfg))
    best, portfolios = portfolio_brute_force(panel, scheme, weights)
    sol = solve_exhaustive(build_tracking(panel, scheme, cfg), scheme)
    assert sol.energy == pytest.approx(best, abs=1e-9)
    units, z = decode_units(sol.assignment, scheme)
    assert (tuple(units), tuple(z)) in portfolios


def test_solution_energy_is_recomputed():
    model = _random_model(6, 3)
    a = np.array([1, 0, 1, 1, 0, 0])
    assert Solution.build(model, a).energy == model.energy(a)


def test_anneal_config_validation():
    with pytest.raises(ValueError):
        AnnealConfig(n_samples=0)
    with pytest.raises(ValueError):
        AnnealConfig(sweeps=0)
    with pytest.raises(ValueError):
        AnnealConfig(t_hot=1.0, t_cold=2.0)
    with pytest.raises(ValueError):
        AnnealConfig(seed=-1)
    with pytest.raises(ValueError):
        AnnealConfig(seed=1 << 64)
    AnnealConfig(seed=(1 << 64) - 1)


def test_sa_single_variable_always_optimal():
    model = QuboModel.from_terms(1, {0: -2.0})
    for s in solve_sa(model, AnnealConfig(n_samples=5, sweeps=50, seed=9)):
        assert s.assignment.tolist() == [1]


def test_sa_is_deterministic():
    model = _random_model(30, 4)
    cfg = AnnealConfig(n_samples=6, sweeps=300, seed=123)
    a = solve_sa(model, cfg)
    b = solve_sa(model, cfg)
    assert [s.assignment.tobytes() for s in a] == [s.assignment.tobytes() for s in b]
    assert [s.energy for s in a] == [s.energy for s in b]


def test_sa_sorted_and_seeded_per_sample():
    model = _random_model(12, 5)
    samples = solve_sa(model, AnnealConfig(n_samples=8, sweeps=200, seed=77))
    assert [s.energy for s in samples] == sorted(s.energy for s in samples)
    assert sorted(s.sample_index for s in samples) == list(range(8))
    for s in samples:
        assert s.seed_used == 77 ^ s.sample_index
        assert s.energy == model.energy(s.assignment)


def test_sa_sample_independent_of_sample_count():
    # sample k depends only on seed ^ k, not on how many samples ran
    model = _random_model(12, 6)
    cfg = dict(sweeps=200, seed=5, t_hot=3.0, t_cold=0.01)
    few = {s.sample_index: s for s in solve_sa(model, AnnealConfig(n_samples=3, **cfg))}
    many = {s.sample_index: s for s in solve_sa(model, AnnealConfig(n_samples=7, **cfg))}
    for k in few:
        assert few[k].assignment.tolist() == many[k].assignment.tolist()


def test_sa_on_small_tracking_models_is_feasible_and_never_below_optimum():
    # Penalty barriers trap single-flip annealing in whichever feasible
    # portfolio it freezes into, so per-sample optimality is low; feasibility
    # and the best-of-20 sample are what the default schedule delivers.
    reached = 0
    for seed in range(10):
        panel = random_index_panel(4, n_periods=40, seed=seed)
        scheme = build_scheme(5, 2, 0.6, 4)
        model = build_tracking(panel, scheme, ObjectiveConfig(auto_scale=True))
        assert model.n_vars <= 20
        exact = solve_exhaustive(model, scheme).energy
        samples = solve_sa(model, AnnealConfig(n_samples=20, sweeps=2000, seed=0), scheme)
        assert filter_rank(samples, scheme).success_rate >= 0.95
        assert samples[0].energy >= exact - 1e-12
        reached += abs(samples[0].energy - exact) <= 1e-12
    assert reached >= 7


def test_sa_oracle_agreement_on_random_models():
    agree = 0
    for seed in range(50):
        M = 8 + seed % 9
        model = _random_model(M, 1000 + seed)
        exact = solve_exhaustive(model).energy
        best = solve_sa(model, AnnealConfig(n_samples=20, seed=seed))[0].energy
        agree += abs(best - exact) <= 1e-9 * max(1.0, abs(exact))
    assert agree / 50 >= 0.95


def test_initial_temperature_is_max_flip_delta():
    model = _random_model(7, 8)
    rng = np.random.default_rng(0)
    t = initial_temperature(model, np.random.default_rng(0))
    state = rng.integers(0, 2, 7)
    deltas = []
    for i in range(7):
        flipped = state.copy()
        flipped[i] ^= 1
        deltas.append(abs(model.energy(flipped) - model.energy(state)))
    assert t == pytest.approx(max(deltas), rel=1e-12)


def _scheme_and_solutions(n_feasible, n_total):
    scheme = build_scheme(4, 2, 1.0, 3)
    reg = scheme.registry
    good = np.zeros(scheme.n_vars, dtype=np.int8)
    for i in (0, 1):
        good[reg.holding(i, 1)] = 1
        good[reg.indicator(i)] = 1
    bad = good.copy()
    bad[reg.indicator(2)] = 1
    model = QuboModel.zeros(scheme.n_vars)
    sols = [Solution.build(model, good if k < n_feasible else bad, scheme, sample_index=k)
            for k in range(n_total)]
    return scheme, sols


def test_filter_rank_all_feasible():
    scheme, sols = _scheme_and_solutions(5, 5)
    result = filter_rank(sols, scheme)
    assert result.success_rate == 1.0
    assert len(result.feasible) == 5


def test_filter_rank_none_feasible():
    scheme, sols = _scheme_and_solutions(0, 4)
    result = filter_rank(sols, scheme)
    assert result.success_rate == 0.0
    assert result.feasible == [] and result.best is None
    assert result.violation_counts() == {"cardinality": 4, "phantom-indicator": 4}


def test_filter_rank_fourteen_of_twenty():
    scheme, sols = _scheme_and_solutions(14, 20)
    result = filter_rank(sols, scheme)
    assert result.success_rate == 0.70
    assert f"{result.success_rate * 100:.0f}%" == "70%"
    assert len(result.infeasible) == 6


def test_filter_rank_decodes_bare_solutions():
    scheme, sols = _scheme_and_solutions(2, 3)
    bare = [Solution(s.assignment, s.energy, sample_index=s.sample_index) for s in sols]
    assert filter_rank(bare, scheme).success_rate == pytest.approx(2 / 3)
