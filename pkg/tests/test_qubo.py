import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cardtrack.encoding import build_scheme
from cardtrack.errors import ShapeError
from cardtrack.qubo import (
    PenaltyTerm,
    QuboModel,
    add_squared_linear,
    dump_model,
    energies,
    energy,
    load_model,
    merge,
    quadratic_form_model,
)


def random_model(M, seed):
    rng = np.random.default_rng(seed)
    return QuboModel(rng.normal(size=M), np.triu(rng.normal(size=(M, M)), k=1), rng.normal())


def random_assignments(M, n, seed):
    return np.random.default_rng(seed).integers(0, 2, size=(n, M))


def dense_energy(model, a):
    # independent oracle: full matrix Q with linear terms on the diagonal
    Q = model.quadratic.copy() + np.diag(model.linear)
    a = np.asarray(a, dtype=float)
    return float(a @ Q @ a + model.offset)


def test_all_zero_energy_is_offset():
    m = random_model(7, 0)
    assert energy(m, np.zeros(7)) == m.offset


def test_two_variable_example():
    m = QuboModel.from_terms(2, {0: 1.0, 1: 2.0}, {(0, 1): -3.0})
    assert energy(m, [1, 1]) == 0.0


def test_dense_matrix_oracle():
    m = random_model(10, 1)
    for a in random_assignments(10, 50, 2):
        assert energy(m, a) == pytest.approx(dense_energy(m, a), rel=1e-12, abs=1e-12)


def test_batch_energies_match_single():
    m = random_model(9, 3)
    A = random_assignments(9, 40, 4)
    np.testing.assert_allclose(energies(m, A), [energy(m, a) for a in A], rtol=1e-12)


def test_energy_shape_mismatch():
    with pytest.raises(ShapeError):
        energy(random_model(4, 0), np.zeros(5))


def test_symmetric_keys_canonicalise():
    a = QuboModel.from_terms(3, {}, {(0, 2): 1.5, (1, 2): -1.0})
    b = QuboModel.from_terms(3, {}, {(2, 0): 1.5, (2, 1): -1.0})
    assert a == b
    assert a.coupling(2, 0) == 1.5


def test_self_coupling_folds_into_linear():
    m = QuboModel.from_terms(2, {0: 1.0}, {(0, 0): 2.0})
    assert m.linear[0] == 3.0
    assert not m.quadratic.any()


def test_lower_triangle_rejected():
    with pytest.raises(ShapeError):
        QuboModel(np.zeros(2), np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_model_is_read_only():
    m = random_model(3, 0)
    with pytest.raises(ValueError):
        m.linear[0] = 5.0


def test_coupling_out_of_range():
    with pytest.raises(ShapeError):
        QuboModel.from_terms(2, {}, {(0, 2): 1.0})


def test_cardinality_square_satisfied():
    m = add_squared_linear(QuboModel.zeros(3), {0: 1, 1: 1, 2: 1}, 2.0)
    assert energy(m, [1, 1, 0]) == 0.0


def test_cardinality_square_empty_assignment():
    m = add_squared_linear(QuboModel.zeros(3), {0: 1, 1: 1, 2: 1}, 2.0)
    assert energy(m, [0, 0, 0]) == 4.0


def test_budget_square_on_encoding_is_zero_at_full_investment():
    s = build_scheme(4, 2, 1.0, 2)
    B = s.weight_matrix()
    m = add_squared_linear(QuboModel.zeros(s.n_vars), B.sum(axis=0), 1.0)
    # asset 0 holds 2 units (bit 1), asset 1 holds 2 units (bit 1)
    a = np.zeros(s.n_vars, dtype=int)
    a[s.registry.holding(0, 1)] = 1
    a[s.registry.holding(1, 1)] = 1
    assert energy(m, a) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0))
def test_squared_linear_matches_direct_square(seed, weight):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=6)
    b = float(rng.normal())
    m = add_squared_linear(QuboModel.zeros(6), c, b, weight)
    for a in random_assignments(6, 10, seed):
        assert energy(m, a) == pytest.approx(weight * (c @ a - b) ** 2, rel=1e-9, abs=1e-9)


def test_negative_penalty_weight_rejected():
    with pytest.raises(ValueError):
        add_squared_linear(QuboModel.zeros(2), [1, 1], 1.0, -1.0)


def test_merge_identity():
    m = random_model(6, 5)
    assert merge([(m, 1.0)]) == m


def test_merge_weight_zero_annihilates():
    a, b = random_model(6, 6), random_model(6, 7)
    merged = merge([(a, 0.0), (b, 1.0)])
    for x in random_assignments(6, 20, 8):
        assert energy(merged, x) == energy(b, x)


def test_merge_additivity():
    a, b = random_model(8, 9), random_model(8, 10)
    merged = merge([(a, 0.7), (b, 2.5)])
    for x in random_assignments(8, 100, 11):
        assert abs(energy(merged, x) - (0.7 * energy(a, x) + 2.5 * energy(b, x))) <= 1e-12


def test_merge_mismatched_sizes():
    with pytest.raises(ShapeError):
        merge([(random_model(3, 0), 1.0), (random_model(4, 0), 1.0)])


def test_merge_empty():
    with pytest.raises(ValueError):
        merge([])


def test_penalty_term_validation():
    with pytest.raises(ValueError):
        PenaltyTerm("gravity", 1.0, QuboModel.zeros(1))
    with pytest.raises(ValueError):
        PenaltyTerm("budget", -1.0, QuboModel.zeros(1))


def test_unit_scaled_form_matches_integer_arithmetic():
    # weights live on a 1/K grid, so K^2 * energy is an exact integer
    K = 31
    rng = np.random.default_rng(12)
    P = rng.integers(-50, 50, size=(6, 6))
    P = P + P.T
    m = quadratic_form_model(P / K**2)
    for a in random_assignments(6, 30, 13):
        exact = int(a @ P @ a)
        assert energy(m, a) * K**2 == pytest.approx(exact, rel=1e-9, abs=1e-9)


def test_dump_and_load_round_trip(tmp_path):
    m = random_model(7, 14)
    path = tmp_path / "model.qubo"
    dump_model(m, path)
    assert path.read_text().splitlines()[0].split()[0] == "7"
    assert load_model(path) == m


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.qubo"
    path.write_text("3\n")
    with pytest.raises(ValueError):
        load_model(path)
