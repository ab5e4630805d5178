import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjsr import (
    BudgetError,
    DimensionError,
    DomainError,
    EnumerationBudget,
    MatrixSet,
    NonNegMatrix,
    enumerate_products,
    gsr_lower,
    hadamard_mean_of_sets,
    jsr_upper,
    radius_bracket,
    set_power,
    set_product,
)

from conftest import masked_matrix, masked_set

SHIFTS = MatrixSet([[[0, 2], [0, 0]], [[0, 0], [2, 0]]])


def brute_lower(S, depth):
    """max over products of length <= depth of rho(P)^(1/len), via numpy eigvals."""
    best = 0.0
    mats = [m.entries for m in S]
    for d in range(1, depth + 1):
        for word in itertools.product(mats, repeat=d):
            P = np.linalg.multi_dot(word) if d > 1 else word[0]
            best = max(best, max(abs(np.linalg.eigvals(P))) ** (1.0 / d))
    return best


# --- construction and algebra -------------------------------------------------

def test_set_requires_members_and_common_dim():
    with pytest.raises(ValueError):
        MatrixSet([])
    with pytest.raises(DimensionError):
        MatrixSet([NonNegMatrix.ones(2), NonNegMatrix.ones(3)])


def test_set_power_examples():
    A = NonNegMatrix([[1, 2], [0, 1]])
    cube = set_power(MatrixSet([A]), 3)
    assert len(cube) == 1 and cube[0] == NonNegMatrix(np.linalg.matrix_power(A.entries, 3))
    S = MatrixSet([A, NonNegMatrix.identity(2)])
    assert len(set_power(S, 3)) == 8
    assert set_power(S, 1) == S
    with pytest.raises(DomainError):
        set_power(S, 0)


def test_set_power_lexicographic_order():
    A, B = NonNegMatrix([[1, 1], [0, 1]]), NonNegMatrix([[2, 0], [1, 0]])
    P = set_power(MatrixSet([A, B]), 2)
    expect = [a.entries @ b.entries for a, b in itertools.product([A, B], repeat=2)]
    assert all(np.array_equal(p.entries, e) for p, e in zip(P, expect))


def test_set_product_examples():
    A, B, C = (NonNegMatrix(np.full((2, 2), v)) for v in (1.0, 2.0, 3.0))
    assert set_product(MatrixSet([A]), MatrixSet([B]))[0] == NonNegMatrix(A.entries @ B.entries)
    AC_BC = set_product(MatrixSet([A, B]), MatrixSet([C]))
    assert [m.entries.tolist() for m in AC_BC] == [(A.entries @ C.entries).tolist(),
                                                   (B.entries @ C.entries).tolist()]
    rng = np.random.default_rng(0)
    assert len(set_product(masked_set(rng, 3, 2), masked_set(rng, 3, 3))) == 6
    with pytest.raises(DimensionError):
        set_product(masked_set(rng, 2, 1), masked_set(rng, 3, 1))


def test_hadamard_mean_of_sets_examples():
    A, B = NonNegMatrix([[4, 1], [0, 9]]), NonNegMatrix([[1, 4], [2, 1]])
    got = hadamard_mean_of_sets([MatrixSet([A]), MatrixSet([B])], (0.5, 0.5))
    assert got[0] == NonNegMatrix([[2, 2], [0, 3]])
    rng = np.random.default_rng(1)
    assert len(hadamard_mean_of_sets([masked_set(rng, 2, 2), masked_set(rng, 2, 3)], (0.5, 0.5))) == 6
    J = MatrixSet([NonNegMatrix.ones(3)])
    assert hadamard_mean_of_sets([J, J, J], (0.2, 0.3, 0.5)) == J
    with pytest.raises(DomainError):
        hadamard_mean_of_sets([J, J], (1.0, 1.0))


def test_budget_errors():
    S = masked_set(np.random.default_rng(0), 2, 3)
    with pytest.raises(BudgetError):
        set_power(S, 5, max_products=100)
    with pytest.raises(BudgetError):
        radius_bracket(S, EnumerationBudget(max_products=2))
    b = radius_bracket(S, EnumerationBudget(max_depth=8, max_products=200))
    assert b.truncated and not b.converged and b.products <= 200


# --- bounds ------------------------------------------------------------------

def test_two_shift_bounds():
    assert gsr_lower(SHIFTS, 2) == pytest.approx(2.0, rel=1e-15)
    assert gsr_lower(SHIFTS, 1) == 0.0
    assert jsr_upper(SHIFTS, 1) == 2.0
    b = radius_bracket(SHIFTS, EnumerationBudget(max_depth=2))
    assert (b.lower, b.upper) == (2.0, 2.0)


def test_identity_and_zero_sets():
    for m in (1, 3, 5):
        assert jsr_upper(MatrixSet([NonNegMatrix.identity(3)]), m) == 1.0
    b = radius_bracket(MatrixSet([NonNegMatrix.zeros(3)]))
    assert (b.lower, b.upper) == (0.0, 0.0)


def test_singleton_lower_is_radius():
    A = NonNegMatrix([[1, 2], [3, 4]])
    assert gsr_lower(MatrixSet([A]), 1) == pytest.approx((5 + 33 ** 0.5) / 2, rel=1e-12)


def test_jsr_upper_homogeneous():
    S = masked_set(np.random.default_rng(2), 3, 2)
    cS = MatrixSet([NonNegMatrix(2.5 * m.entries) for m in S])
    for m in (1, 2, 3):
        assert jsr_upper(cS, m) == pytest.approx(2.5 * jsr_upper(S, m), rel=1e-12)


def test_operator_norm_family_is_looser():
    S = masked_set(np.random.default_rng(4), 3, 3)
    for m in (1, 2):
        assert jsr_upper(S, m) <= jsr_upper(S, m, norms="operator")


def test_singleton_width_at_depth_eight():
    # frozen threshold: width <= 0.05 * upper for random positive 4x4 matrices
    rng = np.random.default_rng(8)
    for _ in range(50):
        A = NonNegMatrix(rng.random((4, 4)) + 1e-3)
        b = radius_bracket(MatrixSet([A]), EnumerationBudget(max_depth=8))
        assert b.width <= 0.05 * b.upper


def test_bracket_against_brute_force_oracle():
    rng = np.random.default_rng(11)
    for _ in range(40):
        S = masked_set(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
        depth = 4
        ref = brute_lower(S, depth)
        b = radius_bracket(S, EnumerationBudget(max_depth=depth))
        assert b.lower == pytest.approx(ref, rel=1e-9, abs=1e-12)
        assert ref <= b.upper * (1 + 1e-9)


def test_level_stats_and_words():
    res = enumerate_products(SHIFTS, EnumerationBudget(max_depth=3))
    assert [lv.products for lv in res.levels] == [2, 4, 8]
    assert res.bracket.lower_word in ((0, 1), (1, 0))


def test_pruning_is_noop_at_depth_one():
    S = masked_set(np.random.default_rng(5), 4, 2)
    ex = radius_bracket(S, EnumerationBudget(max_depth=1))
    pr = radius_bracket(S, EnumerationBudget(max_depth=1, prune=True))
    assert (ex.lower, ex.upper, ex.products) == (pr.lower, pr.upper, pr.products)


def test_pruned_matches_exhaustive_within_delta():
    rng = np.random.default_rng(6)
    for _ in range(30):
        S = masked_set(rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)))
        ex = radius_bracket(S, EnumerationBudget(max_depth=6))
        pr = radius_bracket(S, EnumerationBudget(max_depth=6, prune=True))
        assert abs(ex.lower - pr.lower) <= pr.delta
        assert abs(ex.upper - pr.upper) <= pr.delta
        assert pr.products <= ex.products


def test_workers_do_not_change_result():
    S = masked_set(np.random.default_rng(7), 4, 3)
    for prune in (False, True):
        runs = [radius_bracket(S, EnumerationBudget(max_depth=7, prune=prune, workers=w)) for w in (1, 2, 4)]
        assert all(r == runs[0] for r in runs)


def test_dedup_keeps_bracket():
    P = NonNegMatrix([[0, 1], [1, 0]])
    S = MatrixSet([P, P, NonNegMatrix([[0.5, 0.5], [0.5, 0.5]])])
    a = radius_bracket(S, EnumerationBudget(max_depth=5))
    b = radius_bracket(S, EnumerationBudget(max_depth=5, dedup=True))
    assert (a.lower, a.upper) == (b.lower, b.upper) and b.products < a.products


def test_extreme_scales_do_not_overflow():
    S = MatrixSet([NonNegMatrix([[1e150, 1e150], [0, 1e150]])])
    b = radius_bracket(S, EnumerationBudget(max_depth=6))
    assert b.lower == pytest.approx(1e150, rel=1e-9)
    assert np.isfinite(b.upper)


# --- properties --------------------------------------------------------------

@st.composite
def small_sets(draw, max_dim=3, max_size=3):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return masked_set(rng, draw(st.integers(1, max_dim)), draw(st.integers(1, max_size)))


@settings(max_examples=40, deadline=None)
@given(small_sets())
def test_lower_never_exceeds_upper(S):
    lows = [gsr_lower(S, m) for m in (1, 2, 3)]
    ups = [jsr_upper(S, m) for m in (1, 2, 3)]
    assert max(lows) <= min(ups) + 1e-9


@settings(max_examples=30, deadline=None)
@given(small_sets(max_size=2), st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))
def test_power_identity_brackets(S, k, j, m):
    Sk = set_power(S, k)
    assert gsr_lower(Sk, m) <= jsr_upper(S, j) ** k + 1e-9
    assert gsr_lower(S, j) ** k <= jsr_upper(Sk, m) + 1e-9


@settings(max_examples=30, deadline=None)
@given(small_sets(), st.integers(0, 2**32 - 1))
def test_commutation_brackets_overlap(P, seed):
    S = masked_set(np.random.default_rng(seed), P.dim, 2)
    budget = EnumerationBudget(max_depth=4)
    a = radius_bracket(set_product(P, S), budget)
    b = radius_bracket(set_product(S, P), budget)
    assert a.lower <= b.upper + 1e-9 and b.lower <= a.upper + 1e-9


@settings(max_examples=30, deadline=None)
@given(small_sets(), st.floats(0.01, 100))
def test_bracket_homogeneity(S, c):
    cS = MatrixSet([NonNegMatrix(c * m.entries) for m in S])
    budget = EnumerationBudget(max_depth=3)
    a, b = radius_bracket(S, budget), radius_bracket(cS, budget)
    assert b.lower == pytest.approx(c * a.lower, rel=1e-9, abs=1e-300)
    assert b.upper == pytest.approx(c * a.upper, rel=1e-9, abs=1e-300)
