from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from smoothltf.lp import L1FitError, solve_l1


def highs_l1(A, y):
    """Reference objective from the textbook LP: min sum s, -s <= Ac - y <= s."""
    N, M = A.shape
    c = np.r_[np.zeros(M), np.ones(N)]
    A_ub = np.block([[A, -np.eye(N)], [-A, -np.eye(N)]])
    b_ub = np.r_[y, -y]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * M + [(0, None)] * N, method="highs")
    assert res.status == 0
    return res.fun


def vertex_l1(A, y):
    rank = np.linalg.matrix_rank(A)
    best = np.inf
    for rows in combinations(range(A.shape[0]), rank):
        As = A[list(rows)]
        if np.linalg.matrix_rank(As) == rank:
            c = np.linalg.lstsq(As, y[list(rows)], rcond=None)[0]
            best = min(best, np.abs(A @ c - y).sum())
    return best


class TestAgainstOracles:
    @pytest.mark.parametrize("seed", range(10))
    def test_highs(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.choice([-1.0, 1.0], size=(80, 8))
        y = rng.choice([-1.0, 1.0], size=80)
        fit = solve_l1(A, y)
        assert fit.objective == pytest.approx(highs_l1(A, y), abs=1e-6)
        assert fit.lower_bound <= fit.objective + 1e-9
        assert fit.gap <= 1e-6 * max(1.0, fit.objective)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 10_000))
    def test_vertex_enumeration(self, N, M, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((N, M))
        y = rng.standard_normal(N)
        fit = solve_l1(A, y)
        assert fit.objective == pytest.approx(vertex_l1(A, y), abs=1e-6)
        assert np.abs(A @ fit.coeffs - y).sum() == pytest.approx(fit.objective, abs=1e-9)


class TestProperties:
    @pytest.mark.parametrize("y", [[3.0], [1.0, 5.0, 2.0], [4.0, -1.0, 0.5, 2.0, 7.0], [1.0, 1.0, 2.0, 9.0]])
    def test_intercept_is_median(self, y):
        y = np.array(y)
        fit = solve_l1(np.ones((y.size, 1)), y)
        s = np.sort(y)
        assert s[(y.size - 1) // 2] <= fit.coeffs[0] <= s[y.size // 2]
        assert fit.objective == pytest.approx(np.abs(y - np.median(y)).sum())

    def test_realizable_labels_give_zero(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((30, 4))
        c = np.array([1.0, -2.0, 0.5, 0.0])
        fit = solve_l1(A, A @ c)
        assert fit.objective == pytest.approx(0.0, abs=1e-8)
        assert np.allclose(fit.coeffs, c, atol=1e-7)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(1)
        A = rng.choice([-1.0, 1.0], size=(40, 5))
        y = rng.choice([-1.0, 1.0], size=40)
        p = rng.permutation(40)
        assert solve_l1(A, y).objective == pytest.approx(solve_l1(A[p], y[p]).objective, abs=1e-7)

    def test_duplicated_columns(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((20, 3))
        A = np.hstack([A, A[:, :1]])
        y = rng.standard_normal(20)
        assert solve_l1(A, y).objective == pytest.approx(highs_l1(A, y), abs=1e-6)

    def test_duplicate_row_doubles_weight(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((10, 2))
        y = rng.standard_normal(10)
        A2, y2 = np.vstack([A, A[:1]]), np.r_[y, y[:1]]
        assert solve_l1(A2, y2).objective == pytest.approx(highs_l1(A2, y2), abs=1e-6)

    def test_unpolished_within_tolerance(self):
        rng = np.random.default_rng(4)
        A = rng.choice([-1.0, 1.0], size=(200, 10))
        y = rng.choice([-1.0, 1.0], size=200)
        fit = solve_l1(A, y, polish=False)
        assert not fit.polished
        assert fit.objective == pytest.approx(highs_l1(A, y), rel=1e-6)

    def test_iteration_cap_raises_with_incumbent(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((100, 6))
        y = rng.standard_normal(100)
        with pytest.raises(L1FitError) as info:
            solve_l1(A, y, max_iter=1, polish=False)
        assert info.value.best.lower_bound <= info.value.best.objective

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            solve_l1(np.ones((3, 1)), np.ones(4))
