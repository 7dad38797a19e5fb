import numpy as np
import pytest
from scipy.optimize import linprog

from robust_dude.lp import Infeasible, SolverFailure, Unbounded, simplex, solve_min_max_simplex


def test_textbook_lp():
    # max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), value 36
    a = [[1, 0, 1, 0, 0], [0, 2, 0, 1, 0], [3, 2, 0, 0, 1]]
    res = simplex([-3, -5, 0, 0, 0], a, [4, 12, 18])
    assert res.value == pytest.approx(-36)
    assert res.x[:2] == pytest.approx([2, 6])


def test_infeasible_and_unbounded():
    with pytest.raises(Infeasible):
        simplex([1, 1], [[1, 1], [1, 1]], [1, 2])
    with pytest.raises(Unbounded):
        simplex([-1, 0], [[1, -1]], [0])


def test_redundant_rows():
    res = simplex([1, 2], [[1, 1], [2, 2]], [1, 2])
    assert res.value == pytest.approx(1)


def test_iteration_cap():
    with pytest.raises(SolverFailure):
        simplex([-3, -5, 0, 0, 0], [[1, 0, 1, 0, 0], [0, 2, 0, 1, 0], [3, 2, 0, 0, 1]], [4, 12, 18], max_iter=1)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [-0.75, 150, -0.02, 6, 0, 0, 0]
    a = [
        [0.25, -60, -0.04, 9, 1, 0, 0],
        [0.5, -90, -0.02, 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    res = simplex(c, a, [0, 0, 1])
    assert res.value == pytest.approx(-0.05)


def test_min_max_matches_highs(rng):
    for _ in range(30):
        n_ch, n_win, m = int(rng.integers(1, 4)), int(rng.integers(1, 10)), int(rng.integers(2, 4))
        costs = rng.uniform(0, 1, size=(n_ch, n_win, m))
        f, value, _ = solve_min_max_simplex(costs)
        assert np.allclose(f.sum(axis=1), 1)
        nf = n_win * m
        a_ub = np.hstack([costs.reshape(n_ch, -1), -np.ones((n_ch, 1))])
        a_eq = np.zeros((n_win, nf + 1))
        for w in range(n_win):
            a_eq[w, w * m : (w + 1) * m] = 1
        c = np.zeros(nf + 1)
        c[-1] = 1
        ref = linprog(c, A_ub=a_ub, b_ub=np.zeros(n_ch), A_eq=a_eq, b_eq=np.ones(n_win), method="highs")
        assert value == pytest.approx(ref.fun, abs=1e-9)
