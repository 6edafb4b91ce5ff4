from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from ontocert import lp


def scipy_max(c, A, b):
    res = linprog(-np.asarray(c, float), A_ub=np.asarray(A, float), b_ub=np.asarray(b, float),
                  bounds=[(0, None)] * len(c), method="highs")
    return res


class TestExactSimplex:
    def test_textbook_example(self):
        # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        sol = lp.maximize([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        assert sol.value == 36
        assert sol.x == (2, 6)
        sol.check([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])

    def test_fractional_optimum_is_exact(self):
        sol = lp.maximize([1, 1], [[3, 1], [1, 3]], [1, 1])
        assert sol.value == Fraction(1, 2)
        assert sol.x == (Fraction(1, 4), Fraction(1, 4))

    def test_unbounded(self):
        with pytest.raises(lp.UnboundedLP):
            lp.maximize([1, 0], [[0, 1]], [1])

    def test_zero_objective(self):
        sol = lp.maximize([-1, -1], [[1, 1]], [3])
        assert sol.value == 0 and sol.pivots == 0

    @pytest.mark.parametrize(
        "c, A, b",
        [
            ([1], [[1]], [-1]),
            ([1, 2], [[1]], [1]),
            ([1] * 17, [[1] * 17], [1]),
        ],
    )
    def test_invalid_inputs(self, c, A, b):
        with pytest.raises(ValueError):
            lp.maximize(c, A, b)

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the largest-coefficient rule; Bland's rule terminates
        c = [Fraction(3, 4), -150, Fraction(1, 50), -6]
        A = [
            [Fraction(1, 4), -60, Fraction(-1, 25), 9],
            [Fraction(1, 2), -90, Fraction(-1, 50), 3],
            [0, 0, 1, 0],
        ]
        b = [0, 0, 1]
        sol = lp.maximize(c, A, b)
        sol.check(c, A, b)
        assert sol.value == Fraction(1, 20)

    def test_check_detects_bad_certificate(self):
        c, A, b = [1, 1], [[1, 0], [0, 1]], [1, 1]
        sol = lp.maximize(c, A, b)
        forged = lp.LPSolution(Fraction(3), sol.x, sol.dual, sol.pivots)
        with pytest.raises(AssertionError):
            forged.check(c, A, b)

    def test_random_programs_match_scipy(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            m, n = rng.integers(1, 7), rng.integers(1, 7)
            A = rng.integers(0, 6, size=(m, n)).tolist()
            # every column needs a positive entry so the program stays bounded
            for j in range(n):
                A[rng.integers(0, m)][j] += 1
            b = rng.integers(0, 10, size=m).tolist()
            c = rng.integers(-4, 6, size=n).tolist()
            sol = lp.maximize(c, A, b)
            sol.check(c, A, b)
            ref = scipy_max(c, A, b)
            assert ref.status == 0
            assert float(sol.value) == pytest.approx(-ref.fun, abs=1e-9)

    def test_game_program_matches_scipy(self):
        c = [1, 1, 1, -1]
        A = [[1, 0, 1, 0], [0, 1, 0, 1]] + np.eye(4, dtype=int).tolist()
        b = [1] * 6
        sol = lp.maximize(c, A, b)
        assert sol.value == 2
        assert -scipy_max(c, A, b).fun == pytest.approx(2, abs=1e-12)
