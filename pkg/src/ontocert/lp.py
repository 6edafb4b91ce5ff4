"""Exact dense simplex over the rationals for tiny linear programs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

MAX_SIZE = 16


class UnboundedLP(ArithmeticError):
    pass


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    x: tuple[Fraction, ...]
    dual: tuple[Fraction, ...]
    pivots: int

    def check(self, c, A, b) -> None:
        """Verify primal feasibility, dual feasibility and zero duality gap exactly."""
        c, A, b = _as_fractions(c, A, b)
        for i, row in enumerate(A):
            if sum(a * xj for a, xj in zip(row, self.x)) > b[i]:
                raise AssertionError(f"primal constraint {i} violated")
        if any(xj < 0 for xj in self.x) or any(yi < 0 for yi in self.dual):
            raise AssertionError("negative primal or dual variable")
        for j in range(len(c)):
            if sum(A[i][j] * self.dual[i] for i in range(len(b))) < c[j]:
                raise AssertionError(f"dual constraint {j} violated")
        primal = sum(cj * xj for cj, xj in zip(c, self.x))
        dual = sum(bi * yi for bi, yi in zip(b, self.dual))
        if not primal == dual == self.value:
            raise AssertionError(f"duality gap: primal {primal}, dual {dual}")


def _as_fractions(c, A, b):
    return (
        [Fraction(v) for v in c],
        [[Fraction(v) for v in row] for row in A],
        [Fraction(v) for v in b],
    )


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPSolution:
    """max c.x subject to A x <= b, x >= 0, with b >= 0.

    Slack variables give the initial feasible basis; Bland's rule (smallest
    index enters, smallest basic index breaks ratio ties) guarantees
    termination. The dual solution is read off the slack reduced costs.
    """
    c, A, b = _as_fractions(c, A, b)
    m, n = len(A), len(c)
    if m > MAX_SIZE or n > MAX_SIZE:
        raise ValueError(f"LP too large for the dense exact solver ({m}x{n})")
    if any(len(row) != n for row in A):
        raise ValueError("constraint rows must match the objective length")
    if any(bi < 0 for bi in b):
        raise ValueError("right-hand sides must be nonnegative")

    # tableau rows: [A | I | b]; objective row holds reduced costs c_j - z_j
    T = [row + [Fraction(int(i == r)) for i in range(m)] + [b[r]] for r, row in enumerate(A)]
    obj = c + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + r for r in range(m)]
    pivots = 0
    while True:
        entering = next((j for j in range(n + m) if obj[j] > 0), None)
        if entering is None:
            break
        best = None
        for r in range(m):
            a = T[r][entering]
            if a > 0:
                ratio = T[r][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:
            raise UnboundedLP(f"objective unbounded along variable {entering}")
        r = best[1]
        piv = T[r][entering]
        T[r] = [v / piv for v in T[r]]
        for i in range(m):
            if i != r and T[i][entering] != 0:
                f = T[i][entering]
                T[i] = [vi - f * vr for vi, vr in zip(T[i], T[r])]
        f = obj[entering]
        obj = [vo - f * vr for vo, vr in zip(obj, T[r])]
        basis[r] = entering
        pivots += 1

    x = [Fraction(0)] * (n + m)
    for r, j in enumerate(basis):
        x[j] = T[r][-1]
    return LPSolution(
        value=-obj[-1],
        x=tuple(x[:n]),
        dual=tuple(-obj[n + i] for i in range(m)),
        pivots=pivots,
    )
