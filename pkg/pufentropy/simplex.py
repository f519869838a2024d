#  Copyright (c) 2024 pufentropy developers
"""
A small dense simplex solver in exact rational arithmetic.
"""

from fractions import Fraction
from typing import List, Sequence, Tuple

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"


class RationalSimplex:
    """
    Maximise ``c·x`` subject to ``A x <= b`` and ``x >= 0``, where ``b >= 0`` (so the origin is feasible).
    Uses a dense tableau of :class:`fractions.Fraction` and Bland's rule, which cannot cycle on degenerate
    problems.
    """

    def __init__(self, A: Sequence[Sequence], b: Sequence, c: Sequence):
        """
        :param A: constraint matrix with ``m`` rows and ``n`` columns (integers or fractions)
        :param b: ``m`` non-negative right-hand sides
        :param c: ``n`` objective coefficients
        """
        self.m = len(A)
        self.n = len(c)
        if len(b) != self.m or any(len(row) != self.n for row in A):
            raise ValueError(f"inconsistent dimensions: A is {self.m}x{[len(r) for r in A]}, "
                             f"b has {len(b)} entries, c has {self.n}")
        if any(v < 0 for v in b):
            raise ValueError("right-hand sides must be non-negative")
        width = self.n + self.m
        # rows: [A | I], slack variables start in the basis
        self.rows = []
        for i, row in enumerate(A):
            slack = [Fraction(0)] * self.m
            slack[i] = Fraction(1)
            self.rows.append([Fraction(v) for v in row] + slack)
        self.rhs = [Fraction(v) for v in b]
        self.cost = [Fraction(v) for v in c] + [Fraction(0)] * self.m
        self.value = Fraction(0)
        self.basis = list(range(self.n, width))

    def _pivot(self, i, j):
        pivot_row = self.rows[i]
        piv = pivot_row[j]
        pivot_row[:] = [v / piv for v in pivot_row]
        self.rhs[i] /= piv
        for k, row in enumerate(self.rows):
            if k != i and row[j] != 0:
                f = row[j]
                row[:] = [a - f * p for a, p in zip(row, pivot_row)]
                self.rhs[k] -= f * self.rhs[i]
        f = self.cost[j]
        if f != 0:
            self.cost = [a - f * p for a, p in zip(self.cost, pivot_row)]
            self.value += f * self.rhs[i]
        self.basis[i] = j

    def solve(self) -> Tuple[str, Fraction, List[Fraction]]:
        """
        Run the simplex method.

        :return: ``(status, value, x)``; status is ``"optimal"`` or ``"unbounded"``, ``x`` is the final basic solution
        """
        while True:
            # Bland: entering variable is the lowest index with positive reduced cost
            entering = next((j for j, r in enumerate(self.cost) if r > 0), None)
            if entering is None:
                return OPTIMAL, self.value, self.solution()
            best = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    ratio = self.rhs[i] / row[entering]
                    # ties go to the lowest basic variable index
                    if best is None or (ratio, self.basis[i]) < best[:2]:
                        best = (ratio, self.basis[i], i)
            if best is None:
                return UNBOUNDED, self.value, self.solution()
            self._pivot(best[2], entering)

    def solution(self) -> List[Fraction]:
        x = [Fraction(0)] * self.n
        for i, var in enumerate(self.basis):
            if var < self.n:
                x[var] = self.rhs[i]
        return x
