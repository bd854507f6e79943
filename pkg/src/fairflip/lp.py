"""Relaxed label-flipping problem: construction and solving.

The integer program minimizes the number of flipped labels subject to a
budget on the similarity-weighted disagreement. Absolute differences are
linearized through the XOR trick (four inequalities per |a - b| term) and
the integrality constraints are relaxed to [0, 1] boxes, giving a plain LP:

    min  sum_i z_i
    s.t. z_i  >= |y_i - y'_i|      (4 rows per node)
         z_uv >= |y_u - y_v|       (4 rows per edge, only where W_uv > 0)
         sum_uv W_uv * z_uv <= m   (budget row)
         y, z in [0, 1]

Solvers sit behind a small interface: a built-in dense revised simplex (the
default at desk scale, dependency-free and deterministic) and scipy's HiGHS
backend for larger instances.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .core import (
    FractionalSolution,
    NegativeBudgetError,
    SimilarityGraph,
    SolverFailureError,
    _as_binary_vector,
)
from . import _simplex

# above this many rows the built-in dense simplex stops being sensible
SIMPLEX_ROW_LIMIT = 1500


@dataclass(frozen=True)
class LpProblem:
    """Sparse statement of the relaxed flipping problem.

    Variables are laid out as [y_0..y_{n-1}, z_0..z_{n-1}, one z per edge].
    """

    n: int
    original_labels: np.ndarray
    edge_head: np.ndarray
    edge_tail: np.ndarray
    edge_weights: np.ndarray
    m: float
    c: np.ndarray
    A: csr_matrix
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def num_edges(self) -> int:
        return self.edge_head.shape[0]

    @property
    def num_variables(self) -> int:
        return 2 * self.n + self.num_edges

    @property
    def num_constraints(self) -> int:
        return self.A.shape[0]

    def start_at_upper(self) -> np.ndarray:
        """Nonbasic start: y = 0, z_i = y'_i, edge z = 0 (always feasible)."""
        flags = np.zeros(self.num_variables, dtype=bool)
        flags[self.n:2 * self.n] = self.original_labels == 1
        return flags

    def variable_name(self, j: int) -> str:
        if j < self.n:
            return f"y{j}"
        if j < 2 * self.n:
            return f"zf{j - self.n}"
        e = j - 2 * self.n
        return f"ze_{self.edge_head[e]}_{self.edge_tail[e]}"


def build_lp(graph: SimilarityGraph, labels, m: float) -> LpProblem:
    """Assemble the relaxed problem for a graph, original labels and budget."""
    if m < 0:
        raise NegativeBudgetError(f"m must be >= 0, got {m}")
    original = _as_binary_vector(labels, "labels")
    n = original.shape[0]
    E = graph.num_edges
    nv = 2 * n + E

    rows, cols, vals, rhs = [], [], [], []

    def add_row(entries, bound):
        r = len(rhs)
        for col, val in entries:
            rows.append(r)
            cols.append(col)
            vals.append(val)
        rhs.append(bound)

    for i in range(n):
        yi, zi, oi = i, n + i, float(original[i])
        add_row([(zi, 1.0), (yi, -1.0)], oi)          # z_i - y_i <= y'_i
        add_row([(yi, 1.0), (zi, -1.0)], oi)          # y_i - z_i <= y'_i
        add_row([(zi, -1.0), (yi, -1.0)], -oi)        # z_i + y_i >= y'_i
        add_row([(zi, 1.0), (yi, 1.0)], 2.0 - oi)     # z_i + y_i <= 2 - y'_i
    for e in range(E):
        u, v, ze = int(graph.head[e]), int(graph.tail[e]), 2 * n + e
        add_row([(ze, 1.0), (u, -1.0), (v, -1.0)], 0.0)
        add_row([(ze, -1.0), (u, 1.0), (v, -1.0)], 0.0)
        add_row([(ze, -1.0), (u, -1.0), (v, 1.0)], 0.0)
        add_row([(ze, 1.0), (u, 1.0), (v, 1.0)], 2.0)
    add_row([(2 * n + e, float(graph.weights[e])) for e in range(E)], float(m))

    A = coo_matrix((vals, (rows, cols)), shape=(len(rhs), nv)).tocsr()
    c = np.zeros(nv)
    c[n:2 * n] = 1.0
    return LpProblem(
        n=n,
        original_labels=original,
        edge_head=graph.head.copy(),
        edge_tail=graph.tail.copy(),
        edge_weights=graph.weights.copy(),
        m=float(m),
        c=c,
        A=A,
        b=np.asarray(rhs, dtype=float),
        lower=np.zeros(nv),
        upper=np.ones(nv),
    )


class SimplexLpSolver:
    """Built-in dense revised simplex; deterministic, no external deps."""

    name = "simplex"

    def __init__(self, tol: float = 1e-9):
        self.tol = tol

    def solve(self, problem: LpProblem) -> np.ndarray:
        result = _simplex.solve_bounded_lp(
            problem.c,
            problem.A.toarray(),
            problem.b,
            problem.lower,
            problem.upper,
            tol=self.tol,
            start_at_upper=problem.start_at_upper(),
        )
        return result.x


class ScipyLpSolver:
    """HiGHS via scipy.optimize.linprog, for instances past desk scale."""

    name = "highs"

    def solve(self, problem: LpProblem) -> np.ndarray:
        from scipy.optimize import linprog

        res = linprog(
            problem.c,
            A_ub=problem.A,
            b_ub=problem.b,
            bounds=np.column_stack([problem.lower, problem.upper]),
            method="highs",
        )
        if res.status == 2:
            from .core import InfeasibleError

            raise InfeasibleError("LP reported infeasible")
        if res.status != 0:
            raise SolverFailureError(f"linprog status {res.status}: {res.message}")
        return res.x


def default_solver(problem: LpProblem):
    if problem.num_constraints <= SIMPLEX_ROW_LIMIT:
        return SimplexLpSolver()
    return ScipyLpSolver()


def solve_lp(problem: LpProblem, solver=None,
             solver_tolerance: float = 1e-8) -> FractionalSolution:
    """Solve to optimality and return the per-node relaxed labels.

    The returned solution is checked against every constraint; a violation
    beyond solver_tolerance raises SolverFailureError.
    """
    if solver is None:
        solver = default_solver(problem)
    x = solver.solve(problem)
    residual = problem.A @ x - problem.b
    worst = float(residual.max(initial=0.0))
    if worst > solver_tolerance:
        raise SolverFailureError(
            f"solver {solver.name!r} returned a point violating constraints by {worst:.3e}")
    if (x < problem.lower - solver_tolerance).any() or (x > problem.upper + solver_tolerance).any():
        raise SolverFailureError(f"solver {solver.name!r} returned a point outside its box")
    values = np.clip(x[: problem.n], 0.0, 1.0)
    return FractionalSolution.from_values(values, problem.original_labels)


def write_lp_text(problem: LpProblem, target) -> None:
    """Dump the problem in CPLEX LP text format for external cross-checks."""
    own = isinstance(target, (str, bytes))
    f = open(target, "w") if own else target
    try:
        f.write("Minimize\n obj: ")
        f.write(" + ".join(f"zf{i}" for i in range(problem.n)))
        f.write("\nSubject To\n")
        A = problem.A.tocoo()
        terms: dict[int, list[str]] = {}
        for r, col, val in zip(A.row, A.col, A.data):
            name = problem.variable_name(int(col))
            sign = "+" if val >= 0 else "-"
            mag = abs(val)
            coeff = "" if mag == 1.0 else f"{mag:.12g} "
            terms.setdefault(int(r), []).append(f"{sign} {coeff}{name}")
        for r in range(problem.num_constraints):
            lhs = " ".join(terms.get(r, ["+ 0 y0"])).lstrip("+ ")
            f.write(f" c{r}: {lhs} <= {problem.b[r]:.12g}\n")
        f.write("Bounds\n")
        for j in range(problem.num_variables):
            f.write(f" 0 <= {problem.variable_name(j)} <= 1\n")
        f.write("End\n")
    finally:
        if own:
            f.close()
