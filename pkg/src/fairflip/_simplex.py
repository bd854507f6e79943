"""Dense revised simplex for small LPs with box-bounded variables.

Solves  min c'x  s.t.  A x <= b,  lb <= x <= ub.

The implementation keeps an explicit basis inverse and works on the
extended matrix [A | I | -I] (slacks, then artificials for a Phase-1 start
when one is needed). Pricing uses Dantzig's rule by default and switches to
Bland's rule whenever the objective stalls, which makes cycling impossible
while keeping iteration counts reasonable; both rules break ties by lowest
variable index, so runs are fully deterministic.

Intended for desk-scale instances (a few hundred rows). Larger problems
should go through an external solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SolverFailureError, InfeasibleError

_AT_LOWER, _AT_UPPER, _BASIC = 0, 1, 2
_STALL_LIMIT = 40


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, A, b, lb, ub, tol):
        self.nrows, self.nstruct = A.shape
        self.tol = tol
        m, ns = self.nrows, self.nstruct
        self.ncols = ns + 2 * m  # structural | slack | artificial
        self.A = np.hstack([A, np.eye(m), -np.eye(m)])
        self.b = b.astype(float)
        self.lower = np.concatenate([lb, np.zeros(2 * m)])
        # artificial columns stay pinned at 0 unless Phase 1 opens them
        self.upper = np.concatenate([ub, np.full(m, np.inf), np.zeros(m)])
        self.status = np.full(self.ncols, _AT_LOWER, dtype=np.int8)
        self.basis = np.arange(ns, ns + m)
        self.binv = np.eye(m)
        self.xval = np.zeros(self.ncols)
        self.pivots_since_refactor = 0

    def set_nonbasic(self, j, at_upper):
        self.status[j] = _AT_UPPER if at_upper else _AT_LOWER
        self.xval[j] = self.upper[j] if at_upper else self.lower[j]

    def install_basis_values(self):
        """Recompute basic variable values from the nonbasic assignment."""
        rhs = self.b - self.A @ np.where(self.status == _BASIC, 0.0, self.xval)
        self.xval[self.basis] = self.binv @ rhs

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise SolverFailureError("singular basis") from exc
        self.install_basis_values()
        self.pivots_since_refactor = 0

    def optimize(self, c, max_iters):
        """Run simplex iterations for objective c until optimal."""
        iters = 0
        stall = 0
        best_obj = np.inf
        use_bland = False
        while True:
            if iters >= max_iters:
                raise SolverFailureError(f"simplex did not converge in {max_iters} iterations")
            iters += 1
            y = c[self.basis] @ self.binv
            reduced = c - y @ self.A
            at_lo = self.status == _AT_LOWER
            at_up = self.status == _AT_UPPER
            eligible = (at_lo & (reduced < -self.tol)) | (at_up & (reduced > self.tol))
            eligible &= self.upper - self.lower > 0  # fixed variables never enter
            if not eligible.any():
                return iters
            idx = np.flatnonzero(eligible)
            if use_bland:
                j = int(idx[0])
            else:
                j = int(idx[np.abs(reduced[idx]).argmax()])
            sigma = 1.0 if self.status[j] == _AT_LOWER else -1.0

            w = self.binv @ self.A[:, j]
            # largest step before the entering variable or a basic one hits a bound
            t_max = self.upper[j] - self.lower[j]
            leave_pos = -1
            leave_to_upper = False
            sw = sigma * w
            xb = self.xval[self.basis]
            lo_b = self.lower[self.basis]
            up_b = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                down = np.where(sw > self.tol, (xb - lo_b) / sw, np.inf)
                up = np.where(sw < -self.tol, (up_b - xb) / (-sw), np.inf)
            steps = np.minimum(down, up)
            steps[steps < 0] = 0.0
            p = int(steps.argmin()) if steps.size else -1
            if p >= 0 and steps[p] < t_max:
                # deterministic anti-cycling tie break: smallest variable index
                ties = np.flatnonzero(steps <= steps[p] + 1e-12)
                p = int(ties[self.basis[ties].argmin()])
                t = max(steps[p], 0.0)
                leave_pos = p
                leave_to_upper = up[p] <= down[p]
            else:
                t = t_max
            if not np.isfinite(t):
                raise SolverFailureError("unbounded direction encountered")

            self.xval[self.basis] = xb - t * sw
            if leave_pos < 0:
                # bound flip: no basis change
                self.set_nonbasic(j, at_upper=self.status[j] == _AT_LOWER)
            else:
                enter_val = (self.lower[j] if sigma > 0 else self.upper[j]) + sigma * t
                leaving = self.basis[leave_pos]
                self.set_nonbasic(leaving, at_upper=leave_to_upper)
                self.status[j] = _BASIC
                self.xval[j] = enter_val
                self.basis[leave_pos] = j
                wp = w[leave_pos]
                if abs(wp) < 1e-12:
                    raise SolverFailureError("degenerate pivot element")
                row = self.binv[leave_pos] / wp
                w_rest = w.copy()
                w_rest[leave_pos] = 0.0
                self.binv -= np.outer(w_rest, row)
                self.binv[leave_pos] = row
                self.pivots_since_refactor += 1
                if self.pivots_since_refactor >= 200:
                    self.refactor()

            new_obj = float(c @ self.xval)
            if new_obj < best_obj - 1e-12:
                best_obj = new_obj
                stall = 0
                use_bland = False
            else:
                stall += 1
                if stall >= _STALL_LIMIT:
                    use_bland = True


def solve_bounded_lp(c, A, b, lb, ub,*, tol: float = 1e-9,
                     max_iters: Optional[int] = None,
                     start_at_upper=None) -> SimplexResult:
    """Minimize c'x subject to A x <= b and lb <= x <= ub.

    start_at_upper optionally marks structural variables that should start
    at their upper bound; everything else starts at its lower bound. When
    the implied slack values are negative a Phase-1 run with artificial
    variables finds a feasible basis first.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    lb = np.asarray(lb, dtype=float).reshape(-1)
    ub = np.asarray(ub, dtype=float).reshape(-1)
    nrows, nstruct = A.shape
    if max_iters is None:
        max_iters = 200 * (nrows + nstruct) + 2000

    tab = _Tableau(A, b, lb, ub, tol)
    if start_at_upper is not None:
        for j in np.flatnonzero(np.asarray(start_at_upper, dtype=bool)):
            tab.set_nonbasic(int(j), at_upper=True)
    tab.xval[: nstruct] = np.where(tab.status[:nstruct] == _AT_UPPER,
                                   ub, lb)

    slack0 = b - A @ tab.xval[:nstruct]
    total_iters = 0
    negative = slack0 < -tol
    if negative.any():
        # Phase 1: swap violated rows' slacks for artificials and drive them to 0
        m = nrows
        for i in np.flatnonzero(negative):
            art = nstruct + m + i
            tab.basis[i] = art
            tab.set_nonbasic(nstruct + i, at_upper=False)
            tab.status[art] = _BASIC
            tab.upper[art] = np.inf
        tab.refactor()
        c1 = np.zeros(tab.ncols)
        c1[nstruct + m:] = 1.0
        total_iters += tab.optimize(c1, max_iters)
        if float(c1 @ tab.xval) > 1e-7:
            raise InfeasibleError("no feasible point")
        # re-pin artificials at zero for Phase 2
        tab.upper[nstruct + m:] = 0.0
        tab.xval[nstruct + m:][tab.status[nstruct + m:] != _BASIC] = 0.0
    else:
        tab.install_basis_values()

    c2 = np.zeros(tab.ncols)
    c2[:nstruct] = c
    total_iters += tab.optimize(c2, max_iters)

    x = tab.xval[:nstruct].copy()
    np.clip(x, lb, ub, out=x)
    return SimplexResult(x=x, objective=float(c @ x), iterations=total_iters)
