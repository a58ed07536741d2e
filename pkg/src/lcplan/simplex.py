"""Bounded-variable primal simplex for small dense linear programs.

Solves  max c'x  subject to  Ax <= b,  0 <= x <= u,  with b >= 0 so the
all-slack basis is immediately feasible (every LP in this package has that
form).  Nonbasic variables rest at either bound; Bland's smallest-index rule
is used for entering and leaving choices, which prevents cycling.  Problem
sizes here are tiny (at most a few thousand variables), so the basis system
is re-solved densely each iteration instead of maintaining a factorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-10
_RATIO_TOL = 1e-12


@dataclass
class SimplexResult:
    x: np.ndarray              # primal solution for the original variables
    objective: float
    duals: np.ndarray          # one multiplier per Ax <= b row (>= 0 at optimum)
    reduced_costs: np.ndarray  # for the original variables
    slacks: np.ndarray         # b - Ax
    status: str                # "optimal" or "stalled"
    iterations: int

    def residual_bound(self) -> float:
        """Crude upper bound on the remaining objective improvement.

        Zero at optimality; may be infinite when stalled with an eligible
        unbounded-range variable.
        """
        if self.status == "optimal":
            return 0.0
        return float("inf")

    def complementary_slackness_residual(self) -> float:
        """Max violation of complementary slackness / dual feasibility."""
        res = float(np.max(np.abs(self.duals * self.slacks), initial=0.0))
        res = max(res, float(np.max(-self.duals, initial=0.0)))
        return res


def solve_lp(cost, a_ub, b_ub, upper, max_iterations: int = 20000) -> SimplexResult:
    """Maximize cost'x with Ax <= b and 0 <= x <= upper (entries may be inf).

    Requires b >= 0.  Returns a basic solution; `status` is "stalled" if the
    iteration cap was reached (the solution is still primal feasible).
    """
    c = np.asarray(cost, dtype=float)
    a = np.asarray(a_ub, dtype=float).reshape(len(b_ub), -1) if len(b_ub) else np.zeros((0, c.size))
    b = np.asarray(b_ub, dtype=float)
    u = np.asarray(upper, dtype=float)
    n = c.size
    m = b.size
    if np.any(b < -1e-12):
        raise ValueError("solve_lp requires b >= 0")
    if np.any(u < 0):
        raise ValueError("upper bounds must be >= 0")

    # Extended problem: columns [x | slacks], slacks unbounded above.
    a_ext = np.hstack([a, np.eye(m)]) if m else np.zeros((0, n))
    c_ext = np.concatenate([c, np.zeros(m)])
    u_ext = np.concatenate([u, np.full(m, math.inf)])
    total = n + m

    basis = list(range(n, total))
    at_upper = np.zeros(total, dtype=bool)  # nonbasic position; False = at lower
    nonbasic = [j for j in range(total) if j not in basis]

    def nonbasic_values():
        vals = np.zeros(total)
        for j in nonbasic:
            vals[j] = u_ext[j] if at_upper[j] else 0.0
        return vals

    status = "optimal"
    iterations = 0
    x = np.zeros(total)
    while True:
        bmat = a_ext[:, basis] if m else np.zeros((0, 0))
        xn = nonbasic_values()
        rhs = b - a_ext @ xn if m else np.zeros(0)
        xb = np.linalg.solve(bmat, rhs) if m else np.zeros(0)
        x = xn.copy()
        for pos, j in enumerate(basis):
            x[j] = xb[pos]

        if iterations >= max_iterations:
            status = "stalled"
            break
        iterations += 1

        y = np.linalg.solve(bmat.T, c_ext[basis]) if m else np.zeros(0)
        entering = -1
        direction_sign = 0.0
        for j in nonbasic:  # Bland: first eligible index
            d = c_ext[j] - (y @ a_ext[:, j] if m else 0.0)
            if not at_upper[j] and d > _PIVOT_TOL:
                entering, direction_sign = j, 1.0
                break
            if at_upper[j] and d < -_PIVOT_TOL:
                entering, direction_sign = j, -1.0
                break
        if entering < 0:
            status = "optimal"
            break

        w = np.linalg.solve(bmat, a_ext[:, entering]) if m else np.zeros(0)
        # Ratio test: step t >= 0 moves entering by direction_sign * t and
        # basics by -direction_sign * w * t.  The entering variable's own
        # bound participates as a blocker (a bound flip, position -1).
        t_best = u_ext[entering]
        blocker_index = entering
        leaving_pos = -1
        leaving_to_upper = False
        for pos in range(m):
            delta = direction_sign * w[pos]
            if delta > _RATIO_TOL:
                t = max(xb[pos] / delta, 0.0)
                hit_upper = False
            elif delta < -_RATIO_TOL and math.isfinite(u_ext[basis[pos]]):
                t = max((u_ext[basis[pos]] - xb[pos]) / (-delta), 0.0)
                hit_upper = True
            else:
                continue
            # Bland tie-break: strictly smaller step wins, ties go to the
            # smaller variable index.
            better = t < t_best - _RATIO_TOL or (
                t <= t_best + _RATIO_TOL and basis[pos] < blocker_index
            )
            if better:
                t_best = min(t, t_best)
                blocker_index = basis[pos]
                leaving_pos = pos
                leaving_to_upper = hit_upper
        if not math.isfinite(t_best):
            raise RuntimeError("LP is unbounded; malformed input")

        if leaving_pos < 0:
            at_upper[entering] = not at_upper[entering]
        else:
            leaving = basis[leaving_pos]
            basis[leaving_pos] = entering
            nonbasic.remove(entering)
            nonbasic.append(leaving)
            nonbasic.sort()
            at_upper[leaving] = leaving_to_upper
            at_upper[entering] = False  # now basic; flag unused

    y = np.linalg.solve((a_ext[:, basis]).T, c_ext[basis]) if m else np.zeros(0)
    reduced = c - (y @ a if m else np.zeros(n))
    xs = x[:n]
    slack = b - a @ xs if m else np.zeros(0)
    return SimplexResult(
        x=xs,
        objective=float(c @ xs),
        duals=y,
        reduced_costs=reduced,
        slacks=slack,
        status=status,
        iterations=iterations,
    )
