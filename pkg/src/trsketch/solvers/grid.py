"""Brute-force reference solver for problems in at most three variables."""

from __future__ import annotations

import itertools
import logging
import time

import numpy as np

from .report import Status, make_report, problem_data

logger = logging.getLogger(__name__)

MAX_DIM = 3
FEAS_SLACK = 1e-12


def _dykstra(points, a, b, radius, sweeps=200, tol=1e-14):
    """Euclidean projection of each row of ``points`` onto ``{Ax <= b} ∩ ball``."""
    x = points.copy()
    sets = a.shape[0] + 1
    incr = np.zeros((sets,) + x.shape)
    row_sq = np.einsum("ij,ij->i", a, a)
    for _ in range(sweeps):
        prev, prev_incr = x.copy(), incr.copy()
        for j in range(sets):
            z = x + incr[j]
            if j < a.shape[0]:
                excess = np.maximum(z @ a[j] - b[j], 0.0) / row_sq[j]
                y = z - excess[:, None] * a[j]
            else:
                nrm = np.linalg.norm(z, axis=1, keepdims=True)
                y = z * np.minimum(1.0, radius / np.maximum(nrm, 1e-300))
            incr[j] = z - y
            x = y
        # the iterate can stall for a sweep while the corrections are still moving
        if np.max(np.abs(x - prev)) <= tol and np.max(np.abs(incr - prev_incr)) <= tol:
            break
    return x


def _objective_rows(q, c, pts):
    vals = pts @ c
    if q is not None:
        vals = vals + np.einsum("ij,ij->i", pts @ q, pts)
    return vals


def solve_oracle_small(problem, grid_step=0.01, *, candidates=10, polish_steps=500):
    """Enumerate a grid over ``[-R, R]^n``, keep feasible points, polish the best few.

    The unpolished answer is within about ``grid_step * sqrt(n) * Lipschitz``
    of the global optimum; polishing (projected gradient with Dykstra
    projections) only ever lowers the objective of feasible candidates.
    Refuses ``n > 3`` and steps outside ``[1e-3, 0.1]``.
    """
    n = problem.c.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"grid oracle refuses dimension {n} > {MAX_DIM}")
    if not 1e-3 <= grid_step <= 0.1:
        raise ValueError(f"grid_step must lie in [1e-3, 0.1], got {grid_step}")
    return grid_search(problem, grid_step, candidates=candidates, polish_steps=polish_steps)


def grid_search(problem, grid_step, *, candidates=10, polish_steps=500):
    """Unchecked grid enumeration plus polish; the cost is ``(2R/grid_step)^n`` points.

    Used directly only for coarse cross-checks in moderate dimension.
    """
    start = time.perf_counter()
    q, c, a, b, radius = problem_data(problem)
    n = c.shape[0]
    k = int(np.floor(radius / grid_step))
    axis = grid_step * np.arange(-k, k + 1)
    best_pts = np.zeros((0, n))
    best_vals = np.zeros(0)
    evaluated = 0
    # chunk over the first coordinate to bound memory
    rest = np.array(list(itertools.product(axis, repeat=n - 1))) if n > 1 else np.zeros((1, 0))
    for first in axis:
        pts = np.column_stack([np.full(rest.shape[0], first), rest])
        evaluated += pts.shape[0]
        keep = np.einsum("ij,ij->i", pts, pts) <= radius**2 + FEAS_SLACK
        if a.shape[0]:
            keep &= np.all(pts @ a.T <= b + FEAS_SLACK, axis=1)
        pts = pts[keep]
        if not pts.shape[0]:
            continue
        vals = _objective_rows(q, c, pts)
        pool_pts = np.vstack([best_pts, pts])
        pool_vals = np.concatenate([best_vals, vals])
        order = np.argsort(pool_vals, kind="stable")[:candidates]
        best_pts, best_vals = pool_pts[order], pool_vals[order]
    elapsed = time.perf_counter() - start
    if not best_pts.shape[0]:
        return make_report(problem, np.zeros(n), Status.INFEASIBLE, iterations=evaluated, wall_time=elapsed,
                           log=(f"no feasible point on a grid of step {grid_step}",))

    lip = 2.0 * (float(np.linalg.norm(q, 2)) if q is not None else 0.0) + float(np.linalg.norm(c)) / radius
    step0 = 1.0 / max(lip, 1e-12)
    steps = np.full(best_pts.shape[0], step0)
    x = best_pts.copy()
    vals = best_vals.copy()
    for _ in range(polish_steps):
        grad = np.broadcast_to(c, x.shape)
        if q is not None:
            grad = grad + 2.0 * x @ q
        trial = _dykstra(x - steps[:, None] * grad, a, b, radius)
        feasible = np.linalg.norm(trial, axis=1) <= radius + 1e-12
        if a.shape[0]:
            feasible &= np.all(trial @ a.T <= b + 1e-12, axis=1)
        trial_vals = _objective_rows(q, c, trial)
        better = feasible & (trial_vals < vals)
        x[better] = trial[better]
        vals[better] = trial_vals[better]
        # a rejected step is retried shorter, in case the projection had not converged
        steps[~better] *= 0.5
        if np.all(steps < 1e-8 * step0):
            break
    i = int(np.argmin(vals))
    improvement = float(best_vals.min() - vals[i])
    bound = grid_step * np.sqrt(n) * lip
    msg = f"grid step {grid_step}: {evaluated} points, polish gained {improvement:.3e}, a-priori error <= {bound:.3e}"
    logger.debug(msg)
    y, mu = _multiplier_estimate(q, c, a, b, radius, x[i])
    return make_report(problem, x[i], Status.OPTIMAL, y=y, mu=mu, iterations=evaluated,
                       wall_time=time.perf_counter() - start, log=(msg,))


def _multiplier_estimate(q, c, a, b, radius, x, near=1e-6):
    """Nonnegative least-squares-style multipliers on the nearly active constraints."""
    g = c if q is None else 2.0 * q @ x + c
    active = np.flatnonzero(a @ x - b > -near) if a.shape[0] else np.zeros(0, dtype=int)
    cols = [a[i] for i in active]
    on_ball = np.linalg.norm(x) > radius - near
    if on_ball:
        cols.append(x)
    y = np.zeros(a.shape[0])
    if not cols:
        return y, 0.0
    sol = np.maximum(np.linalg.lstsq(np.column_stack(cols), -g, rcond=None)[0], 0.0)
    y[active] = sol[: active.size]
    return y, float(sol[-1]) if on_ball else 0.0
