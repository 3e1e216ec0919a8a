"""Solvers for the constrained subproblem: convex path and multi-start local path."""

from __future__ import annotations

import time

import numpy as np

from .._validation import check_positive_int, check_seed
from ..exceptions import WrongSolverError
from ._alm import run_alm
from .report import Status, make_report, problem_data

PSD_TOL = 1e-8


def _check_tol(tol):
    if not 1e-10 <= tol <= 1e-2:
        raise ValueError(f"tol must lie in [1e-10, 1e-2], got {tol}")
    return float(tol)


def min_eigenvalue(q):
    return float(np.linalg.eigvalsh(q)[0]) if q is not None and q.size else 0.0


def solve_convex(problem, tol=1e-8, *, max_outer=60, inner_maxiter=5000):
    """Solve a linear or positive-semidefinite instance over ``{Ax <= b} ∩ ball``.

    ``problem`` is a :class:`~trsketch.model.TrsInstance` or
    :class:`~trsketch.model.ProjectedInstance`. Status is ``Optimal`` once
    the KKT residual is at most ``tol``; ``Infeasible`` when the dual
    iterates yield a Farkas certificate.
    """
    tol = _check_tol(tol)
    start = time.perf_counter()
    q, c, a, b, radius = problem_data(problem)
    lam = min_eigenvalue(q)
    if lam < -PSD_TOL:
        raise WrongSolverError(
            f"Q has eigenvalue {lam:.3e} < 0; use solve_local for indefinite quadratics"
        )
    state = run_alm(q, c, a, b, radius, np.zeros_like(c), tol, convex=True,
                    max_outer=max_outer, inner_maxiter=inner_maxiter)
    status = {"converged": Status.OPTIMAL, "infeasible": Status.INFEASIBLE}.get(state.status, Status.MAX_ITER)
    return make_report(
        problem, state.x, status, y=state.y, mu=state.mu, iterations=state.iterations,
        wall_time=time.perf_counter() - start, log=state.log,
    )


def _starting_points(q, c, radius, starts, rng):
    n = c.shape[0]
    points = []
    cnorm = np.linalg.norm(c)
    if cnorm > 0:
        points.append(-radius * c / cnorm)
    lam, vecs = np.linalg.eigh(q)
    v = vecs[:, 0]
    # the most negative-curvature direction, both signs
    points.append(radius * v)
    points.append(-radius * v)
    g = rng.standard_normal((starts, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=starts) ** (1.0 / n)
    points.extend(g * radii[:, None])
    return points


def solve_local(problem, starts=8, tol=1e-8, seed=0, *, max_outer=60, inner_maxiter=5000):
    """Best of several projected-gradient augmented-Lagrangian runs.

    Starts are ``-radius c/|c|``, ``±radius v`` with ``v`` the eigenvector of
    the smallest eigenvalue of ``Q``, and ``starts`` points uniform in the
    ball. Returns the lowest-objective run among those that reach the KKT
    tolerance (``LocalOptimal``), else the least-infeasible one (``MaxIter``).
    """
    tol = _check_tol(tol)
    starts = check_positive_int(starts, "starts")
    seed = check_seed(seed)
    start = time.perf_counter()
    q, c, a, b, radius = problem_data(problem)
    if q is None:
        raise WrongSolverError("solve_local needs a quadratic model; use solve_convex")
    rng = np.random.default_rng(seed)
    best = None
    fallback = None
    total = 0
    for x0 in _starting_points(q, c, radius, starts, rng):
        state = run_alm(q, c, a, b, radius, x0, tol, convex=False,
                        max_outer=max_outer, inner_maxiter=inner_maxiter)
        total += state.iterations
        if state.status == "infeasible":
            # the feasible set is convex, so one certificate settles it
            return make_report(problem, state.x, Status.INFEASIBLE, y=state.y, mu=state.mu,
                               iterations=total, wall_time=time.perf_counter() - start, log=state.log)
        if state.status == "converged":
            val = float(c @ state.x + state.x @ (q @ state.x))
            if best is None or val < best[0]:
                best = (val, state)
        elif fallback is None or state.kkt < fallback.kkt:
            fallback = state
    elapsed = time.perf_counter() - start
    if best is not None:
        state = best[1]
        return make_report(problem, state.x, Status.LOCAL_OPTIMAL, y=state.y, mu=state.mu,
                           iterations=total, wall_time=elapsed, log=state.log)
    return make_report(problem, fallback.x, Status.MAX_ITER, y=fallback.y, mu=fallback.mu,
                       iterations=total, wall_time=elapsed,
                       log=list(fallback.log) + ["no start reached the KKT tolerance"])
