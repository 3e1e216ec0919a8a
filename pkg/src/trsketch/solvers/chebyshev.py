"""Largest ball inside ``{Ax <= b} ∩ B(0, R)`` (the fullness of the set)."""

from __future__ import annotations

import numpy as np

from ._alm import run_alm
from .report import FullnessResult, problem_data

QP_TOL = 1e-10


def _inscribed_radius(a_hat, b_hat, radius, x):
    """Radius of the largest ball centred at ``x`` inside the set (negative if ``x`` is outside)."""
    t = radius - float(np.linalg.norm(x))
    if a_hat.shape[0]:
        t = min(t, float(np.min(b_hat - a_hat @ x)))
    return t


def _dual_radius_bound(a_hat, b_hat, radius, y):
    """Upper bound on the fullness implied by multipliers ``y >= 0``.

    With ``w = y / sum(y)``, no ball of radius ``r`` fits once
    ``b_hat^T w - r + (R - r) |A_hat^T w| < 0``.
    """
    total = float(np.sum(y))
    if not total > 0:
        return np.inf
    w = y / total
    g = float(np.linalg.norm(a_hat.T @ w))
    return (float(b_hat @ w) + radius * g) / (1.0 + g)


def _probe(a_hat, b_hat, radius, r, warm):
    """Test whether a ball of radius ``r`` fits.

    Returns ``(centre, None)`` when one is found, ``(None, bound)`` with a
    certified upper bound on the fullness when the shrunk set is empty, and
    ``(None, r)`` when the solve is inconclusive.
    """
    n = a_hat.shape[1]
    if r >= radius:
        x = np.zeros(n)
        return (x, None) if r == radius and np.all(b_hat >= r) else (None, radius)
    # zero objective: any KKT point is feasible, a Farkas certificate proves emptiness
    state = run_alm(None, np.zeros(n), a_hat, b_hat - r, radius - r, warm, QP_TOL,
                    convex=True, max_outer=40, inner_maxiter=2000)
    if state.status == "converged":
        return state.x, None
    if state.status == "infeasible":
        return None, min(r, _dual_radius_bound(a_hat, b_hat, radius, state.y))
    return None, r


def fullness(problem, tol=1e-8):
    """Radius of the largest ball inside the feasible set, by certified bisection.

    Each probe radius ``r`` is tested by a feasibility solve on the shrunk
    set ``{A_i x <= b_i - r |A_i|} ∩ B(0, R - r)``. A point found there
    lifts the lower end of the bracket to its exact inscribed radius; an
    emptiness certificate lowers the upper end to the bound its
    multipliers imply. Rows of ``A`` need not be unit, so projected sets
    are handled too.
    """
    _, c, a, b, radius = problem_data(problem)
    n = c.shape[0]
    norms = np.linalg.norm(a, axis=1) if a.shape[0] else np.zeros(0)
    zero = norms == 0
    if np.any(zero & (b < 0)):
        return FullnessResult(center=np.zeros(n), r=0.0, residual=float(-b[zero].min()), converged=False)
    a_hat = a[~zero] / norms[~zero, None]
    b_hat = b[~zero] / norms[~zero]

    center = np.zeros(n)
    if _inscribed_radius(a_hat, b_hat, radius, center) < 0:
        center, _ = _probe(a_hat, b_hat, radius, 0.0, center)
        if center is None:
            return FullnessResult(center=np.zeros(n), r=0.0, residual=np.inf, converged=False)
    lo = max(0.0, _inscribed_radius(a_hat, b_hat, radius, center))
    hi = radius
    while hi - lo > tol:
        r = 0.5 * (lo + hi)
        x, bound = _probe(a_hat, b_hat, radius, r, center)
        if x is None:
            hi = max(bound, lo)
            continue
        # x satisfies the shrunk constraints up to solver rounding
        center, lo = x, max(r, _inscribed_radius(a_hat, b_hat, radius, x))
    residual = max(0.0, lo - _inscribed_radius(a_hat, b_hat, radius, center))
    return FullnessResult(center=center, r=float(lo), residual=float(residual), converged=True)
