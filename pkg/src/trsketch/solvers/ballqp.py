"""Global minimizer of a (possibly indefinite) quadratic over a Euclidean ball."""

from __future__ import annotations

import time
from types import SimpleNamespace

import numpy as np

from .._validation import as_matrix, as_vector
from .report import Status, make_report

SECULAR_TOL = 1e-12
SECULAR_MAXITER = 500


def _first_nonzero_positive(v):
    idx = np.flatnonzero(np.abs(v) > 1e-14)
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


def ball_qp_core(q, c, radius):
    """Solve ``min x^T Q x + c^T x, ||x|| <= radius``; return ``(x, mu, kind)``.

    ``mu`` is the ball multiplier in ``(2Q + mu I) x = -c``. ``kind`` is one of
    ``"interior"``, ``"boundary"`` or ``"hard"``.
    """
    n = c.shape[0]
    cnorm = float(np.linalg.norm(c))
    if radius == 0.0 or n == 0:
        return np.zeros(n), 0.0, "interior"
    if q is None or not np.any(q):
        if cnorm == 0.0:
            return np.zeros(n), 0.0, "interior"
        return -radius * c / cnorm, cnorm / radius, "boundary"

    lam, vecs = np.linalg.eigh(2.0 * q)
    gamma = vecs.T @ c
    scale = max(1.0, float(np.abs(lam).max()), cnorm / radius)
    lam_min = float(lam[0])
    mu_low = max(0.0, -lam_min)
    shifted = np.maximum(lam + mu_low, 0.0)
    bottom = shifted <= 1e-12 * scale
    gamma_tol = 1e-12 * max(cnorm, 1e-300)

    if lam_min > 1e-12 * scale:
        x = -gamma / lam
        if np.linalg.norm(x) <= radius:
            return vecs @ x, 0.0, "interior"

    def x_of(t):
        return -gamma / (shifted + t)

    if not np.any(np.abs(gamma[bottom]) > gamma_tol):
        # c has no component in the bottom eigenspace: check the limit point
        safe = np.where(bottom, 1.0, shifted)
        x_low = np.where(bottom, 0.0, -gamma / safe)
        norm_low = float(np.linalg.norm(x_low))
        if norm_low <= radius:
            if mu_low == 0.0:
                return vecs @ x_low, 0.0, "interior"
            tau = np.sqrt(max(radius**2 - norm_low**2, 0.0))
            v = _first_nonzero_positive(vecs[:, 0])
            return vecs @ x_low + tau * v, mu_low, "hard"

    # ||x(t)|| decreases from > radius at t -> 0+ to <= radius at t = |c|/radius
    lo, hi = 0.0, cnorm / radius
    t = hi
    for _ in range(SECULAR_MAXITER):
        xt = x_of(t)
        nrm = float(np.linalg.norm(xt))
        if abs(nrm - radius) <= SECULAR_TOL * radius:
            break
        if nrm > radius:
            lo = t
        else:
            hi = t
        if hi - lo <= SECULAR_TOL * max(1.0, hi):
            break
        # Newton step on 1/||x(t)|| - 1/radius, which is concave in t
        dphi = float(np.sum(gamma**2 / (shifted + t) ** 3)) / nrm**3
        step = (1.0 / nrm - 1.0 / radius) / dphi if dphi > 0 else np.inf
        t_new = t - step
        t = t_new if lo < t_new < hi else 0.5 * (lo + hi)
    x = x_of(t)
    return vecs @ x, mu_low + t, "boundary"


def solve_ball_qp(q, c, radius=1.0):
    """Global solution of the trust-region subproblem without linear constraints.

    Eigendecomposition plus safeguarded Newton/bisection on the secular
    equation in the ball multiplier, with the boundary-eigenvector completion
    in the hard case.
    """
    start = time.perf_counter()
    c = as_vector(c, "c")
    n = c.shape[0]
    q = None if q is None else as_matrix(q, "Q", shape=(n, n))
    if q is not None:
        q = 0.5 * (q + q.T)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    x, mu, kind = ball_qp_core(q, c, float(radius))
    problem = SimpleNamespace(Q=q, c=c, A=np.zeros((0, n)), b=np.zeros(0), radius=float(radius))
    return make_report(
        problem, x, Status.OPTIMAL, mu=mu, iterations=1,
        wall_time=time.perf_counter() - start, log=(f"ball-qp: {kind} solution",),
    )
