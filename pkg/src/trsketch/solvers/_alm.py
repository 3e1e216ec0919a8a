"""Augmented-Lagrangian machinery for ``min x^T Q x + c^T x, Ax <= b, ||x|| <= R``.

The linear inequalities are handled by the (Rockafellar) augmented
Lagrangian; the ball is kept as a hard constraint through exact Euclidean
projection. Once the multiplier estimates stabilize, the active set they
suggest is handed to :func:`polish`, which solves the face problem exactly
(null-space reduction followed by the ball QP) and accepts the result only
if it is a KKT point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ballqp import ball_qp_core
from .report import ball_multiplier_estimate, gradient, kkt_residual

RHO_INIT = 10.0
RHO_MAX = 1e8
DUAL_DIVERGENCE = 1e8
FARKAS_MARGIN = 1e-9
ARMIJO = 1e-4


@dataclass
class AlmState:
    x: np.ndarray
    y: np.ndarray
    mu: float
    kkt: float
    iterations: int
    status: str  # "converged", "infeasible", "maxiter"
    log: list


def project_ball(x, radius):
    nrm = np.linalg.norm(x)
    return x if nrm <= radius else x * (radius / nrm)


def _merit(q, c, a, b, x, y, rho):
    val = float(c @ x)
    if q is not None:
        val += float(x @ (q @ x))
    if a.shape[0]:
        shifted = np.maximum(a @ x - b + y / rho, 0.0)
        val += 0.5 * rho * float(shifted @ shifted)
    return val


def _merit_grad(q, c, a, b, x, y, rho):
    g = gradient(q, c, x)
    if a.shape[0]:
        g = g + a.T @ np.maximum(y + rho * (a @ x - b), 0.0)
    return g


def _inner_fista(q, c, a, b, radius, x, y, rho, lip_q, norm_a2, tol, maxiter):
    """Accelerated projected gradient with adaptive restart (convex inner problem)."""
    lip = lip_q + rho * norm_a2 + 1e-12
    z = x.copy()
    t = 1.0
    for it in range(1, maxiter + 1):
        g = _merit_grad(q, c, a, b, z, y, rho)
        x_new = project_ball(z - g / lip, radius)
        gm = lip * np.linalg.norm(x_new - z)
        if gm <= tol:
            return x_new, it
        if (z - x_new) @ (x_new - x) > 0:
            t = 1.0
            z = x_new
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x = x_new
    return x, maxiter


def _inner_backtracking(q, c, a, b, radius, x, y, rho, step, tol, maxiter):
    """Projected gradient with halving line search (nonconvex inner problem)."""
    val = _merit(q, c, a, b, x, y, rho)
    for it in range(1, maxiter + 1):
        g = _merit_grad(q, c, a, b, x, y, rho)
        step = min(step * 2.0, 1e6)
        while True:
            x_new = project_ball(x - step * g, radius)
            d = x_new - x
            new_val = _merit(q, c, a, b, x_new, y, rho)
            if new_val <= val + ARMIJO * float(g @ d) or step < 1e-16:
                break
            step *= 0.5
        if np.linalg.norm(d) / step <= tol:
            return x_new, it, step
        x, val = x_new, new_val
    return x, maxiter, step


def farkas_gap(a, b, radius, y):
    """``-b^T w - radius ||A^T w||`` for ``w = y / sum(y)``; positive certifies infeasibility."""
    total = float(np.sum(y))
    if total <= 0:
        return -np.inf
    w = y / total
    return float(-(b @ w) - radius * np.linalg.norm(a.T @ w))


def _face_solve(q, c, a_w, b_w, radius):
    """Minimize over ``{A_W x = b_W, ||x|| <= radius}``; return ``(x, y_W, mu)`` or None."""
    n = c.shape[0]
    if a_w.shape[0]:
        u, s, vt = np.linalg.svd(a_w, full_matrices=False)
        rank = int(np.sum(s > 1e-10 * s[0])) if s[0] > 0 else 0
        row_basis = vt[:rank].T
        x0 = row_basis @ ((u[:, :rank].T @ b_w) / s[:rank])
        if np.max(np.abs(a_w @ x0 - b_w)) > 1e-10 * (1.0 + np.max(np.abs(b_w))):
            return None
    else:
        rank, row_basis, x0 = 0, np.zeros((n, 0)), np.zeros(n)
    rho2 = radius**2 - float(x0 @ x0)
    if rho2 < -1e-12 * radius**2:
        return None
    rho = np.sqrt(max(rho2, 0.0))
    mu = None
    if rank < n and rho > 0:
        g0 = gradient(q, c, x0)
        if q is None:
            # linear on the face: step from x0 against the face-projected gradient
            h = g0 - row_basis @ (row_basis.T @ g0)
            hn = float(np.linalg.norm(h))
            x, mu = (x0 - rho * h / hn, hn / rho) if hn > 0 else (x0, 0.0)
        else:
            null = np.linalg.qr(row_basis, mode="complete")[0][:, rank:] if rank else np.eye(n)
            z, mu, _ = ball_qp_core(null.T @ q @ null, null.T @ g0, rho)
            x = x0 + null @ z
    else:
        x = x0
    g = gradient(q, c, x)
    if not a_w.shape[0]:
        if mu is None:
            mu = ball_multiplier_estimate(q, c, a_w, x, np.zeros(0))
        return x, np.zeros(0), mu
    if mu is None:
        # face reduced to a point: recover y and mu jointly
        on_ball = np.linalg.norm(x) >= radius * (1.0 - 1e-12)
        cols = np.column_stack([a_w.T, x]) if on_ball else a_w.T
        sol = np.linalg.lstsq(cols, -g, rcond=None)[0]
        if on_ball:
            return x, sol[:-1], max(float(sol[-1]), 0.0)
        return x, sol, 0.0
    y_w = np.linalg.lstsq(a_w.T, -(g + mu * x), rcond=None)[0]
    return x, y_w, mu


def polish(q, c, a, b, radius, x, y, tol, max_rounds=30):
    """Active-set refinement from an approximate primal-dual pair.

    Returns ``(x, y, mu, kkt)`` for the best KKT point found, or None.
    """
    m = a.shape[0]
    scale = 1.0 + float(np.max(np.abs(b))) if m else 1.0
    best = None
    slack = a @ x - b if m else np.zeros(0)
    tried = set()
    for theta in (1e-6, 1e-4, 1e-2):
        active = set(np.flatnonzero((y > theta) | (slack > -theta)).tolist()) if m else set()
        for _ in range(max_rounds):
            key = frozenset(active)
            if key in tried:
                break
            tried.add(key)
            idx = np.array(sorted(active), dtype=int)
            out = _face_solve(q, c, a[idx], b[idx], radius)
            if out is None:
                if not idx.size:
                    break
                # inconsistent or too far out: drop the least-supported constraint
                active.discard(int(idx[np.argmin(y[idx])]))
                continue
            xp, y_w, mu = out
            full_y = np.zeros(m)
            full_y[idx] = y_w
            res = kkt_residual(q, c, a, b, radius, xp, full_y, mu)
            if best is None or res < best[3]:
                best = (xp, full_y, mu, res)
            if res <= tol:
                return best
            viol = a @ xp - b if m else np.zeros(0)
            if viol.size and viol.max() > 1e-12 * scale:
                active.add(int(np.argmax(viol)))
            elif y_w.size and y_w.min() < 0:
                active.discard(int(idx[np.argmin(y_w)]))
            else:
                break
    return best


def run_alm(q, c, a, b, radius, x0, tol, *, convex, max_outer=60, inner_maxiter=5000, lip_q=None):
    """Augmented-Lagrangian outer loop with polishing and infeasibility detection."""
    m = a.shape[0]
    x = project_ball(np.asarray(x0, dtype=float).copy(), radius)
    y = np.zeros(m)
    rho = RHO_INIT
    if lip_q is None:
        lip_q = 2.0 * float(np.linalg.norm(q, 2)) if q is not None else 0.0
    norm_a2 = float(np.linalg.norm(a, 2)) ** 2 if m else 0.0
    step = 1.0 / (lip_q + rho * norm_a2 + 1.0)
    total_iters = 0
    prev_viol = np.inf
    log = []
    best = None
    for k in range(max_outer):
        inner_tol = max(0.1 * tol, 10.0 ** (-1 - k))
        if convex:
            x, its = _inner_fista(q, c, a, b, radius, x, y, rho, lip_q, norm_a2, inner_tol, inner_maxiter)
        else:
            x, its, step = _inner_backtracking(q, c, a, b, radius, x, y, rho, step, inner_tol, inner_maxiter)
        total_iters += its
        slack = a @ x - b if m else np.zeros(0)
        if m:
            y = np.maximum(y + rho * slack, 0.0)
        viol = float(max(0.0, slack.max())) if m else 0.0
        mu = ball_multiplier_estimate(q, c, a, x, y)
        res = kkt_residual(q, c, a, b, radius, x, y, mu)
        if best is None or res < best[3]:
            best = (x.copy(), y.copy(), mu, res)
        if res <= tol:
            return AlmState(x, y, mu, res, total_iters, "converged", log)
        if viol <= 1e-2 or k >= 3:
            pol = polish(q, c, a, b, radius, x, y, tol)
            if pol is not None and pol[3] < best[3]:
                best = pol
            if pol is not None and pol[3] <= tol:
                log.append(f"polished active set after {k + 1} outer iterations")
                return AlmState(pol[0], pol[1], pol[2], pol[3], total_iters, "converged", log)
        if m:
            gap = farkas_gap(a, b, radius, y)
            if gap > FARKAS_MARGIN:
                log.append(f"Farkas certificate: gap {gap:.3e} at |y|_1 = {np.sum(y):.3e}")
                return AlmState(x, y, mu, res, total_iters, "infeasible", log)
            if np.linalg.norm(y) > DUAL_DIVERGENCE:
                log.append(f"dual norm exceeded {DUAL_DIVERGENCE:.0e} without a positive Farkas gap ({gap:.3e})")
                break
        if viol > 0.25 * prev_viol:
            rho = min(rho * 10.0, RHO_MAX)
        prev_viol = viol
    x, y, mu, res = best
    return AlmState(x, y, mu, res, total_iters, "maxiter", log)
