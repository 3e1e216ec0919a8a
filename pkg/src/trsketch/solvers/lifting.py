"""Map projected solutions back to the original space and audit them."""

from __future__ import annotations

import numpy as np

from ..exceptions import DimensionError
from ..projector import lift
from .report import LiftResult

FEASIBILITY_TOL = 1e-9


def lift_and_check(inst, projector, report, feas_tol=FEASIBILITY_TOL):
    """Return ``x_hat = P^T u`` with its violations of the original constraints."""
    u = np.asarray(report.solution if hasattr(report, "solution") else report, dtype=float)
    if u.shape != (projector.d,):
        raise DimensionError(f"solution has shape {u.shape}, projector expects ({projector.d},)")
    if projector.n != inst.n:
        raise DimensionError(f"projector maps from n={projector.n}, instance has n={inst.n}")
    x_hat = lift(projector, u)
    lin = float(max(0.0, np.max(inst.A @ x_hat - inst.b))) if inst.m else 0.0
    ball = float(max(0.0, np.linalg.norm(x_hat) - inst.radius))
    return LiftResult(
        x_hat=x_hat,
        linear_violation=lin,
        ball_excess=ball,
        feasible=lin <= feas_tol and ball <= feas_tol,
        objective_in_original=inst.objective(x_hat),
    )
