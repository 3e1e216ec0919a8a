"""Result containers and the KKT residual shared by every solver."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..model import objective_value


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    LOCAL_OPTIMAL = "LocalOptimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: np.ndarray
    objective: float
    status: Status
    kkt_residual: float
    max_linear_violation: float
    ball_violation: float
    iterations: int
    wall_time: float
    multipliers: Optional[np.ndarray] = None
    ball_multiplier: float = 0.0
    log: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return self.status in (Status.OPTIMAL, Status.LOCAL_OPTIMAL)

    def as_dict(self):
        return {
            "solution": [float(v) for v in self.solution],
            "objective": self.objective,
            "status": self.status.value,
            "kkt_residual": self.kkt_residual,
            "max_linear_violation": self.max_linear_violation,
            "ball_violation": self.ball_violation,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "multipliers": None if self.multipliers is None else [float(v) for v in self.multipliers],
            "ball_multiplier": self.ball_multiplier,
            "log": list(self.log),
        }


@dataclass(frozen=True, eq=False)
class LiftResult:
    x_hat: np.ndarray
    linear_violation: float
    ball_excess: float
    feasible: bool
    objective_in_original: float


@dataclass(frozen=True, eq=False)
class FullnessResult:
    center: np.ndarray
    r: float
    residual: float
    converged: bool


def problem_data(problem):
    """``(Q, c, A, b, radius)`` of a TrsInstance or ProjectedInstance."""
    return problem.Q, problem.c, problem.A, problem.b, float(problem.radius)


def gradient(q, c, x):
    return c if q is None else 2.0 * (q @ x) + c


def violations(a, b, radius, x):
    lin = float(max(0.0, np.max(a @ x - b))) if a.shape[0] else 0.0
    ball = float(max(0.0, np.linalg.norm(x) - radius))
    return lin, ball


def ball_multiplier_estimate(q, c, a, x, y):
    """Least-squares ``mu >= 0`` for ``grad f + A^T y + mu x = 0``."""
    xx = float(x @ x)
    if xx == 0.0:
        return 0.0
    g = gradient(q, c, x) + (a.T @ y if a.shape[0] else 0.0)
    return max(0.0, -float(g @ x) / xx)


def kkt_residual(q, c, a, b, radius, x, y, mu):
    """Infinity-norm KKT residual for ``min x^T Q x + c^T x, Ax <= b, ||x|| <= radius``.

    Stationarity ``2Qx + c + A^T y + mu x = 0``, primal feasibility, dual
    sign and complementarity, each measured in the max norm; the largest is
    returned.
    """
    x = np.asarray(x, dtype=float)
    y = np.zeros(a.shape[0]) if y is None else np.asarray(y, dtype=float)
    g = gradient(q, c, x) + mu * x
    slack = a @ x - b if a.shape[0] else np.zeros(0)
    if a.shape[0]:
        g = g + a.T @ y
    norm_x = float(np.linalg.norm(x))
    parts = [float(np.max(np.abs(g))) if g.size else 0.0]
    parts.append(float(max(0.0, slack.max())) if slack.size else 0.0)
    parts.append(max(0.0, norm_x - radius))
    parts.append(float(max(0.0, -y.min())) if y.size else 0.0)
    parts.append(max(0.0, -mu))
    parts.append(float(np.max(np.abs(y * slack))) if y.size else 0.0)
    parts.append(abs(mu * (radius - norm_x)))
    return max(parts)


def make_report(problem, x, status, y=None, mu=None, iterations=0, wall_time=0.0, log=()):
    q, c, a, b, radius = problem_data(problem)
    x = np.asarray(x, dtype=float)
    if y is None:
        y = np.zeros(a.shape[0])
    if mu is None:
        mu = ball_multiplier_estimate(q, c, a, x, y)
    lin, ball = violations(a, b, radius, x)
    return SolveReport(
        solution=x,
        objective=objective_value(q, c, x),
        status=status,
        kkt_residual=kkt_residual(q, c, a, b, radius, x, y, mu),
        max_linear_violation=lin,
        ball_violation=ball,
        iterations=int(iterations),
        wall_time=float(wall_time),
        multipliers=np.asarray(y, dtype=float),
        ball_multiplier=float(mu),
        log=tuple(log),
    )
