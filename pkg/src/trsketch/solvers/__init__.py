from .ballqp import solve_ball_qp
from .convex import solve_convex, solve_local
from .chebyshev import fullness
from .grid import solve_oracle_small
from .lifting import lift_and_check
from .report import FullnessResult, LiftResult, SolveReport, Status, kkt_residual

__all__ = [
    "FullnessResult",
    "LiftResult",
    "SolveReport",
    "Status",
    "fullness",
    "kkt_residual",
    "lift_and_check",
    "solve_ball_qp",
    "solve_convex",
    "solve_local",
    "solve_oracle_small",
]
