"""Closed-form dimension conditions, sandwich checks and gap bounds.

Everything here is a pure scalar computation. Logarithms are natural.
The universal constants ``C0`` and ``C1`` are configuration values; their
defaults are the smallest ones the guarantees admit, which makes the
resulting dimensions the least conservative.

Note that the dimension conditions are far out of desk reach: at
``epsilon=0.1`` and ``delta=0.05`` a 100-constraint problem already asks
for ``d >= 761`` and hence ``n`` in the millions. The guarantees are
therefore checked statistically at small scale by the harness.
"""

import math
import warnings
from dataclasses import asdict, dataclass

from .exceptions import DegenerateSetError, RegimeWarning

#: additive slack on every inequality so that solver tolerance cannot flip a verdict
CHECK_SLACK = 1e-9
#: additive slack on the fullness comparison (fullness is computed to ~1e-8)
FULLNESS_SLACK = 1e-6
#: the quadratic gap bound is certified only below this distortion
QUADRATIC_EPSILON_LIMIT = 0.1


@dataclass(frozen=True)
class BoundsConfig:
    """Universal constants and probability/distortion levels.

    Parameters
    ----------
    C0 : float
        Constant of the projected-dimension condition, ``C0 >= 1``.
    C1 : float
        Constant of the ambient-dimension condition, ``C1 > 1/4``.
    delta : float
        Failure probability in ``(0, 1)``.
    epsilon : float
        Distortion in ``(0, 1)``.
    """

    C0: float = 1.0
    C1: float = 0.25 + 1e-9
    delta: float = 0.05
    epsilon: float = 0.1

    def __post_init__(self):
        if not math.isfinite(self.C0) or self.C0 < 1.0:
            raise ValueError(f"C0 must be >= 1, got {self.C0}")
        if not math.isfinite(self.C1) or self.C1 <= 0.25:
            raise ValueError(f"C1 must be > 0.25, got {self.C1}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SandwichVerdict:
    """Outcome of a sandwich check.

    ``gap_observed`` is ``obj_minus - obj_plus`` and ``slack`` is
    ``gap_bound - gap_observed``; ``gap_bound`` is NaN when the caller did
    not supply one.
    """

    lower_holds: bool
    upper_holds: bool
    gap_bound: float
    gap_observed: float
    slack: float

    def as_dict(self):
        return asdict(self)


def _check_dimension_args(value, name, cfg):
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    if not 0.0 < cfg.delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {cfg.delta}")


def min_projected_dim(m, cfg):
    """Smallest ``d`` with ``d >= ln(m / delta) / (C0 * epsilon**2)``.

    Examples
    --------
    >>> min_projected_dim(100, BoundsConfig(delta=0.05, epsilon=0.1))
    761
    """
    _check_dimension_args(m, "m", cfg)
    return max(math.ceil(math.log(m / cfg.delta) / (cfg.C0 * cfg.epsilon**2)), 1)


def min_ambient_dim(d, cfg):
    """Smallest ``n`` with ``n >= (d + 1) ln(2d / delta) / (C1 * epsilon**2)``.

    Examples
    --------
    >>> min_ambient_dim(20, BoundsConfig(C1=0.25 + 1e-9, delta=0.05, epsilon=0.1))
    56151
    """
    _check_dimension_args(d, "d", cfg)
    return max(math.ceil((d + 1) * math.log(2 * d / cfg.delta) / (cfg.C1 * cfg.epsilon**2)), 1)


def _finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"sandwich inputs must be finite, got {v}")


def _verdict(obj_minus, obj_exact, obj_plus, upper_slack, gap_bound):
    gap = obj_minus - obj_plus
    return SandwichVerdict(
        lower_holds=bool(obj_minus >= obj_exact - CHECK_SLACK),
        upper_holds=bool(obj_exact >= obj_plus - upper_slack - CHECK_SLACK),
        gap_bound=float(gap_bound),
        gap_observed=float(gap),
        slack=float(gap_bound - gap),
    )


def linear_sandwich_check(obj_minus, obj_exact, obj_plus, epsilon, norm_c, gap_bound=math.nan):
    """Check ``obj_minus >= obj_exact >= obj_plus - epsilon * norm_c``."""
    _finite(obj_minus, obj_exact, obj_plus, epsilon, norm_c)
    return _verdict(obj_minus, obj_exact, obj_plus, epsilon * norm_c, gap_bound)


def quadratic_sandwich_check(obj_minus, obj_exact, obj_plus, epsilon, nuclear_Q, norm_c, gap_bound=math.nan):
    """Check ``obj_minus >= obj_exact >= obj_plus - 3 epsilon ||Q||_* - epsilon ||c||``."""
    _finite(obj_minus, obj_exact, obj_plus, epsilon, nuclear_Q, norm_c)
    if nuclear_Q < 0:
        raise ValueError(f"nuclear_Q must be nonnegative, got {nuclear_Q}")
    return _verdict(obj_minus, obj_exact, obj_plus, 3.0 * epsilon * nuclear_Q + epsilon * norm_c, gap_bound)


def _check_fullness(fullness):
    if not fullness > 0:
        raise DegenerateSetError(f"gap bounds need a full-dimensional feasible set, got fullness {fullness}")


def gap_bound_linear(epsilon, fullness, norm_c):
    """``18 * epsilon * norm_c / fullness``.

    Raises
    ------
    DegenerateSetError
        If ``fullness <= 0``.
    """
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5], got {epsilon}")
    _check_fullness(fullness)
    return 18.0 * epsilon * norm_c / fullness


def gap_bound_quadratic(epsilon, fullness, norm_c, *, warn=True):
    """``epsilon * (36 + 18 * norm_c) / fullness`` for normalized instances.

    The bound is certified only for ``epsilon < 0.1``; larger values are
    still evaluated but emit a :class:`RegimeWarning`.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    _check_fullness(fullness)
    if warn and not quadratic_gap_in_regime(epsilon):
        warnings.warn(
            f"quadratic gap bound is certified only for epsilon < {QUADRATIC_EPSILON_LIMIT}, got {epsilon}",
            RegimeWarning,
            stacklevel=2,
        )
    return epsilon * (36.0 + 18.0 * norm_c) / fullness


def quadratic_gap_in_regime(epsilon):
    return 0.0 < epsilon < QUADRATIC_EPSILON_LIMIT


def fullness_gap_check(full_original, full_projected_plus, epsilon):
    """Check ``full_projected_plus >= (1 - epsilon) * full_original`` up to 1e-6."""
    if full_original < 0 or full_projected_plus < 0:
        raise ValueError("fullness values must be nonnegative")
    return bool(full_projected_plus >= (1.0 - epsilon) * full_original - FULLNESS_SLACK)
