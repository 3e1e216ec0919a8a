"""scikit-learn style wrappers around the projector and the projected solve."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .model import Direction, TrsInstance, build_projected, normalize
from .projector import ScalingConvention, lift, sample_projector
from .solvers import lift_and_check, solve_convex, solve_local
from .solvers.convex import PSD_TOL, min_eigenvalue


def _resolve_seed(random_state):
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
    return int(random_state)


class RandomProjector(TransformerMixin, BaseEstimator):
    """Gaussian sketch ``x -> P x`` with ``inverse_transform`` the lift ``u -> P^T u``.

    Parameters
    ----------
    n_components : int
        Target dimension ``d``; must be smaller than the number of features.
    convention : str
        ``"inv-sqrt-n"``, ``"inv-sqrt-d"`` or ``"orthonormal-rows"``.
    random_state : int or None
        Seed of the projector; None draws a fresh one at fit time.

    Attributes
    ----------
    projector_ : Projector
    components_ : ndarray of shape (n_components, n_features_in_)
    """

    def __init__(self, n_components=10, convention="inv-sqrt-n", random_state=0):
        self.n_components = n_components
        self.convention = convention
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        self.projector_ = sample_projector(X.shape[1], self.n_components,
                                           ScalingConvention.parse(self.convention),
                                           _resolve_seed(self.random_state))
        self.components_ = self.projector_.entries
        return self

    def transform(self, X):
        check_is_fitted(self, "projector_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, projector was fitted with {self.n_features_in_}")
        return X @ self.components_.T

    def inverse_transform(self, X):
        check_is_fitted(self, "projector_")
        return lift(self.projector_, check_array(X))


class SketchedTrustRegionSolver(BaseEstimator):
    """Solve a trust-region subproblem through its shrunk and relaxed projections.

    ``fit`` takes a :class:`~trsketch.model.TrsInstance`, normalizes it,
    solves both projected problems and lifts the shrunk solution back.

    Attributes
    ----------
    projector_ : Projector
    report_minus_, report_plus_ : SolveReport
        Projected solves; ``report_minus_.objective`` is an upper estimate
        of the optimum whenever the lift is feasible.
    lift_ : LiftResult
        Audit of the lifted point in normalized coordinates.
    solution_ : ndarray
        Lifted point in the caller's original coordinates.
    objective_ : float
        Original objective at ``solution_``.
    """

    def __init__(self, n_components=10, epsilon=0.1, convention="inv-sqrt-n", method="auto",
                 tol=1e-8, random_state=0):
        self.n_components = n_components
        self.epsilon = epsilon
        self.convention = convention
        self.method = method
        self.tol = tol
        self.random_state = random_state

    def _solve(self, problem, seed):
        method = self.method
        if method == "auto":
            method = "local" if problem.Q is not None and min_eigenvalue(problem.Q) < -PSD_TOL else "convex"
        if method == "convex":
            return solve_convex(problem, tol=self.tol)
        if method == "local":
            return solve_local(problem, tol=self.tol, seed=seed)
        raise ValueError(f"method must be 'auto', 'convex' or 'local', got {self.method!r}")

    def fit(self, instance, y=None):
        if not isinstance(instance, TrsInstance):
            raise TypeError(f"fit expects a TrsInstance, got {type(instance).__name__}")
        inst, record = normalize(instance)
        seed = _resolve_seed(self.random_state)
        self.projector_ = sample_projector(inst.n, self.n_components,
                                           ScalingConvention.parse(self.convention), seed)
        self.report_minus_ = self._solve(build_projected(inst, self.projector_, self.epsilon, Direction.MINUS), seed)
        self.report_plus_ = self._solve(build_projected(inst, self.projector_, self.epsilon, Direction.PLUS), seed)
        self.lift_ = lift_and_check(inst, self.projector_, self.report_minus_)
        self.solution_ = record.to_original_point(self.lift_.x_hat)
        self.objective_ = instance.objective(self.solution_)
        self.n_features_in_ = inst.n
        return self

    def predict(self, X=None):
        """The lifted solution in original coordinates (``X`` is ignored)."""
        check_is_fitted(self, "solution_")
        return self.solution_
