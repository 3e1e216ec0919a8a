"""Approximate trust-region subproblems by random projection and audit the result."""

from .model import (
    Direction,
    InstanceStats,
    NormalizationRecord,
    ProjectedInstance,
    TrsInstance,
    build_projected,
    generate_instance,
    instance_stats,
    normalize,
)
from .projector import Projector, PropertyCheckReport, ScalingConvention, sample_projector
from .bounds import BoundsConfig, SandwichVerdict
from .harness import ExperimentConfig, ExperimentSummary, TrialRecord, run_experiment, run_trial
from .estimators import RandomProjector, SketchedTrustRegionSolver

from ._version import __version__

__all__ = [
    "BoundsConfig",
    "ExperimentConfig",
    "ExperimentSummary",
    "RandomProjector",
    "SandwichVerdict",
    "SketchedTrustRegionSolver",
    "TrialRecord",
    "run_experiment",
    "run_trial",
    "Direction",
    "InstanceStats",
    "NormalizationRecord",
    "ProjectedInstance",
    "Projector",
    "PropertyCheckReport",
    "ScalingConvention",
    "TrsInstance",
    "build_projected",
    "generate_instance",
    "instance_stats",
    "normalize",
    "sample_projector",
]
