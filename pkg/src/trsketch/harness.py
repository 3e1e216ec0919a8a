"""Monte-Carlo experiment engine: one record per trial, a CSV and a JSON summary.

Each trial draws a normalized instance and a projector from seeds derived
from ``(master_seed, trial_index)``, solves the shrunk (``minus``) and
relaxed (``plus``) projected problems plus an exact reference, lifts the
``minus`` solution and evaluates every bound check. Trials share no
mutable state, so they run in a thread pool and the output does not
depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ._version import __version__
from ._validation import check_positive_int, check_seed
from .bounds import (
    CHECK_SLACK,
    BoundsConfig,
    fullness_gap_check,
    gap_bound_linear,
    gap_bound_quadratic,
    linear_sandwich_check,
    quadratic_gap_in_regime,
    quadratic_sandwich_check,
)
from .model import Direction, build_projected, generate_instance, nuclear_norm, normalize
from .projector import ScalingConvention, sample_projector
from .solvers import Status, fullness, lift_and_check, solve_convex, solve_local, solve_oracle_small

COMPLETED = "Completed"
PROJECTED_INFEASIBLE = "ProjectedInfeasible"
SOLVER_FAILURE = "SolverFailure"

#: the grid oracle is exhaustive only in very small dimension
GRID_MAX_N = 3

CSV_COLUMNS = (
    "trial_index", "sub_seed", "status", "obj_minus", "obj_plus", "obj_exact", "exact_kind",
    "lift_feasible_minus", "lift_violation", "sandwich_lower", "sandwich_upper",
    "gap_observed", "gap_bound", "gap_within_bound", "full_original", "full_projected",
    "fullness_gap_ok", "t_generate", "t_project", "t_solve_minus", "t_solve_plus", "t_solve_exact",
)
BOOLEAN_COLUMNS = ("lift_feasible_minus", "sandwich_lower", "sandwich_upper", "gap_within_bound", "fullness_gap_ok")
FLOAT_COLUMNS = (
    "obj_minus", "obj_plus", "obj_exact", "lift_violation", "gap_observed", "gap_bound",
    "full_original", "full_projected", "t_generate", "t_project", "t_solve_minus",
    "t_solve_plus", "t_solve_exact",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment, mirrored one-to-one by the config JSON.

    ``signature`` selects psd or indefinite ``Q`` for quadratic models.
    ``record_timings`` fills the ``t_*`` CSV columns; it is off by default
    because wall-clock times would break byte-identical reruns.
    """

    n: int
    m: int
    d: int
    model: str = "linear"
    rank_k: int = 0
    signature: str = "psd"
    epsilon: float = 0.1
    delta: float = 0.05
    convention: ScalingConvention = ScalingConvention.GAUSSIAN_INV_SQRT_N
    trials: int = 100
    master_seed: int = 0
    fullness_target: float = 0.1
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    solver_tol: float = 1e-8
    feas_tol: float = 1e-9
    local_starts: int = 8
    record_timings: bool = False

    def __post_init__(self):
        n = check_positive_int(self.n, "n", minimum=2)
        check_positive_int(self.m, "m", minimum=0)
        d = check_positive_int(self.d, "d")
        if d >= n:
            raise ValueError(f"d={d} must be smaller than n={n}")
        if self.model not in ("linear", "quadratic"):
            raise ValueError(f"model must be 'linear' or 'quadratic', got {self.model!r}")
        if self.signature not in ("psd", "indefinite"):
            raise ValueError(f"signature must be 'psd' or 'indefinite', got {self.signature!r}")
        if self.model == "quadratic":
            check_positive_int(self.rank_k, "rank_k")
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5], got {self.epsilon}")
        check_positive_int(self.trials, "trials")
        check_seed(self.master_seed)
        check_positive_int(self.local_starts, "local_starts")
        object.__setattr__(self, "convention", ScalingConvention.parse(self.convention))
        bounds = self.bounds
        if isinstance(bounds, dict):
            bounds = BoundsConfig(**{"delta": self.delta, "epsilon": self.epsilon, **bounds})
        if bounds.delta != self.delta or bounds.epsilon != self.epsilon:
            bounds = replace(bounds, delta=self.delta, epsilon=self.epsilon)
        object.__setattr__(self, "bounds", bounds)

    @property
    def indefinite(self):
        return self.model == "quadratic" and self.signature == "indefinite"

    @property
    def quadratic_gap_enabled(self):
        return self.model == "quadratic" and quadratic_gap_in_regime(self.epsilon)

    def as_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["convention"] = self.convention.value
        out["bounds"] = {"C0": self.bounds.C0, "C1": self.bounds.C1}
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class TrialRecord:
    """One row of ``trials.csv``; ``None`` marks an absent value (empty cell)."""

    trial_index: int
    sub_seed: int
    status: str = COMPLETED
    obj_minus: Optional[float] = None
    obj_plus: Optional[float] = None
    obj_exact: Optional[float] = None
    exact_kind: str = "none"
    lift_feasible_minus: Optional[bool] = None
    lift_violation: Optional[float] = None
    sandwich_lower: Optional[bool] = None
    sandwich_upper: Optional[bool] = None
    gap_observed: Optional[float] = None
    gap_bound: Optional[float] = None
    gap_within_bound: Optional[bool] = None
    full_original: Optional[float] = None
    full_projected: Optional[float] = None
    fullness_gap_ok: Optional[bool] = None
    t_generate: Optional[float] = None
    t_project: Optional[float] = None
    t_solve_minus: Optional[float] = None
    t_solve_plus: Optional[float] = None
    t_solve_exact: Optional[float] = None
    #: where a SolverFailure happened; not part of the CSV schema
    stage: str = ""

    def row(self):
        return [_format_cell(getattr(self, name)) for name in CSV_COLUMNS]


@dataclass
class ExperimentSummary:
    counts: dict
    frequencies: dict
    means: dict
    maxima: dict
    failure_stages: dict
    exact_kinds: dict
    config: Optional[dict] = None
    version: str = __version__
    wall_time: Optional[float] = None

    def as_dict(self):
        return asdict(self)


def trial_seed(master_seed, trial_index):
    """64-bit seed of one trial, independent of every other trial's seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _stage_seeds(sub_seed):
    inst_seed, proj_seed, local_seed = np.random.SeedSequence(sub_seed).generate_state(3, np.uint64)
    return int(inst_seed), int(proj_seed), int(local_seed)


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled
        self._start = None

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._start if self.enabled else None
        return False


def _solve_projected(cfg, problem, local_seed):
    if cfg.indefinite:
        return solve_local(problem, starts=cfg.local_starts, tol=cfg.solver_tol, seed=local_seed)
    return solve_convex(problem, tol=cfg.solver_tol)


def _solve_exact(cfg, inst, local_seed):
    """Reference optimum and its kind: ``global`` or ``local``."""
    if not cfg.indefinite:
        return solve_convex(inst, tol=cfg.solver_tol), "global"
    if inst.n <= GRID_MAX_N:
        return solve_oracle_small(inst), "global"
    return solve_local(inst, starts=cfg.local_starts, tol=cfg.solver_tol, seed=local_seed), "local"


def _fail(rec, stage):
    rec.status = SOLVER_FAILURE
    rec.stage = stage
    return rec


def run_trial(cfg, trial_index):
    """Run one trial end to end; identical arguments give an identical record."""
    sub_seed = trial_seed(cfg.master_seed, trial_index)
    inst_seed, proj_seed, local_seed = _stage_seeds(sub_seed)
    rec = TrialRecord(trial_index=int(trial_index), sub_seed=sub_seed)
    timed = cfg.record_timings

    with _Clock(timed) as clk:
        raw = generate_instance(cfg.n, cfg.m, cfg.model, cfg.rank_k, cfg.fullness_target, inst_seed,
                                signature=cfg.signature)
        inst, _ = normalize(raw)
    rec.t_generate = clk.elapsed

    full = fullness(inst)
    if not full.converged or not full.r > 0:
        return _fail(rec, "fullness_original")
    rec.full_original = full.r

    with _Clock(timed) as clk:
        projector = sample_projector(cfg.n, cfg.d, cfg.convention, proj_seed)
        minus = build_projected(inst, projector, cfg.epsilon, Direction.MINUS)
        plus = build_projected(inst, projector, cfg.epsilon, Direction.PLUS)
    rec.t_project = clk.elapsed

    with _Clock(timed) as clk:
        rep_minus = _solve_projected(cfg, minus, local_seed)
    rec.t_solve_minus = clk.elapsed
    if rep_minus.status is Status.INFEASIBLE:
        rec.status = PROJECTED_INFEASIBLE
        return rec
    if not rep_minus.ok:
        return _fail(rec, "solve_minus")
    rec.obj_minus = rep_minus.objective

    with _Clock(timed) as clk:
        rep_plus = _solve_projected(cfg, plus, local_seed)
    rec.t_solve_plus = clk.elapsed
    if not rep_plus.ok:
        return _fail(rec, "solve_plus")
    rec.obj_plus = rep_plus.objective

    with _Clock(timed) as clk:
        rep_exact, kind = _solve_exact(cfg, inst, local_seed)
    rec.t_solve_exact = clk.elapsed
    if not rep_exact.ok:
        return _fail(rec, "solve_exact")
    rec.obj_exact = rep_exact.objective
    rec.exact_kind = kind

    lifted = lift_and_check(inst, projector, rep_minus, feas_tol=cfg.feas_tol)
    rec.lift_feasible_minus = lifted.feasible
    rec.lift_violation = max(lifted.linear_violation, lifted.ball_excess)

    norm_c = float(np.linalg.norm(inst.c))
    if cfg.model == "linear":
        bound = gap_bound_linear(cfg.epsilon, full.r, norm_c)
        verdict = linear_sandwich_check(rec.obj_minus, rec.obj_exact, rec.obj_plus, cfg.epsilon, norm_c, bound)
    else:
        bound = gap_bound_quadratic(cfg.epsilon, full.r, norm_c) if cfg.quadratic_gap_enabled else math.nan
        verdict = quadratic_sandwich_check(rec.obj_minus, rec.obj_exact, rec.obj_plus, cfg.epsilon,
                                           nuclear_norm(inst.Q), norm_c, bound)
    rec.sandwich_lower = verdict.lower_holds
    rec.sandwich_upper = verdict.upper_holds
    rec.gap_observed = verdict.gap_observed
    if math.isfinite(bound):
        rec.gap_bound = bound
        rec.gap_within_bound = bool(verdict.gap_observed <= bound + CHECK_SLACK)

    full_plus = fullness(plus)
    if not full_plus.converged:
        return _fail(rec, "fullness_plus")
    rec.full_projected = full_plus.r
    rec.fullness_gap_ok = fullness_gap_check(full.r, full_plus.r, cfg.epsilon)
    return rec


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def write_trials_csv(records, path):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)  # RFC-4180: CRLF line ends, minimal quoting
            writer.writerow(CSV_COLUMNS)
            for rec in sorted(records, key=lambda r: r.trial_index):
                writer.writerow(rec.row())
    except OSError as exc:
        raise OSError(f"cannot write trials CSV {path}: {exc}") from exc


def _parse_cell(name, text):
    if text == "":
        return None
    if name in BOOLEAN_COLUMNS:
        if text not in ("true", "false"):
            raise ValueError(f"column {name}: expected true/false, got {text!r}")
        return text == "true"
    if name in FLOAT_COLUMNS:
        return float(text)
    if name in ("trial_index", "sub_seed"):
        return int(text)
    return text


def read_trials_csv(path):
    """Parse a ``trials.csv`` back into records (the ``stage`` annotation is not stored)."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_COLUMNS:
                raise ValueError(f"{path}: header does not match the trials.csv schema")
            return [TrialRecord(**{k: _parse_cell(k, v) for k, v in zip(header, row)}) for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read trials CSV {path}: {exc}") from exc


def _frequency(flags):
    total = len(flags)
    hits = int(sum(flags))
    return {"frequency": hits / total if total else None, "count": hits, "denominator": total}


def _stats(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    return float(np.mean(vals)), float(np.max(vals))


def summarize(records, config=None, wall_time=None):
    """Aggregate trial records; frequencies are over Completed trials where the column is present."""
    done = [r for r in records if r.status == COMPLETED]
    counts = {
        "trials": len(records),
        "completed": len(done),
        "projected_infeasible": sum(r.status == PROJECTED_INFEASIBLE for r in records),
        "solver_failure": sum(r.status == SOLVER_FAILURE for r in records),
    }
    counts["projected_infeasible_rate"] = counts["projected_infeasible"] / len(records) if records else None
    freqs = {name: _frequency([getattr(r, name) for r in done if getattr(r, name) is not None])
             for name in BOOLEAN_COLUMNS}
    freqs["sandwich_lower_given_feasible_lift"] = _frequency(
        [r.sandwich_lower for r in done if r.lift_feasible_minus and r.sandwich_lower is not None])
    means, maxima = {}, {}
    for name in ("gap_observed", "gap_bound", "lift_violation", "full_original", "full_projected"):
        means[name], maxima[name] = _stats([getattr(r, name) for r in done])
    ratios = [r.gap_observed / r.gap_bound for r in done if r.gap_bound and r.gap_observed is not None]
    means["gap_ratio"], maxima["gap_ratio"] = _stats(ratios)
    stages = {}
    for r in records:
        if r.status == SOLVER_FAILURE:
            key = r.stage or "unknown"
            stages[key] = stages.get(key, 0) + 1
    kinds = {}
    for r in done:
        kinds[r.exact_kind] = kinds.get(r.exact_kind, 0) + 1
    return ExperimentSummary(counts=counts, frequencies=freqs, means=means, maxima=maxima,
                             failure_stages=stages, exact_kinds=kinds, config=config, wall_time=wall_time)


def resolve_threads(threads=None):
    """Worker count: ``threads`` (default: CPU count), capped by ``TRSKETCH_THREADS``."""
    count = threads if threads is not None else (os.cpu_count() or 1)
    cap = os.environ.get("TRSKETCH_THREADS")
    if cap:
        count = min(count, check_positive_int(int(cap), "TRSKETCH_THREADS"))
    return check_positive_int(count, "threads")


def run_experiment(cfg, out_dir=None, threads=None):
    """Run all trials and, if ``out_dir`` is given, write ``trials.csv`` and ``summary.json``.

    Returns
    -------
    records : list of TrialRecord
        Ordered by trial index.
    summary : ExperimentSummary
    """
    start = time.perf_counter()
    workers = min(resolve_threads(threads), cfg.trials)
    if workers == 1:
        records = [run_trial(cfg, i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: run_trial(cfg, i), range(cfg.trials)))
    summary = summarize(records, config=cfg.as_dict(), wall_time=time.perf_counter() - start)
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc}") from exc
        write_trials_csv(records, out / "trials.csv")
        write_summary(summary, out / "summary.json")
    return records, summary


def write_summary(summary, path):
    path = Path(path)
    try:
        path.write_text(json.dumps(summary.as_dict(), indent=2, allow_nan=False) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary {path}: {exc}") from exc
