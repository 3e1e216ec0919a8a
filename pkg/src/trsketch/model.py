"""Trust-region subproblem instances and their projected counterparts.

An instance is ``min x^T Q x + c^T x  s.t.  A x <= b, ||x|| <= radius`` with
``Q`` optional (linear model when absent). The canonical form used by the
bounds has radius 1, unit-norm rows of ``A`` and ``||Q||_2 = 1``.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._validation import as_matrix, as_vector, check_positive_int, check_seed
from .exceptions import DegenerateModelWarning, DimensionError, InvalidInstanceError
from .projector import Projector

__all__ = [
    "TrsInstance",
    "NormalizationRecord",
    "ProjectedInstance",
    "Direction",
    "InstanceStats",
    "normalize",
    "denormalize",
    "instance_stats",
    "nuclear_norm",
    "generate_instance",
    "build_projected",
    "objective_value",
    "instance_to_dict",
    "instance_from_dict",
    "read_instance",
    "write_instance",
    "projected_to_dict",
]

UNIT_ROW_TOL = 1e-9
UNIT_Q_TOL = 1e-6


def objective_value(q, c, x):
    """``x^T Q x + c^T x`` (``q`` may be None)."""
    x = np.asarray(x, dtype=float)
    val = float(c @ x)
    if q is not None:
        val += float(x @ (q @ x))
    return val


@dataclass(frozen=True, eq=False)
class TrsInstance:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    Q: Optional[np.ndarray] = None
    radius: float = 1.0
    id: str = ""
    normalized: bool = False

    def __post_init__(self):
        c = as_vector(self.c, "c")
        n = c.shape[0]
        a = as_matrix(self.A, "A", shape=(None, n))
        b = as_vector(self.b, "b", size=a.shape[0])
        q = self.Q
        if q is not None:
            q = as_matrix(q, "Q", shape=(n, n))
            q = 0.5 * (q + q.T)
        radius = float(self.radius)
        if not (radius > 0 and math.isfinite(radius)):
            raise InvalidInstanceError(f"radius must be positive and finite, got {self.radius!r}")
        for name, value in (("c", c), ("A", a), ("b", b), ("Q", q), ("radius", radius)):
            object.__setattr__(self, name, value)
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
        if self.normalized:
            problems = _normalization_defects(self)
            if problems:
                raise InvalidInstanceError("instance flagged normalized but " + "; ".join(problems))

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def model(self):
        return "linear" if self.Q is None else "quadratic"

    def objective(self, x):
        return objective_value(self.Q, self.c, x)


def _normalization_defects(inst):
    problems = []
    if abs(inst.radius - 1.0) > 1e-12:
        problems.append(f"radius is {inst.radius}")
    if inst.m:
        dev = np.abs(np.linalg.norm(inst.A, axis=1) - 1.0)
        if dev.max() > UNIT_ROW_TOL:
            problems.append(f"row {int(dev.argmax())} of A is not unit")
    if inst.Q is not None and abs(np.linalg.norm(inst.Q, 2) - 1.0) > UNIT_Q_TOL:
        problems.append("||Q||_2 != 1")
    return problems


def is_normalized(inst):
    return not _normalization_defects(inst)


@dataclass(frozen=True)
class NormalizationRecord:
    """How an instance was rescaled.

    With ``x = radius_scale * x'``, the normalized data are
    ``A'_i = A_i / row_scales[i]``, ``b'_i = b_i / (row_scales[i] * radius_scale)``,
    ``Q' = radius_scale**2 Q / q_scale`` and ``c' = radius_scale c / objective_scale``,
    so that ``f(x) = objective_scale * f'(x')``.
    """

    row_scales: np.ndarray
    radius_scale: float
    q_scale: float
    objective_scale: float

    @property
    def c_factor(self):
        return self.radius_scale / self.objective_scale

    @property
    def q_factor(self):
        return self.radius_scale**2 / self.q_scale

    def to_original_point(self, x_normalized):
        return self.radius_scale * np.asarray(x_normalized, dtype=float)

    def to_original_objective(self, value):
        return self.objective_scale * value


def _snap_one(value, tol=1e-12):
    return 1.0 if abs(value - 1.0) <= tol else float(value)


def normalize(inst):
    """Rescale to radius 1, unit rows of ``A`` and ``||Q||_2 = 1``.

    Returns ``(normalized_instance, record)``. A zero ``Q`` is demoted to a
    linear model with a :class:`DegenerateModelWarning`.
    """
    radius = _snap_one(inst.radius)
    row_scales = np.linalg.norm(inst.A, axis=1) if inst.m else np.zeros(0)
    if np.any(row_scales == 0):
        i = int(np.flatnonzero(row_scales == 0)[0])
        raise InvalidInstanceError(f"row {i} of A is zero")
    row_scales = np.where(np.abs(row_scales - 1.0) <= 1e-12, 1.0, row_scales)
    a = inst.A / row_scales[:, None] if inst.m else inst.A.copy()
    b = inst.b / (row_scales * radius) if inst.m else inst.b.copy()
    c = radius * inst.c
    q = None
    q_scale = 1.0
    objective_scale = 1.0
    if inst.Q is not None:
        q_sub = radius**2 * inst.Q
        q_norm = float(np.linalg.norm(q_sub, 2))
        if q_norm == 0.0:
            warnings.warn(
                f"instance {inst.id!r} has Q = 0; treating it as a linear model",
                DegenerateModelWarning,
                stacklevel=2,
            )
        else:
            q_scale = _snap_one(q_norm)
            objective_scale = q_scale
            q = q_sub / q_scale
            c = c / objective_scale
    out = TrsInstance(c=c, A=a, b=b, Q=q, radius=1.0, id=inst.id, normalized=True)
    record = NormalizationRecord(
        row_scales=row_scales, radius_scale=radius, q_scale=q_scale, objective_scale=objective_scale
    )
    return out, record


def denormalize(inst, record):
    """Invert :func:`normalize`."""
    r = record.radius_scale
    a = inst.A * record.row_scales[:, None] if inst.m else inst.A.copy()
    b = inst.b * record.row_scales * r if inst.m else inst.b.copy()
    c = inst.c * record.objective_scale / r
    q = None if inst.Q is None else inst.Q * record.q_scale / r**2
    return TrsInstance(c=c, A=a, b=b, Q=q, radius=r * inst.radius, id=inst.id)


def nuclear_norm(q):
    return float(np.linalg.svd(np.asarray(q, dtype=float), compute_uv=False).sum())


@dataclass(frozen=True)
class InstanceStats:
    rank_k: int
    singular_values: tuple
    nuclear_norm: float
    spectral_norm_Q: float
    norm_c: float


def instance_stats(inst):
    norm_c = float(np.linalg.norm(inst.c))
    if inst.Q is None:
        return InstanceStats(0, (), 0.0, 0.0, norm_c)
    s = np.linalg.svd(inst.Q, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return InstanceStats(0, (), 0.0, 0.0, norm_c)
    kept = s[s > 1e-10 * s[0]]
    return InstanceStats(
        rank_k=int(kept.size),
        singular_values=tuple(float(v) for v in kept),
        nuclear_norm=float(kept.sum()),
        spectral_norm_Q=float(kept[0]),
        norm_c=norm_c,
    )


def generate_instance(
    n,
    m,
    model="linear",
    rank_k=0,
    fullness_target=0.1,
    seed=0,
    *,
    signature="psd",
    norm_c=1.0,
    margin_scale=0.05,
):
    """Random normalized instance whose feasible set contains a ball of radius ``fullness_target``.

    Rows of ``A`` are uniform on the sphere. An anchor ``x_bar`` is drawn
    uniformly from the ball of radius ``1 - 2 * fullness_target`` and
    ``b_i = A_i x_bar + fullness_target + margin_i`` with exponential margins,
    so ``B(x_bar, fullness_target)`` lies inside the feasible set.

    For ``model="quadratic"``, ``Q = U diag(s) U^T`` with ``U`` a random
    ``n x rank_k`` orthonormal frame, ``|s|`` in ``[0.1, 1]`` and ``max |s| = 1``.
    ``signature="psd"`` keeps every ``s`` positive; ``"indefinite"`` draws
    random signs with at least one negative (and one positive when
    ``rank_k >= 2``).
    """
    n = check_positive_int(n, "n", minimum=2)
    m = check_positive_int(m, "m", minimum=0)
    seed = check_seed(seed)
    if model not in ("linear", "quadratic"):
        raise ValueError(f"model must be 'linear' or 'quadratic', got {model!r}")
    if not 0.0 < fullness_target <= 0.5:
        raise ValueError(f"fullness_target must lie in (0, 0.5], got {fullness_target}")
    if model == "quadratic":
        rank_k = check_positive_int(rank_k, "rank_k")
        if rank_k > n:
            raise ValueError(f"rank_k={rank_k} exceeds n={n}")
        if signature not in ("psd", "indefinite"):
            raise ValueError(f"signature must be 'psd' or 'indefinite', got {signature!r}")
    if norm_c < 0 or margin_scale < 0:
        raise ValueError("norm_c and margin_scale must be nonnegative")

    rng = np.random.default_rng(seed)
    g = rng.standard_normal((m, n))
    a = g / np.linalg.norm(g, axis=1, keepdims=True)
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    anchor = (1.0 - 2.0 * fullness_target) * rng.uniform() ** (1.0 / n) * direction
    margins = rng.exponential(margin_scale, size=m) if margin_scale > 0 else np.zeros(m)
    b = a @ anchor + fullness_target + margins
    cdir = rng.standard_normal(n)
    c = norm_c * cdir / np.linalg.norm(cdir)
    q = None
    if model == "quadratic":
        frame, r = np.linalg.qr(rng.standard_normal((n, rank_k)))
        frame = frame * np.where(np.diag(r) < 0, -1.0, 1.0)
        s = np.sort(rng.uniform(0.1, 1.0, size=rank_k))[::-1]
        s[0] = 1.0
        if signature == "indefinite":
            signs = rng.choice([-1.0, 1.0], size=rank_k)
            if np.all(signs > 0):
                signs[rng.integers(rank_k)] = -1.0
            if rank_k >= 2 and np.all(signs < 0):
                signs[rng.integers(rank_k)] = 1.0
            s = s * signs
        q = (frame * s) @ frame.T
    inst_id = f"gen-{model}-n{n}-m{m}-s{seed}"
    return TrsInstance(c=c, A=a, b=b, Q=q, radius=1.0, id=inst_id, normalized=True)


class Direction(enum.Enum):
    MINUS = "minus"
    PLUS = "plus"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class ProjectedInstance:
    """One of the shrunk (``minus``) or relaxed (``plus``) problems in dimension ``d``."""

    direction: Direction
    epsilon: float
    cbar: np.ndarray
    Abar: np.ndarray
    bbar: np.ndarray
    ball_radius: float
    Qbar: Optional[np.ndarray] = None
    projector_ref: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.cbar.shape[0]

    # solver-facing aliases, shared with TrsInstance
    @property
    def n(self):
        return self.d

    @property
    def m(self):
        return self.Abar.shape[0]

    @property
    def Q(self):
        return self.Qbar

    @property
    def c(self):
        return self.cbar

    @property
    def A(self):
        return self.Abar

    @property
    def b(self):
        return self.bbar

    @property
    def radius(self):
        return self.ball_radius

    @property
    def model(self):
        return "linear" if self.Qbar is None else "quadratic"

    def objective(self, u):
        return objective_value(self.Qbar, self.cbar, u)


def build_projected(inst, projector, epsilon, direction):
    """Form ``min u^T P Q P^T u + (Pc)^T u`` over the shrunk or relaxed projected set."""
    direction = Direction.parse(direction)
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5], got {epsilon}")
    if projector.n != inst.n:
        raise DimensionError(f"projector has n={projector.n}, instance has n={inst.n}")
    defects = _normalization_defects(inst)
    if defects:
        raise InvalidInstanceError("build_projected needs a normalized instance: " + "; ".join(defects))
    p = projector.entries
    qbar = None
    if inst.Q is not None:
        qbar = p @ inst.Q @ p.T
        qbar = 0.5 * (qbar + qbar.T)
    if direction is Direction.MINUS:
        bbar = inst.b.copy()
        ball = 1.0 - epsilon
    else:
        bbar = inst.b + epsilon
        ball = 1.0 + epsilon
    return ProjectedInstance(
        direction=direction,
        epsilon=float(epsilon),
        cbar=p @ inst.c,
        Abar=inst.A @ p.T,
        bbar=bbar,
        ball_radius=ball,
        Qbar=qbar,
        projector_ref=projector.provenance,
    )


def _flat(arr):
    return [float(v) for v in np.asarray(arr, dtype=float).ravel()]


def instance_to_dict(inst):
    return {
        "id": inst.id,
        "n": inst.n,
        "m": inst.m,
        "model": inst.model,
        "Q": None if inst.Q is None else _flat(inst.Q),
        "c": _flat(inst.c),
        "A": _flat(inst.A),
        "b": _flat(inst.b),
        "radius": float(inst.radius),
        "normalized": bool(inst.normalized),
    }


def instance_from_dict(data):
    try:
        n = int(data["n"])
        m = int(data["m"])
        q = data.get("Q")
        if data.get("model", "quadratic" if q is not None else "linear") == "linear":
            q = None
        return TrsInstance(
            c=np.asarray(data["c"], dtype=float),
            A=np.asarray(data["A"], dtype=float).reshape(m, n),
            b=np.asarray(data["b"], dtype=float),
            Q=None if q is None else np.asarray(q, dtype=float).reshape(n, n),
            radius=float(data.get("radius", 1.0)),
            id=str(data.get("id", "")),
            normalized=bool(data.get("normalized", False)),
        )
    except KeyError as exc:
        raise InvalidInstanceError(f"instance JSON is missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, InvalidInstanceError):
            raise
        raise InvalidInstanceError(f"malformed instance JSON: {exc}") from None


def write_instance(inst, path):
    # json emits repr(float), the shortest string that round-trips the double exactly
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n", encoding="utf-8")


def read_instance(path):
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def projected_to_dict(proj):
    return {
        "direction": proj.direction.value,
        "epsilon": proj.epsilon,
        "d": proj.d,
        "m": proj.m,
        "model": proj.model,
        "Qbar": None if proj.Qbar is None else _flat(proj.Qbar),
        "cbar": _flat(proj.cbar),
        "Abar": _flat(proj.Abar),
        "bbar": _flat(proj.bbar),
        "ball_radius": proj.ball_radius,
        "projector": dict(proj.projector_ref),
    }


def projected_from_dict(data):
    try:
        d = int(data["d"])
        m = int(data["m"])
        q = data.get("Qbar")
        if len(data["cbar"]) != d or len(data["bbar"]) != m:
            raise ValueError(f"cbar/bbar lengths do not match d={d}, m={m}")
        return ProjectedInstance(
            direction=Direction.parse(data["direction"]),
            epsilon=float(data["epsilon"]),
            cbar=np.asarray(data["cbar"], dtype=float),
            Abar=np.asarray(data["Abar"], dtype=float).reshape(m, d),
            bbar=np.asarray(data["bbar"], dtype=float),
            ball_radius=float(data["ball_radius"]),
            Qbar=None if q is None else np.asarray(q, dtype=float).reshape(d, d),
            projector_ref=dict(data.get("projector") or {}),
        )
    except KeyError as exc:
        raise InvalidInstanceError(f"projected JSON is missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InvalidInstanceError(f"malformed projected JSON: {exc}") from None


def read_problem(path):
    """Load either an instance JSON or a projected-instance JSON."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise InvalidInstanceError(f"{path}: expected a JSON object")
    return projected_from_dict(data) if "direction" in data else instance_from_dict(data)
