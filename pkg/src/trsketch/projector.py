"""Gaussian sketching matrices and empirical checks of their distortion.

Three scaling conventions are supported because the two properties used by
the trust-region results pull in different directions:

* ``inv-sqrt-n``: entries ``N(0, 1/n)``. Rows are nearly orthonormal
  (``P P^T ~ I``), so lifting ``u -> P^T u`` nearly preserves norms, but
  ``||P x||^2 ~ (d/n) ||x||^2``.
* ``inv-sqrt-d``: entries ``N(0, 1/d)``. ``||P x||^2 ~ ||x||^2`` (the usual
  Johnson-Lindenstrauss scaling), but ``P P^T ~ (n/d) I``.
* ``orthonormal-rows``: a Gaussian draw whose rows are orthonormalized, so
  ``P P^T = I`` to rounding.

Nothing here rescales silently; each check reports what it measures under
the convention it was given.
"""

from __future__ import annotations

import enum
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._linalg import symmetric_spectral_norm
from ._validation import as_matrix, as_vector, check_open_unit, check_positive_int, check_seed
from .exceptions import DimensionError, InvalidInstanceError

__all__ = [
    "ScalingConvention",
    "Projector",
    "PropertyCheckReport",
    "sample_projector",
    "apply",
    "lift",
    "gram_deviation",
    "check_norm_preservation",
    "check_inner_product",
    "check_linear_map",
    "check_quadratic_form",
    "sample_unit_vectors",
    "save_projector",
    "load_projector",
]


class ScalingConvention(enum.Enum):
    GAUSSIAN_INV_SQRT_N = "inv-sqrt-n"
    GAUSSIAN_INV_SQRT_D = "inv-sqrt-d"
    ORTHONORMAL_ROWS = "orthonormal-rows"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            tokens = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown scaling convention {value!r}; expected one of {tokens}") from None

    @property
    def tag(self):
        return _TAGS[self]

    @classmethod
    def from_tag(cls, tag):
        for conv, t in _TAGS.items():
            if t == tag:
                return conv
        raise ValueError(f"unknown convention tag {tag}")


_TAGS = {
    ScalingConvention.GAUSSIAN_INV_SQRT_N: 0,
    ScalingConvention.GAUSSIAN_INV_SQRT_D: 1,
    ScalingConvention.ORTHONORMAL_ROWS: 2,
}


@dataclass(frozen=True, eq=False)
class Projector:
    """A ``d x n`` sketching matrix together with how it was drawn."""

    d: int
    n: int
    entries: np.ndarray
    convention: ScalingConvention
    seed: int

    def __post_init__(self):
        if self.entries.shape != (self.d, self.n):
            raise DimensionError(f"entries must be {self.d}x{self.n}, got {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("projector entries must be finite")
        self.entries.setflags(write=False)

    @property
    def provenance(self):
        return {"seed": self.seed, "convention": self.convention.value, "d": self.d, "n": self.n}


@dataclass(frozen=True)
class PropertyCheckReport:
    trials: int
    satisfied: int
    fraction: float
    epsilon: float
    worst_violation: float

    def as_dict(self):
        return {
            "trials": self.trials,
            "satisfied": self.satisfied,
            "fraction": self.fraction,
            "epsilon": self.epsilon,
            "worst_violation": self.worst_violation,
        }


def sample_projector(n, d, convention=ScalingConvention.GAUSSIAN_INV_SQRT_N, seed=0):
    """Draw a ``d x n`` projector; identical arguments give identical entries."""
    n = check_positive_int(n, "n")
    d = check_positive_int(d, "d")
    if d >= n:
        raise DimensionError(f"target dimension d={d} must be smaller than n={n}")
    convention = ScalingConvention.parse(convention)
    seed = check_seed(seed)
    g = np.random.default_rng(seed).standard_normal((d, n))
    if convention is ScalingConvention.GAUSSIAN_INV_SQRT_N:
        entries = g / np.sqrt(n)
    elif convention is ScalingConvention.GAUSSIAN_INV_SQRT_D:
        entries = g / np.sqrt(d)
    else:
        q, r = np.linalg.qr(g.T)
        # fix column signs so the factorization, hence P, is unique
        signs = np.where(np.diag(r) < 0, -1.0, 1.0)
        entries = np.ascontiguousarray((q * signs).T)
    return Projector(d=d, n=n, entries=entries, convention=convention, seed=seed)


def apply(projector, x):
    """Return ``P x``. A 2-D ``x`` is treated as a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != projector.n:
        raise DimensionError(f"expected vectors of length {projector.n}, got {x.shape[-1]}")
    return x @ projector.entries.T


def lift(projector, u):
    """Return ``P^T u``. A 2-D ``u`` is treated as a batch of row vectors."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != projector.d:
        raise DimensionError(f"expected vectors of length {projector.d}, got {u.shape[-1]}")
    return u @ projector.entries


def gram_deviation(projector):
    """Spectral norm of ``P P^T - I`` by symmetric power iteration."""
    p = projector.entries
    m = p @ p.T - np.eye(projector.d)
    value, converged = symmetric_spectral_norm(m)
    if not converged:
        warnings.warn("power iteration for ||PP^T - I|| hit its iteration cap", RuntimeWarning, stacklevel=2)
    return value


def _report(deviation, epsilon):
    deviation = np.asarray(deviation, dtype=float)
    satisfied = int(np.count_nonzero(deviation <= epsilon))
    trials = int(deviation.size)
    return PropertyCheckReport(
        trials=trials,
        satisfied=satisfied,
        fraction=satisfied / trials,
        epsilon=float(epsilon),
        worst_violation=float(deviation.max()),
    )


def _batch(xs, n, name):
    arr = np.atleast_2d(np.asarray(xs, dtype=float))
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must be nonempty")
    return as_matrix(arr, name, shape=(None, n))


def _pair_batches(pairs, n):
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 2:
        xs, ys = pairs
    else:
        pairs = list(pairs)
        if not pairs:
            raise ValueError("pairs must be nonempty")
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
    xs = _batch(xs, n, "x")
    ys = _batch(ys, n, "y")
    if xs.shape != ys.shape:
        raise DimensionError("pair components must have matching counts")
    return xs, ys


def check_norm_preservation(projector, xs, epsilon):
    """Count vectors with ``(1-eps)||x||^2 <= ||Px||^2 <= (1+eps)||x||^2``.

    ``worst_violation`` is the largest ``| ||Px||^2/||x||^2 - 1 |`` seen.
    """
    epsilon = check_open_unit(epsilon, "epsilon")
    xs = _batch(xs, projector.n, "xs")
    sq = np.einsum("ij,ij->i", xs, xs)
    if np.any(sq == 0):
        raise ValueError("xs contains a zero vector; the distortion ratio is undefined there")
    px = apply(projector, xs)
    dev = np.abs(np.einsum("ij,ij->i", px, px) / sq - 1.0)
    return _report(dev, epsilon)


def check_inner_product(projector, pairs, epsilon):
    """Count pairs with ``|<Px,Py> - <x,y>| <= eps ||x|| ||y||``."""
    epsilon = check_open_unit(epsilon, "epsilon")
    xs, ys = _pair_batches(pairs, projector.n)
    scale = np.linalg.norm(xs, axis=1) * np.linalg.norm(ys, axis=1)
    if np.any(scale == 0):
        raise ValueError("pairs contain a zero vector")
    exact = np.einsum("ij,ij->i", xs, ys)
    sketched = np.einsum("ij,ij->i", apply(projector, xs), apply(projector, ys))
    return _report(np.abs(sketched - exact) / scale, epsilon)


def check_linear_map(projector, a, xs, epsilon):
    """Count vectors with ``|A P^T P x - A x| <= eps ||x||`` componentwise.

    Every row of ``a`` must be a unit vector (to 1e-9).
    """
    epsilon = check_open_unit(epsilon, "epsilon")
    a = as_matrix(a, "A", shape=(None, projector.n))
    norms = np.linalg.norm(a, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-9)
    if bad.size:
        i = int(bad[0])
        raise InvalidInstanceError(f"row {i} of A has norm {norms[i]:.12g}, expected 1")
    xs = _batch(xs, projector.n, "xs")
    diff = lift(projector, apply(projector, xs)) @ a.T - xs @ a.T
    xnorm = np.linalg.norm(xs, axis=1)
    worst = np.abs(diff).max(axis=1) if a.shape[0] else np.zeros(xs.shape[0])
    with np.errstate(invalid="ignore", divide="ignore"):
        dev = np.where(xnorm > 0, worst / np.where(xnorm > 0, xnorm, 1.0), 0.0)
    return _report(dev, epsilon)


def check_quadratic_form(projector, q, pairs, epsilon):
    """Count pairs with ``|x^T P^T P Q P^T P y - x^T Q y| <= 3 eps ||x|| ||y|| ||Q||_*``."""
    from .model import nuclear_norm

    epsilon = check_open_unit(epsilon, "epsilon")
    n = projector.n
    q = as_matrix(q, "Q", shape=(n, n))
    xs, ys = _pair_batches(pairs, n)
    exact = np.einsum("ij,ij->i", xs @ q, ys)
    px = lift(projector, apply(projector, xs))
    py = lift(projector, apply(projector, ys))
    sketched = np.einsum("ij,ij->i", px @ q, py)
    norm_prod = np.linalg.norm(xs, axis=1) * np.linalg.norm(ys, axis=1) * nuclear_norm(q)
    err = np.abs(sketched - exact)
    safe = np.where(norm_prod > 0, norm_prod, 1.0)
    dev = np.where(norm_prod > 0, err / safe, np.where(err > 0, np.inf, 0.0))
    # dev is in units of ||x|| ||y|| ||Q||_*, so the bound reads dev <= 3 eps
    satisfied = int(np.count_nonzero(dev <= 3.0 * epsilon))
    return PropertyCheckReport(
        trials=int(dev.size),
        satisfied=satisfied,
        fraction=satisfied / dev.size,
        epsilon=epsilon,
        worst_violation=float(dev.max()),
    )


def sample_unit_vectors(n, count, rng):
    """``count`` vectors drawn uniformly from the unit sphere in ``R^n``."""
    rng = np.random.default_rng(rng)
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


_HEADER = struct.Struct("<8sIIBQ7x")
_MAGIC = b"TRSKPROJ"


def save_projector(projector, path):
    """Write the 32-byte header followed by row-major little-endian float64 entries."""
    header = _HEADER.pack(_MAGIC, projector.d, projector.n, projector.convention.tag, projector.seed)
    body = np.ascontiguousarray(projector.entries, dtype="<f8").tobytes(order="C")
    Path(path).write_bytes(header + body)


def load_projector(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated projector file")
    magic, d, n, tag, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * d * n
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    entries = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(d, n).astype(float)
    return Projector(d=d, n=n, entries=entries, convention=ScalingConvention.from_tag(tag), seed=seed)
