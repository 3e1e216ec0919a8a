"""Small dense linear-algebra kernels."""

from __future__ import annotations

import numpy as np

POWER_RTOL = 1e-8
POWER_MAXITER = 10_000


def symmetric_spectral_norm(m, rtol=POWER_RTOL, maxiter=POWER_MAXITER):
    """Largest absolute eigenvalue of a symmetric matrix by power iteration.

    Returns ``(estimate, converged)``. The estimate ``||M v||`` with unit ``v``
    is nondecreasing over iterations for symmetric ``M``, so stopping on a
    small relative change is safe; hitting ``maxiter`` returns the current
    estimate with ``converged=False``.
    """
    m = np.asarray(m, dtype=float)
    size = m.shape[0]
    if size == 0:
        return 0.0, True
    v = np.random.default_rng(0).standard_normal(size)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(maxiter):
        w = m @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0, True
        v = w / new
        if abs(new - estimate) <= rtol * new:
            return new, True
        estimate = new
    return estimate, False


def orthonormal_complement(a, rtol=1e-10):
    """Return ``(rank, row_basis, null_basis)`` of a matrix from its SVD.

    ``row_basis`` has the right singular vectors spanning the row space as
    columns, ``null_basis`` an orthonormal basis of the null space.
    """
    n = a.shape[1]
    if a.shape[0] == 0:
        return 0, np.zeros((n, 0)), np.eye(n)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return rank, vt[:rank].T, vt[rank:].T
