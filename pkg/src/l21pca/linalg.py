"""Dense linear-algebra kernels used by the solvers.

Matrices are plain ``numpy.ndarray`` objects in numpy's default (row-major)
layout. The factorizations are backed by LAPACK through ``numpy.linalg``;
this module adds input validation, a deterministic sign convention and the
orthogonal Procrustes maximizer.
"""

from typing import NamedTuple

import numpy as np

ORTHO_TOL = 1e-10
SYMMETRY_TOL = 1e-10


class LinAlgFailure(RuntimeError):
    """Raised when an underlying factorization does not converge."""


class ThinSvd(NamedTuple):
    u: np.ndarray  # d x m, orthonormal columns
    sigma: np.ndarray  # m, non-increasing, >= 0
    v: np.ndarray  # m x m, orthogonal


class Procrustes(NamedTuple):
    basis: np.ndarray
    objective: float
    degenerate: bool


def as_finite_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise ValueError(f"{name} has a non-finite entry at {tuple(int(i) for i in bad)}")
    return a


def is_orthonormal(w, tol=ORTHO_TOL):
    w = np.asarray(w, dtype=float)
    gram = w.T @ w
    return bool(np.max(np.abs(gram - np.eye(w.shape[1])), initial=0.0) <= tol)


def _fix_signs(u, v=None):
    # largest-magnitude entry of each column of u made non-negative
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u = u * signs
    if v is not None:
        v = v * signs
    return u, v


def thin_svd(m):
    """Thin SVD of a tall ``d x m`` matrix.

    Returns ``ThinSvd(u, sigma, v)`` with ``m == u @ diag(sigma) @ v.T``.
    Each column of ``u`` has its largest-magnitude entry non-negative.
    """
    m = as_finite_matrix(m, "svd input")
    d, k = m.shape
    if d < k:
        raise ValueError(f"thin_svd expects rows >= cols, got {d}x{k}")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"SVD did not converge on a {d}x{k} matrix") from exc
    u, v = _fix_signs(u, vt.T)
    return ThinSvd(u, s, v)


def sym_eig_top(a, m):
    """Top ``m`` eigenpairs of a symmetric matrix, eigenvalues non-increasing."""
    a = as_finite_matrix(a, "symmetric input")
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= {d}, got m={m}")
    try:
        vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure("symmetric eigensolver did not converge") from exc
    order = np.argsort(vals)[::-1][:m]
    vecs, _ = _fix_signs(vecs[:, order])
    return vecs, vals[order]


def orthogonal_procrustes_max(m):
    """Maximize ``Tr(W.T @ m)`` over column-orthonormal ``W``.

    The maximizer is ``U @ V.T`` from the thin SVD of ``m`` and the maximum
    equals the sum of singular values. When ``m`` is rank deficient the
    maximizer is not unique; ``degenerate`` is set and a valid maximizer is
    still returned.
    """
    svd = thin_svd(m)
    w = svd.u @ svd.v.T
    d = svd.u.shape[0]
    smax = svd.sigma[0] if svd.sigma.size else 0.0
    cutoff = max(smax, np.finfo(float).tiny) * np.finfo(float).eps * d
    degenerate = bool(svd.sigma.size and svd.sigma[-1] <= cutoff)
    return Procrustes(w, float(np.sum(svd.sigma)), degenerate)


def random_orthonormal(d, m, rng):
    """Seeded random ``d x m`` orthonormal matrix (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((d, m)))
    # Haar measure: absorb the signs of diag(r)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s
