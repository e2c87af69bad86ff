"""Independent oracles and problem builders shared by the test modules."""

import numpy as np

from l21pca.framework import ConvexTerm, MaxProblem, solve_general_max, solve_l21_max
from l21pca.linalg import is_orthonormal, orthogonal_procrustes_max


def random_orthonormal(rng, d, m):
    q, _ = np.linalg.qr(rng.standard_normal((d, m)))
    return q


def direct_l21_loop(x, w, tolerance=1e-9, max_iterations=200):
    """Plain re-weight / SVD loop written straight from the update rules."""
    values = [np.sum(np.sqrt(np.sum((w.T @ x) ** 2, axis=0)))]
    for _ in range(max_iterations):
        proj = w.T @ x
        a = np.zeros_like(proj)
        for i in range(x.shape[1]):
            nrm = np.sqrt(proj[:, i] @ proj[:, i])
            if nrm != 0:
                a[:, i] = proj[:, i] / nrm
        m = np.zeros((x.shape[0], w.shape[1]))
        for i in range(x.shape[1]):
            m += np.outer(x[:, i], a[:, i])
        u, _, vt = np.linalg.svd(m, full_matrices=False)
        w = u @ vt
        values.append(np.sum(np.sqrt(np.sum((w.T @ x) ** 2, axis=0))))
        if abs(values[-1] - values[-2]) / max(1.0, abs(values[-2])) < tolerance:
            break
    return w, values


def procrustes_step(x):
    return lambda alphas: orthogonal_procrustes_max(x @ np.vstack(alphas)).basis


def l21_per_sample(x, w0, config=None):
    """PCA-L21 through solve_l21_max with one g_i(W) = W^T x_i per sample."""
    g_list = [lambda w, xi=xi: w.T @ xi for xi in x.T]
    return solve_l21_max(lambda w: 0.0, g_list, procrustes_step(x), w0, config,
                         is_feasible=is_orthonormal)


def _row_normalized(g):
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return np.where(norms > 0, g / np.where(norms > 0, norms, 1.0), 0.0)


def l21_single_term(x, w0, config=None):
    """PCA-L21 through solve_general_max with one matrix term h(X^T W) = ||X^T W||_{2,1}."""
    problem = MaxProblem(
        f=lambda w: 0.0,
        g_list=[lambda w: x.T @ w],
        h_list=[ConvexTerm(value=lambda g: float(np.linalg.norm(g, axis=1).sum()),
                           grad=_row_normalized)],
        subproblem_maximizer=lambda alphas: orthogonal_procrustes_max(x @ alphas[0]).basis,
        is_feasible=is_orthonormal,
    )
    return solve_general_max(problem, w0, config)
