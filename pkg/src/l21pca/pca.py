"""PCA variants: classic, greedy PCA-L1, R1-PCA, non-greedy PCA-L21 and 2-D PCA-L21.

Data matrices are ``d x n`` with one sample per column. Solvers expect
centered input (see ``center``) and return a ``PcaResult`` whose ``w`` has
orthonormal columns.
"""

from dataclasses import dataclass, field

import numpy as np

from .framework import SolverConfig, SolveTrace, relative_change
from .linalg import as_finite_matrix, orthogonal_procrustes_max, random_orthonormal, sym_eig_top

METHODS = ("classic", "l1", "r1", "l21")


@dataclass
class PcaResult:
    w: np.ndarray
    trace: SolveTrace
    method: str
    mean: np.ndarray = None

    @property
    def objective(self):
        return self.trace.final_objective


@dataclass
class TensorPcaResult:
    u: np.ndarray
    v: np.ndarray
    trace: SolveTrace
    mean: np.ndarray = field(default=None)


def center(x):
    """Subtract the sample mean. Returns ``(centered, mean)``."""
    x = as_finite_matrix(x, "data")
    if x.shape[1] < 1:
        raise ValueError("need at least one sample")
    mean = x.mean(axis=1)
    return x - mean[:, None], mean


def center_tensor(samples):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3 or samples.shape[0] < 1:
        raise ValueError(f"expected an (n, r, c) stack with n >= 1, got {samples.shape}")
    mean = samples.mean(axis=0)
    return samples - mean, mean


def _check_rank(x, m, limit):
    if not 1 <= m <= limit:
        raise ValueError(f"m must be in [1, {limit}] for data of shape {x.shape}, got {m}")


def _one_shot_trace(value):
    return SolveTrace(objective_per_iteration=[float(value)], iterations=0, converged=True,
                      termination_reason="tolerance")


def pca_classic(x, m):
    """Top-``m`` eigenvectors of the scatter matrix ``X X^T``."""
    x = as_finite_matrix(x, "data")
    d, n = x.shape
    _check_rank(x, m, min(d, n))
    w, vals = sym_eig_top(x @ x.T, m)
    return PcaResult(w=w, trace=_one_shot_trace(np.sum(vals)), method="classic",
                     mean=np.zeros(d))


def _orthonormal_completion(w, d, count):
    # deterministic: QR of [W | I] spans R^d
    q, _ = np.linalg.qr(np.hstack([w, np.eye(d)]))
    return q[:, w.shape[1]:w.shape[1] + count]


def _l1_fixed_point(y, w, max_iterations):
    p = np.where(w @ y >= 0, 1.0, -1.0)
    values = []
    for _ in range(max_iterations):
        w = y @ p
        w /= np.linalg.norm(w)
        values.append(float(np.abs(w @ y).sum()))
        p_new = np.where(w @ y >= 0, 1.0, -1.0)
        if np.array_equal(p_new, p):
            return w, values, True
        p = p_new
    return w, values, False


def _l1_direction(y, config, rng, notes, k):
    """Polarity-flip fixed point for ``max_{|w|=1} sum_i |w^T y_i|``.

    Returns ``(w, objectives, iterations, converged)``.
    """
    norms = np.linalg.norm(y, axis=0)
    live = norms > 0
    w = y[:, np.argmax(norms)] / norms.max()
    objectives = [float(np.abs(w @ y).sum())]
    w, values, converged = _l1_fixed_point(y, w, config.max_iterations)
    objectives.extend(values)
    iterations = len(values)

    def on_kink(w):
        return np.any(np.abs(w @ y)[live] <= 1e-12 * norms[live])

    reruns = 0
    while converged and on_kink(w) and reruns < 3:
        reruns += 1
        nudged = w + rng.standard_normal(w.shape) * 1e-4 * np.linalg.norm(w)
        nudged /= np.linalg.norm(nudged)
        w_new, values, ok = _l1_fixed_point(y, nudged, config.max_iterations)
        iterations += len(values)
        if values[-1] < objectives[-1]:
            notes.append(f"direction {k}: perturbed re-run {reruns} did not improve; kept previous")
            break
        # only the accepted end point enters the trace
        w, converged = w_new, ok
        objectives.append(values[-1])
    if converged and on_kink(w) and reruns == 3:
        notes.append(f"direction {k}: zero projections remain after 3 perturbed re-runs")
    if not converged:
        notes.append(f"direction {k}: hit max_iterations")
    return w, objectives, iterations, converged


def pca_l1_greedy(x, m, config=None):
    """Greedy PCA-L1: directions found one at a time with deflation.

    The collected directions are re-orthonormalized at the end. The trace is
    the cumulative L1 objective: finished directions plus the current one.
    """
    config = config or SolverConfig()
    x = as_finite_matrix(x, "data")
    d, n = x.shape
    _check_rank(x, m, d)
    if not np.any(x):
        raise ValueError("data matrix is all zeros")
    rng = np.random.default_rng(config.seed)
    trace = SolveTrace(converged=True, termination_reason="tolerance")
    scale = np.abs(x).max()
    y = x.copy()
    directions = []
    done = 0.0
    for k in range(m):
        if np.abs(y).max() <= 1e-12 * scale:
            fill = _orthonormal_completion(np.column_stack(directions), d, m - k)
            directions.extend(fill.T)
            trace.notes.append(f"data exhausted after {k} directions; completed the basis")
            break
        w, objectives, iterations, ok = _l1_direction(y, config, rng, trace.notes, k)
        trace.objective_per_iteration.extend(done + v for v in objectives)
        trace.iterations += iterations
        if not ok:
            trace.converged = False
            trace.termination_reason = "max_iterations"
        done += objectives[-1]
        directions.append(w)
        y = y - np.outer(w, w @ y)
    w = np.column_stack(directions)
    q, r = np.linalg.qr(w)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return PcaResult(w=q, trace=trace, method="l1", mean=np.zeros(d))


def _residual_norms(x, w):
    return np.linalg.norm(x - w @ (w.T @ x), axis=0)


def r1_pca(x, m, config=None, eps=1e-8):
    """R1-PCA: minimize ``sum_i ||x_i - W W^T x_i||_2`` by reweighted eigensolves.

    Weights are ``1 / max(residual_i, eps)``; ``W`` becomes the top-``m``
    eigenvectors of the weighted scatter. Starts from classic PCA. Should an
    update raise the objective (possible only through the ``eps`` floor) the
    previous ``W`` is kept and the run stops.
    """
    config = config or SolverConfig()
    x = as_finite_matrix(x, "data")
    d, n = x.shape
    _check_rank(x, m, d)
    w = sym_eig_top(x @ x.T, m)[0] if m < d else np.eye(d)
    resid = _residual_norms(x, w)
    trace = SolveTrace(objective_per_iteration=[float(resid.sum())], maximize=False)
    for t in range(1, config.max_iterations + 1):
        c = 1.0 / np.maximum(resid, eps)
        w_new, _ = sym_eig_top((x * c) @ x.T, m)
        resid_new = _residual_norms(x, w_new)
        value, previous = float(resid_new.sum()), trace.objective_per_iteration[-1]
        trace.iterations = t
        if value > previous:
            trace.notes.append(f"iteration {t} increased the objective; kept previous W")
            trace.converged = True
            trace.termination_reason = "tolerance"
            break
        w, resid = w_new, resid_new
        trace.objective_per_iteration.append(value)
        if relative_change(previous, value) < config.tolerance:
            trace.converged = True
            trace.termination_reason = "tolerance"
            break
    return PcaResult(w=w, trace=trace, method="r1", mean=np.zeros(d))


def l21_weights(p):
    """Column-normalize ``p``; columns with zero norm stay exactly zero."""
    norms = np.linalg.norm(p, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return np.where(norms > 0, p / safe, 0.0), norms


def pca_l21(x, m, config=None, init="classic_pca", w0=None):
    """Non-greedy PCA-L21: maximize ``sum_i ||W^T x_i||_2`` over orthonormal ``W``.

    Each iteration normalizes the projected samples, forms
    ``M = sum_i x_i alpha_i^T`` and sets ``W`` to the Procrustes maximizer of
    ``M``. ``init`` is ``"classic_pca"`` (warm start) or ``"seeded_random"``;
    an explicit ``w0`` overrides both.
    """
    config = config or SolverConfig()
    x = as_finite_matrix(x, "data")
    d, n = x.shape
    _check_rank(x, m, min(d, n))
    if not np.any(x):
        raise ValueError("data matrix is all zeros")
    if w0 is not None:
        w = np.asarray(w0, dtype=float)
        if w.shape != (d, m):
            raise ValueError(f"w0 must be {d}x{m}, got {w.shape}")
    elif init == "classic_pca":
        w = sym_eig_top(x @ x.T, m)[0]
    elif init == "seeded_random":
        w = random_orthonormal(d, m, np.random.default_rng(config.seed))
    else:
        raise ValueError(f"unknown init {init!r}")

    alpha, norms = l21_weights(w.T @ x)
    trace = SolveTrace(objective_per_iteration=[float(norms.sum())])
    for t in range(1, config.max_iterations + 1):
        w = orthogonal_procrustes_max(x @ alpha.T).basis
        alpha, norms = l21_weights(w.T @ x)
        value, previous = float(norms.sum()), trace.objective_per_iteration[-1]
        trace.objective_per_iteration.append(value)
        trace.iterations = t
        if relative_change(previous, value) < config.tolerance:
            trace.converged = True
            trace.termination_reason = "tolerance"
            break
    return PcaResult(w=w, trace=trace, method="l21", mean=np.zeros(d))


def _block_norms(blocks, w):
    proj = np.einsum("ndp,dm->nmp", blocks, w)
    return proj, np.sqrt(np.einsum("nmp,nmp->n", proj, proj))


def _l21_blocks(blocks, w, config):
    """PCA-L21 iterations for grouped samples: ``max sum_i ||W^T B_i||_F``."""
    proj, norms = _block_norms(blocks, w)
    values = [float(norms.sum())]
    for _ in range(config.max_iterations):
        safe = np.where(norms > 0, norms, 1.0)
        alpha = np.where(norms[:, None, None] > 0, proj / safe[:, None, None], 0.0)
        w = orthogonal_procrustes_max(np.einsum("ndp,nmp->dm", blocks, alpha)).basis
        proj, norms = _block_norms(blocks, w)
        values.append(float(norms.sum()))
        if relative_change(values[-2], values[-1]) < config.tolerance:
            break
    return w, values


def pca_l21_2d(samples, k1, k2, config=None, inner_tolerance=1e-6):
    """2-D PCA-L21: ``max sum_i ||U^T X_i V||_F`` by alternating PCA-L21 solves.

    ``samples`` is an ``(n, r, c)`` stack, assumed centered. ``U`` and ``V``
    start at the top eigenvectors of ``sum X_i X_i^T`` and ``sum X_i^T X_i``.
    Inner solves run to ``inner_tolerance``; the outer loop to
    ``config.tolerance``.
    """
    config = config or SolverConfig()
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3:
        raise ValueError(f"expected an (n, r, c) stack, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples contain non-finite entries")
    n, r, c = samples.shape
    if not (1 <= k1 <= r and 1 <= k2 <= c):
        raise ValueError(f"need 1 <= k1 <= {r} and 1 <= k2 <= {c}, got {k1}, {k2}")
    inner = SolverConfig(tolerance=inner_tolerance, max_iterations=config.max_iterations,
                         seed=config.seed)
    u = sym_eig_top(np.einsum("nrc,nsc->rs", samples, samples), k1)[0]
    v = sym_eig_top(np.einsum("nrc,nrd->cd", samples, samples), k2)[0]

    def objective(u, v):
        core = np.einsum("rk,nrc,cl->nkl", u, samples, v)
        return float(np.sqrt(np.einsum("nkl,nkl->n", core, core)).sum())

    trace = SolveTrace(objective_per_iteration=[objective(u, v)])
    for t in range(1, config.max_iterations + 1):
        v, _ = _l21_blocks(np.einsum("nrc,rk->nck", samples, u), v, inner)
        u, _ = _l21_blocks(np.einsum("nrc,cl->nrl", samples, v), u, inner)
        value, previous = objective(u, v), trace.objective_per_iteration[-1]
        trace.objective_per_iteration.append(value)
        trace.iterations = t
        if relative_change(previous, value) < config.tolerance:
            trace.converged = True
            trace.termination_reason = "tolerance"
            break
    return TensorPcaResult(u=u, v=v, trace=trace, mean=np.zeros((r, c)))


SOLVERS = {
    "classic": lambda x, m, config: pca_classic(x, m),
    "l1": pca_l1_greedy,
    "r1": r1_pca,
    "l21": pca_l21,
}


def fit(x, m, method="l21", config=None):
    """Center ``x`` and run one of ``METHODS``; the mean is kept on the result."""
    if method not in SOLVERS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    xc, mean = center(x)
    result = SOLVERS[method](xc, m, config or SolverConfig())
    result.mean = mean
    return result
