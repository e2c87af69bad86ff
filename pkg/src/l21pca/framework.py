"""Iterative maximizers for objectives of the form

    max_{v in C}  f(v) + sum_i h_i(g_i(v))

with every ``h_i`` convex. Each iteration linearizes the convex terms at the
current point (``alpha_i = h_i'(g_i(v))``) and hands the linearized problem
to a caller-supplied exact maximizer over the constraint set. Convexity of
``h_i`` makes the objective non-decreasing from one iterate to the next.

The Euclidean-norm special case (``h_i = ||.||_2``) is ``solve_l21_max``;
subspace iteration and the truncated power method fall out as instances.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np

from .linalg import (
    as_finite_matrix,
    is_orthonormal,
    orthogonal_procrustes_max,
    random_orthonormal,
    SYMMETRY_TOL,
)


class SolverError(RuntimeError):
    pass


class InfeasibleIterate(SolverError):
    pass


class NonFiniteObjective(SolverError):
    pass


class StationaryPointError(SolverError):
    """The truncated update vanished (``A @ v`` is zero on every kept entry)."""


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-9
    max_iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class SolveTrace:
    """Objective after each iterate; entry 0 is the starting point."""

    objective_per_iteration: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    termination_reason: str = "max_iterations"  # or "tolerance"
    maximize: bool = True
    notes: list = field(default_factory=list)

    @property
    def final_objective(self):
        return self.objective_per_iteration[-1]

    def is_monotone(self, slack=1e-12):
        obj = np.asarray(self.objective_per_iteration, dtype=float)
        steps = np.diff(obj) if self.maximize else -np.diff(obj)
        return bool(np.all(steps >= -slack))


def relative_change(previous, current):
    return abs(current - previous) / max(1.0, abs(previous))


class ConvexTerm(NamedTuple):
    """A convex function together with a (sub)gradient oracle."""

    value: Callable[[Any], float]
    grad: Callable[[Any], Any]


@dataclass
class MaxProblem:
    """Bundle for the general maximizer.

    ``subproblem_maximizer(alphas)`` must return an exact maximizer over the
    constraint set of ``f(v) + sum_i <alphas[i], g_i(v)>``, where ``<.,.>`` is
    the trace inner product. ``is_feasible``, when given, is checked on every
    iterate.
    """

    f: Callable[[Any], float]
    g_list: Sequence[Callable[[Any], Any]]
    h_list: Sequence[ConvexTerm]
    subproblem_maximizer: Callable[[list], Any]
    is_feasible: Optional[Callable[[Any], bool]] = None

    def __post_init__(self):
        if len(self.g_list) != len(self.h_list):
            raise ValueError(
                f"g_list and h_list differ in length ({len(self.g_list)} vs {len(self.h_list)})"
            )

    def inner_values(self, v):
        return [g(v) for g in self.g_list]

    def objective(self, v, inner=None):
        inner = self.inner_values(v) if inner is None else inner
        return float(self.f(v)) + sum(float(h.value(gv)) for gv, h in zip(inner, self.h_list))

    def linearization_weights(self, v, inner=None):
        inner = self.inner_values(v) if inner is None else inner
        return [h.grad(gv) for gv, h in zip(inner, self.h_list)]


def _checked_objective(problem, v, iteration):
    inner = problem.inner_values(v)
    value = problem.objective(v, inner)
    if not np.isfinite(value):
        raise NonFiniteObjective(f"objective is {value} at iteration {iteration}")
    return value, inner


def _check_feasible(problem, v, iteration):
    if problem.is_feasible is not None and not problem.is_feasible(v):
        raise InfeasibleIterate(f"iterate {iteration} violates the constraint set")


def solve_general_max(problem, v0, config=None):
    """Run the linearize-then-maximize loop from ``v0``.

    Returns ``(v, trace)``. Iteration stops when the relative objective change
    ``|F_new - F_old| / max(1, |F_old|)`` drops below ``config.tolerance``.
    """
    config = config or SolverConfig()
    _check_feasible(problem, v0, 0)
    v = v0
    value, inner = _checked_objective(problem, v, 0)
    trace = SolveTrace(objective_per_iteration=[value])
    for t in range(1, config.max_iterations + 1):
        alphas = problem.linearization_weights(v, inner)
        v = problem.subproblem_maximizer(alphas)
        _check_feasible(problem, v, t)
        value, inner = _checked_objective(problem, v, t)
        previous = trace.objective_per_iteration[-1]
        trace.objective_per_iteration.append(value)
        trace.iterations = t
        if relative_change(previous, value) < config.tolerance:
            trace.converged = True
            trace.termination_reason = "tolerance"
            break
    return v, trace


def norm_subgradient(x):
    """``x / ||x||`` (Frobenius for matrices), or exactly zero when ``x == 0``."""
    x = np.asarray(x, dtype=float)
    norm = _norm(x)
    if norm == 0.0:
        return np.zeros_like(x)
    return x / norm


def _norm(x):
    flat = x.reshape(-1)
    return math.sqrt(flat @ flat)


EUCLIDEAN_NORM = ConvexTerm(value=lambda x: _norm(np.asarray(x, dtype=float)), grad=norm_subgradient)


def solve_l21_max(f, g_list, subproblem_maximizer, v0, config=None, is_feasible=None):
    """Maximize ``f(v) + sum_i ||g_i(v)||_2`` over a constraint set.

    Same contract as ``solve_general_max`` with every ``h_i`` the Euclidean
    norm; a vanishing ``g_i(v)`` gets a zero weight.
    """
    problem = MaxProblem(
        f=f,
        g_list=list(g_list),
        h_list=[EUCLIDEAN_NORM] * len(g_list),
        subproblem_maximizer=subproblem_maximizer,
        is_feasible=is_feasible,
    )
    return solve_general_max(problem, v0, config)


def _check_symmetric(a):
    a = as_finite_matrix(a, "matrix")
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return a


def power_method_top_subspace(a, m, config=None, v0=None):
    """Subspace iteration for ``max Tr(V.T A V)`` s.t. ``V.T V = I``.

    ``a`` should be symmetric positive semidefinite; the quadratic is then
    convex and the objective trace is monotone. Each step is the Procrustes
    maximizer of ``A @ V``. Returns ``(V, trace)``.
    """
    config = config or SolverConfig()
    a = _check_symmetric(a)
    d = a.shape[0]
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= {d}, got m={m}")
    if v0 is None:
        v0 = random_orthonormal(d, m, np.random.default_rng(config.seed))

    quadratic = ConvexTerm(
        value=lambda g: float(np.sum(g * (a @ g))),
        grad=lambda g: 2.0 * (a @ g),
    )
    problem = MaxProblem(
        f=lambda v: 0.0,
        g_list=[lambda v: v],
        h_list=[quadratic],
        subproblem_maximizer=lambda alphas: orthogonal_procrustes_max(alphas[0]).basis,
        is_feasible=is_orthonormal,
    )
    return solve_general_max(problem, np.asarray(v0, dtype=float), config)


def truncate_top_k(x, k):
    """Keep the ``k`` largest-magnitude entries of ``x``; ties keep the lower index."""
    keep = np.argsort(-np.abs(x), kind="stable")[:k]
    out = np.zeros_like(x)
    out[keep] = x[keep]
    return out


def _sparse_unit(x, k):
    t = truncate_top_k(x, k)
    norm = np.linalg.norm(t)
    if norm == 0.0:
        raise StationaryPointError("truncated update is zero; A @ v vanishes on the support")
    return t / norm


def truncated_power_method(a, k, config=None, v0=None, starts="coordinates"):
    """Sparse leading eigenvector: ``max v.T A v`` s.t. ``||v|| = 1``, ``||v||_0 <= k``.

    Per step: ``A @ v``, keep the ``k`` largest magnitudes, renormalize.
    The iteration is local, so without ``v0`` it is started from several
    points and the best run is returned:

    ``starts="coordinates"``
        every standard basis vector ``e_j`` (``d`` runs);
    ``starts="diagonal"``
        one run from the indicator of the ``k`` largest diagonal entries.

    Returns ``(v, trace)`` of the winning run.
    """
    config = config or SolverConfig()
    a = _check_symmetric(a)
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= {d}, got k={k}")
    if v0 is not None:
        candidates = [np.asarray(v0, dtype=float)]
    elif starts == "coordinates":
        candidates = list(np.eye(d))
    elif starts == "diagonal":
        v = np.zeros(d)
        v[np.argsort(-np.diag(a), kind="stable")[:k]] = 1.0 / np.sqrt(k)
        candidates = [v]
    else:
        raise ValueError(f"unknown starts {starts!r}")

    def feasible(v):
        return abs(np.linalg.norm(v) - 1.0) <= 1e-10 and np.count_nonzero(v) <= k

    problem = MaxProblem(
        f=lambda v: 0.0,
        g_list=[lambda v: v],
        h_list=[ConvexTerm(value=lambda g: float(g @ a @ g), grad=lambda g: 2.0 * (a @ g))],
        subproblem_maximizer=lambda alphas: _sparse_unit(alphas[0], k),
        is_feasible=feasible,
    )
    best = None
    for start in candidates:
        try:
            v, trace = solve_general_max(problem, start, config)
        except StationaryPointError:
            if len(candidates) == 1:
                raise
            continue
        if best is None or trace.final_objective > best[1].final_objective:
            best = (v, trace)
    if best is None:
        raise StationaryPointError("every start hit a vanishing truncated update")
    return best
