"""Robust PCA by non-greedy L21-norm maximization, with baselines and a benchmark harness."""

from .framework import (
    ConvexTerm,
    MaxProblem,
    SolverConfig,
    SolveTrace,
    power_method_top_subspace,
    solve_general_max,
    solve_l21_max,
    truncated_power_method,
)
from .linalg import orthogonal_procrustes_max, sym_eig_top, thin_svd
from .metrics import l21_norm, objective_value, recon_error_occlusion, recon_error_outlier
from .pca import (
    PcaResult,
    TensorPcaResult,
    center,
    fit,
    pca_classic,
    pca_l1_greedy,
    pca_l21,
    pca_l21_2d,
    r1_pca,
)

__version__ = "0.1.0"
