"""Norms, reconstruction errors and per-method objective evaluators."""

from dataclasses import dataclass

import numpy as np

from .linalg import as_finite_matrix

PROTOCOLS = ("occlusion", "outlier")
DEFAULT_DIMS = tuple(range(21, 70, 4))


def l21_norm(m):
    """Sum of the Euclidean norms of the rows of ``m``."""
    m = as_finite_matrix(m)
    return float(np.sqrt(np.sum(m * m, axis=1)).sum())


def _check_frame(name, x, w, mean):
    if x.shape[0] != w.shape[0]:
        raise ValueError(f"{name} has dimension {x.shape[0]} but the basis has {w.shape[0]} rows")
    if mean.shape != (x.shape[0],):
        raise ValueError(f"mean has shape {mean.shape}, expected ({x.shape[0]},)")


def recon_error_occlusion(originals, training, w, mean):
    """Mean of ``||x_org_i - W W^T x_i||`` with ``x_i`` the (corrupted) training sample.

    Both matrices are raw ``d x n``; ``mean`` (the training mean) is
    subtracted from each before projecting.
    """
    originals = as_finite_matrix(originals, "originals")
    training = as_finite_matrix(training, "training")
    w = as_finite_matrix(w, "basis")
    mean = np.asarray(mean, dtype=float)
    if originals.shape != training.shape:
        raise ValueError(f"originals {originals.shape} and training {training.shape} differ")
    _check_frame("originals", originals, w, mean)
    xo = originals - mean[:, None]
    xt = training - mean[:, None]
    return float(np.linalg.norm(xo - w @ (w.T @ xt), axis=0).mean())


def recon_error_outlier(clean_originals, w, mean):
    """Mean of ``||x_i - W W^T x_i||`` over the clean samples only."""
    x = as_finite_matrix(clean_originals, "clean originals")
    w = as_finite_matrix(w, "basis")
    mean = np.asarray(mean, dtype=float)
    _check_frame("clean originals", x, w, mean)
    xc = x - mean[:, None]
    return float(np.linalg.norm(xc - w @ (w.T @ xc), axis=0).mean())


def objective_value(method, x, w):
    """The criterion each solver optimizes, evaluated at ``w``.

    classic: ``Tr(W^T X X^T W)``; r1: ``sum ||x_i - W W^T x_i||``;
    l1: ``sum ||W^T x_i||_1``; l21: ``sum ||W^T x_i||_2``.
    """
    x = as_finite_matrix(x, "data")
    w = as_finite_matrix(w, "basis")
    p = w.T @ x
    if method == "classic":
        return float(np.sum(p * p))
    if method == "r1":
        return float(np.linalg.norm(x - w @ p, axis=0).sum())
    if method == "l1":
        return float(np.abs(p).sum())
    if method == "l21":
        return float(np.linalg.norm(p, axis=0).sum())
    raise ValueError(f"unknown method tag {method!r}")


@dataclass
class ErrorCurve:
    dims: tuple
    errors: tuple
    method: str
    protocol: str

    def __post_init__(self):
        self.dims = tuple(int(m) for m in self.dims)
        self.errors = tuple(float(e) for e in self.errors)
        if len(self.dims) != len(self.errors):
            raise ValueError("dims and errors differ in length")
        if any(b <= a for a, b in zip(self.dims, self.dims[1:])):
            raise ValueError("dims must be strictly increasing")
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be non-negative")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
