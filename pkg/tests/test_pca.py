import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from l21pca.framework import SolverConfig
from l21pca.linalg import is_orthonormal, sym_eig_top
from l21pca.metrics import l21_norm, objective_value
from l21pca.pca import (
    center,
    center_tensor,
    fit,
    pca_classic,
    pca_l1_greedy,
    pca_l21,
    pca_l21_2d,
    r1_pca,
)

from helpers import random_orthonormal


def subspace_data(rng, d, n, m):
    basis = random_orthonormal(rng, d, m)
    x = basis @ rng.standard_normal((m, n))
    return x - x.mean(axis=1, keepdims=True), basis


# centering

def test_center_two_samples():
    xc, mean = center(np.array([[1.0, 3.0], [1.0, 3.0]]))
    np.testing.assert_array_equal(mean, [2, 2])
    np.testing.assert_array_equal(xc, [[-1, 1], [-1, 1]])


def test_center_already_centered(rng):
    x = rng.standard_normal((4, 10))
    x -= x.mean(axis=1, keepdims=True)
    xc, mean = center(x)
    np.testing.assert_allclose(mean, 0, atol=1e-15)
    np.testing.assert_allclose(xc, x, atol=1e-15)


def test_center_random_row_means(rng):
    xc, _ = center(rng.standard_normal((5, 30)) + 4.0)
    assert np.all(np.abs(xc.mean(axis=1)) < 1e-10)


# classic

def test_classic_axis_data():
    x = np.array([[-2.0, -1.0, 1.0, 2.0], [0.0, 0.0, 0.0, 0.0]])
    res = pca_classic(x, 1)
    np.testing.assert_allclose(np.abs(res.w[:, 0]), [1, 0])


def test_classic_isotropic_objective():
    x = np.hstack([np.eye(3), -np.eye(3)])  # X X^T = 2 I
    res = pca_classic(x, 2)
    assert res.objective == pytest.approx(4.0)
    assert objective_value("classic", x, res.w) == pytest.approx(4.0)


def test_classic_random_against_eigenvalues(rng):
    x, _ = center(rng.standard_normal((6, 40)))
    res = pca_classic(x, 2)
    lam = np.sort(np.linalg.eigvalsh(x @ x.T))[::-1]
    captured = np.sum(np.linalg.norm(res.w.T @ x, axis=0) ** 2)
    assert captured == pytest.approx(lam[0] + lam[1], rel=1e-6)


def test_classic_m_too_large(rng):
    with pytest.raises(ValueError):
        pca_classic(rng.standard_normal((5, 3)), 4)


# PCA-L1

def test_l1_single_sample():
    x = np.array([[3.0], [4.0], [0.0]])
    res = pca_l1_greedy(x, 1)
    np.testing.assert_allclose(np.abs(res.w[:, 0]), [0.6, 0.8, 0.0])


def test_l1_symmetric_cross_finds_true_maximizer():
    # sum_i |w^T x_i| = 4|w1| + 2|w2| peaks at w ~ (2, +-1)/sqrt(5), not at e1
    x = np.array([[2.0, -2.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
    res = pca_l1_greedy(x, 1)
    w = np.abs(res.w[:, 0])
    np.testing.assert_allclose(w, [2 / np.sqrt(5), 1 / np.sqrt(5)], atol=1e-12)
    assert objective_value("l1", x, res.w) == pytest.approx(np.sqrt(20))
    # brute force over the unit circle agrees
    theta = np.linspace(0, np.pi, 200001)
    grid = np.abs(np.cos(theta)[:, None] * x[0] + np.sin(theta)[:, None] * x[1]).sum(axis=1)
    assert objective_value("l1", x, res.w) >= grid.max() - 1e-9


def test_l1_against_random_directions(rng):
    x, _ = center(rng.standard_normal((4, 10)))
    res = pca_l1_greedy(x, 1)
    dirs = rng.standard_normal((100_000, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    best = np.abs(dirs @ x).sum(axis=1).max()
    assert objective_value("l1", x, res.w) >= 0.999 * best


def test_l1_basis_orthonormal_and_trace_monotone(rng):
    x, _ = center(rng.standard_normal((7, 30)))
    res = pca_l1_greedy(x, 4)
    assert is_orthonormal(res.w)
    assert res.trace.is_monotone()


def test_l1_more_directions_than_rank(rng):
    x, _ = subspace_data(rng, 5, 20, 2)
    res = pca_l1_greedy(x, 4)
    assert is_orthonormal(res.w)
    assert any("exhausted" in note for note in res.trace.notes)


def test_l1_zero_data():
    with pytest.raises(ValueError, match="all zeros"):
        pca_l1_greedy(np.zeros((3, 4)), 1)


def test_l1_sample_at_mean_terminates():
    # a zero column always projects to 0; it must not trigger endless re-runs
    x = np.array([[1.0, -1.0, 0.0], [0.5, -0.5, 0.0]])
    res = pca_l1_greedy(x, 1)
    assert res.trace.converged


# R1-PCA

def test_r1_exact_subspace(rng):
    x, basis = subspace_data(rng, 6, 30, 2)
    res = r1_pca(x, 2)
    assert res.objective < 1e-8
    assert np.all(np.linalg.norm(x - res.w @ (res.w.T @ x), axis=0) < 1e-8)


def test_r1_full_dimension(rng):
    x, _ = center(rng.standard_normal((4, 15)))
    assert r1_pca(x, 4).objective == pytest.approx(0.0, abs=1e-10)


def test_r1_trace_non_increasing(rng):
    x, _ = center(rng.standard_normal((8, 50)) ** 3)
    res = r1_pca(x, 3)
    assert res.trace.is_monotone(slack=1e-9)
    assert not res.trace.maximize


def test_r1_outlier_resistance_monte_carlo():
    wins = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        clean_dir = np.array([np.cos(0.3), np.sin(0.3)])
        t = rng.standard_normal(50)
        x = np.outer(clean_dir, t) + 0.1 * rng.standard_normal((2, 50))
        # gross, oblique outlier: tilts classic PCA without capturing it outright
        outlier = 10.0 * np.array([np.cos(1.5), np.sin(1.5)]) + 0.5 * rng.standard_normal(2)
        x, _ = center(np.column_stack([x, outlier]))
        r1 = abs(r1_pca(x, 1).w[:, 0] @ clean_dir)
        classic = abs(pca_classic(x, 1).w[:, 0] @ clean_dir)
        wins += r1 > classic
    assert wins >= 80


# PCA-L21

def test_l21_exact_subspace(rng):
    x, _ = subspace_data(rng, 7, 25, 3)
    res = pca_l21(x, 3, init="seeded_random")
    assert res.objective == pytest.approx(np.linalg.norm(x, axis=0).sum(), rel=1e-9)
    resid = np.linalg.norm(x - res.w @ (res.w.T @ x), axis=0)
    assert np.all(resid < 1e-8)


def test_l21_full_dimension_every_iterate(rng):
    x, _ = center(rng.standard_normal((4, 12)))
    res = pca_l21(x, 4, init="seeded_random")
    np.testing.assert_allclose(res.trace.objective_per_iteration,
                               np.linalg.norm(x, axis=0).sum(), rtol=1e-12)


def test_l21_beats_random_bases(rng):
    x, _ = center(rng.standard_normal((8, 50)))
    res = pca_l21(x, 3)
    assert res.trace.is_monotone()
    assert is_orthonormal(res.w)
    qs = np.linalg.qr(rng.standard_normal((10_000, 8, 3)))[0]
    random_best = np.linalg.norm(np.einsum("kdm,dn->kmn", qs, x), axis=1).sum(axis=1).max()
    assert res.objective >= random_best


def test_l21_objective_matches_l21_norm_form(rng):
    x, _ = center(rng.standard_normal((6, 20)))
    res = pca_l21(x, 2)
    assert res.objective == pytest.approx(l21_norm(x.T @ res.w), rel=1e-12)


def test_l21_errors(rng):
    with pytest.raises(ValueError):
        pca_l21(rng.standard_normal((3, 5)), 4)
    with pytest.raises(ValueError, match="all zeros"):
        pca_l21(np.zeros((3, 5)), 1)
    with pytest.raises(ValueError, match="unknown init"):
        pca_l21(rng.standard_normal((3, 5)), 1, init="bogus")


def test_l21_zero_sample_drops_out(rng):
    x, _ = center(rng.standard_normal((5, 20)))
    x = np.column_stack([x, np.zeros(5)])
    res = pca_l21(x, 2)
    assert np.isfinite(res.objective) and res.trace.is_monotone()


def test_l21_rotation_invariance(rng):
    x, _ = center(rng.standard_normal((6, 30)))
    w0 = random_orthonormal(rng, 6, 2)
    r = random_orthonormal(rng, 6, 6)
    a = pca_l21(x, 2, w0=w0)
    b = pca_l21(r @ x, 2, w0=r @ w0)
    assert b.objective == pytest.approx(a.objective, rel=1e-8)
    assert objective_value("l21", r @ x, r @ a.w) == pytest.approx(a.objective, rel=1e-10)


@pytest.mark.parametrize("method", ["classic", "l1", "r1", "l21"])
def test_determinism(rng, method):
    x = rng.standard_normal((6, 25))
    a = fit(x, 2, method, SolverConfig(seed=3))
    b = fit(x, 2, method, SolverConfig(seed=3))
    assert np.array_equal(a.w, b.w)
    assert a.trace.objective_per_iteration == b.trace.objective_per_iteration
    assert np.array_equal(a.mean, b.mean)


def test_fit_unknown_method(rng):
    with pytest.raises(ValueError, match="unknown method"):
        fit(rng.standard_normal((3, 4)), 1, "pca-l0")


# 2-D PCA-L21

def test_l21_2d_rank_one_samples(rng):
    u0 = random_orthonormal(rng, 6, 1)[:, 0]
    v0 = random_orthonormal(rng, 5, 1)[:, 0]
    scales = rng.uniform(0.5, 2.0, 10) * np.array([1, -1] * 5)
    samples = np.array([s * np.outer(u0, v0) for s in scales])
    res = pca_l21_2d(samples, 1, 1)
    target = np.linalg.norm(samples, axis=(1, 2)).sum()
    assert res.trace.final_objective == pytest.approx(target, rel=1e-9)
    recon = np.einsum("rk,nkl,cl->nrc", res.u, np.einsum("rk,nrc,cl->nkl", res.u, samples, res.v), res.v)
    np.testing.assert_allclose(recon, samples, atol=1e-9)


def test_l21_2d_full_dimensions(rng):
    samples, _ = center_tensor(rng.standard_normal((8, 4, 3)))
    res = pca_l21_2d(samples, 4, 3)
    assert res.trace.final_objective == pytest.approx(np.linalg.norm(samples, axis=(1, 2)).sum())


def test_l21_2d_random_pairs(rng):
    samples, _ = center_tensor(rng.standard_normal((20, 6, 5)))
    res = pca_l21_2d(samples, 2, 2)
    assert res.trace.is_monotone()
    assert is_orthonormal(res.u) and is_orthonormal(res.v)
    best_random = 0.0
    for _ in range(1000):
        u, v = random_orthonormal(rng, 6, 2), random_orthonormal(rng, 5, 2)
        best_random = max(best_random, np.linalg.norm(
            np.einsum("rk,nrc,cl->nkl", u, samples, v), axis=(1, 2)).sum())
    assert res.trace.final_objective >= best_random


def test_l21_2d_dimension_errors(rng):
    samples = rng.standard_normal((4, 3, 3))
    with pytest.raises(ValueError):
        pca_l21_2d(samples, 4, 1)
    with pytest.raises(ValueError):
        pca_l21_2d(samples[0], 1, 1)


# identities behind the robust objective

@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 30), st.integers(1, 12))
def test_eq3_identity_and_sandwich(seed, d, n, m):
    rng = np.random.default_rng(seed)
    m = min(m, d)
    x = rng.standard_normal((d, n)) * 10 ** rng.uniform(-3, 3)
    w = random_orthonormal(rng, d, m)
    resid = x - w @ (w.T @ x)
    proj = w.T @ x
    total = np.sum(x * x)
    assert np.sum(resid * resid) + np.sum(proj * proj) == pytest.approx(total, rel=1e-8)
    lower = l21_norm(x.T)
    middle = l21_norm(x.T - x.T @ w @ w.T) + l21_norm(x.T @ w)
    assert lower <= middle * (1 + 1e-10) + 1e-300
    assert middle <= np.sqrt(2) * lower * (1 + 1e-10) + 1e-300


def test_classic_nested_errors_non_increasing(rng):
    x, _ = center(rng.standard_normal((10, 40)))
    w_full, _ = sym_eig_top(x @ x.T, 10)
    errs = [np.linalg.norm(x - w_full[:, :m] @ (w_full[:, :m].T @ x), axis=0).mean()
            for m in range(1, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
