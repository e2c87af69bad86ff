"""Corruption protocols: occlusion squares and injected outlier images.

Image stacks are ``(n, height, width)`` float arrays with intensities in
``[0, 1]``. All randomness comes from an explicit seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass
class CorruptionRecord:
    kind: str  # "occlusion" | "outlier_injection"
    affected_indices: np.ndarray
    seed: int
    originals: np.ndarray = None  # occlusion: pristine copies of affected images
    n_clean: int = 0  # injection: samples [0, n_clean) are the untouched input
    n_injected: int = 0
    squares: list = field(default_factory=list)  # occlusion: (row, col, side) per affected image


def _as_stack(images, name="dataset"):
    images = np.asarray(images, dtype=float)
    if images.ndim != 3:
        raise ValueError(f"{name} must be an (n, height, width) stack, got shape {images.shape}")
    if images.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return images


def _count(fraction, n):
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    # guard ceil against representation error, e.g. 0.1 * 30 = 3.0000000000000004
    count = math.ceil(round(fraction * n, 9))
    if count == 0:
        raise ValueError(f"fraction {fraction} of {n} samples selects nothing")
    return count


def occlude(images, fraction, seed, fill=0.0):
    """Occlude ``ceil(fraction * n)`` images with a square of side ``width // 2``.

    Squares lie fully inside the image. Returns ``(corrupted, record)``; the
    input is not modified.
    """
    images = _as_stack(images)
    n, h, w = images.shape
    side = w // 2
    if side < 1 or side > h:
        raise ValueError(f"a {side}x{side} occluder does not fit a {h}x{w} image")
    count = _count(fraction, n)
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=count, replace=False))
    out = images.copy()
    squares = []
    for i in chosen:
        top = int(rng.integers(0, h - side + 1))
        left = int(rng.integers(0, w - side + 1))
        out[i, top:top + side, left:left + side] = fill
        squares.append((top, left, side))
    record = CorruptionRecord(kind="occlusion", affected_indices=chosen, seed=seed,
                              originals=images[chosen].copy(), n_clean=n, squares=squares)
    return out, record


def restore(corrupted, record):
    """Undo an occlusion using the originals kept in ``record``."""
    if record.kind != "occlusion":
        raise ValueError("only occlusion records can be restored")
    out = np.array(corrupted, dtype=float, copy=True)
    out[record.affected_indices] = record.originals
    return out


def conform(image, height, width):
    """Center-crop ``image`` to the target aspect ratio, then bilinearly rescale."""
    image = np.asarray(image, dtype=float)
    ih, iw = image.shape
    target = height / width
    if ih / iw > target:
        ch, cw = max(1, round(iw * target)), iw
    else:
        ch, cw = ih, max(1, round(ih / target))
    top, left = (ih - ch) // 2, (iw - cw) // 2
    crop = image[top:top + ch, left:left + cw]
    if crop.shape == (height, width):
        return crop.copy()
    # align corners so constant images stay constant and the range is kept
    rows = np.linspace(0, ch - 1, height)
    cols = np.linspace(0, cw - 1, width)
    grid = np.meshgrid(rows, cols, indexing="ij")
    out = ndimage.map_coordinates(crop, grid, order=1, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def inject_outliers(images, pool, fraction, seed):
    """Append ``ceil(fraction * n)`` images drawn with replacement from ``pool``.

    Pool images are conformed to the dataset's image size. The first ``n``
    samples of the result are the input, unchanged.
    """
    images = _as_stack(images)
    n, h, w = images.shape
    pool = list(pool)
    if not pool:
        raise ValueError("outlier pool is empty")
    count = _count(fraction, n)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(pool), size=count)
    extra = np.stack([conform(pool[int(j)], h, w) for j in picks])
    record = CorruptionRecord(kind="outlier_injection", affected_indices=np.arange(n, n + count),
                              seed=seed, n_clean=n, n_injected=count)
    return np.concatenate([images, extra]), record


def synthesize_lowrank_dataset(d, n, intrinsic_rank, noise_scale, seed):
    """Centered ``d x n`` matrix ``A @ B + noise`` with Gaussian factors."""
    if not 1 <= intrinsic_rank <= min(d, n):
        raise ValueError(f"intrinsic_rank must be in [1, {min(d, n)}], got {intrinsic_rank}")
    if noise_scale < 0:
        raise ValueError("noise_scale must be non-negative")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, intrinsic_rank))
    b = rng.standard_normal((intrinsic_rank, n))
    x = a @ b + noise_scale * rng.standard_normal((d, n))
    return x - x.mean(axis=1, keepdims=True)


def to_unit_range(x):
    """Affinely map a matrix into ``[0, 1]`` (constant input maps to zeros)."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)
