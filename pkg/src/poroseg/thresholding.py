"""Reference mask generation: pixel-intensity K-means (K=3) plus the
two-pass binarization rule.

The pipeline for a raw XCT layer is median filter -> 1-D K-means over pixel
intensities -> binarize at the middle centroid. The literal binarization
rule marks every nonzero sub-threshold pixel as foreground, which drags in
any non-black exterior background; the configurable ``floor`` (default 0,
i.e. the literal rule) and optional region-of-interest mask exist to keep
the method usable on such data.
"""

from __future__ import annotations

from dataclasses import dataclass, astuple

import numpy as np

from .image_core import ensure_gray, ensure_mask, median_filter

DEFAULT_TOL = 0.5
DEFAULT_MAX_ITER = 100


class DegenerateImageError(ValueError):
    """Image has fewer distinct intensity values than requested clusters."""


@dataclass(frozen=True)
class IntensityCentroids:
    """Converged 1-D intensity centroids, sorted ascending; the binarization
    threshold is the middle one."""

    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        if not (self.c1 <= self.c2 <= self.c3):
            raise ValueError(f"centroids must be sorted ascending, got {astuple(self)}")

    @property
    def threshold(self) -> float:
        return self.c2


def _quantile_init(hist: np.ndarray, k: int) -> np.ndarray:
    # Centroids at the (2i+1)/(2k) quantiles of the pixel distribution.
    pixels = np.repeat(np.arange(256, dtype=np.float64), hist)
    qs = (2 * np.arange(k) + 1) / (2 * k)
    return np.quantile(pixels, qs)


MULTI_START_LEVEL_LIMIT = 16


def _lloyd_run(
    levels: np.ndarray,
    weights: np.ndarray,
    init: np.ndarray,
    k: int,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, list[float]]:
    centroids = np.sort(init.astype(np.float64))
    history: list[float] = []

    def objective(cents):
        d2 = (levels[:, None] - cents[None, :]) ** 2
        assign = np.argmin(d2, axis=1)
        return assign, float((weights * d2[np.arange(len(levels)), assign]).sum())

    for _ in range(max_iter):
        assign, obj = objective(centroids)
        history.append(obj)
        new = centroids.copy()
        for j in range(k):
            sel = assign == j
            if sel.any():
                new[j] = (levels[sel] * weights[sel]).sum() / weights[sel].sum()
        taken: list[int] = []
        for j in range(k):
            if not (assign == j).any():
                # reseed an empty cluster at the occupied level farthest
                # from its nearest centroid (lowest level on ties)
                gaps = np.abs(levels[:, None] - new[None, :]).min(axis=1)
                gaps[taken] = -1.0
                far = int(np.argmax(gaps))
                taken.append(far)
                new[j] = levels[far]
        shift = np.max(np.abs(np.sort(new) - np.sort(centroids)))
        centroids = new
        if shift < tol:
            break
    _, final_obj = objective(centroids)
    history.append(final_obj)
    return np.sort(centroids), history


def _lloyd_1d(
    hist: np.ndarray,
    k: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, list[float]]:
    """Lloyd iteration on an intensity histogram; returns (sorted centroids,
    per-iteration objective history of the winning start).

    The primary start is the deterministic quantile initialization. Images
    with few distinct levels additionally run Lloyd from the means of every
    contiguous level partition: a single fixed start can stall in a local
    minimum there, while one of these seeds always descends to the global
    optimum. Realistic many-level images use the quantile start alone.
    """
    from itertools import combinations

    levels = np.nonzero(hist)[0].astype(np.float64)
    weights = hist[np.nonzero(hist)].astype(np.float64)
    inits = [_quantile_init(hist, k)]
    if len(levels) <= MULTI_START_LEVEL_LIMIT:
        for cuts in combinations(range(1, len(levels)), k - 1):
            bounds = [0, *cuts, len(levels)]
            inits.append(
                np.array(
                    [
                        (levels[a:b] * weights[a:b]).sum() / weights[a:b].sum()
                        for a, b in zip(bounds[:-1], bounds[1:])
                    ]
                )
            )
    best: tuple[np.ndarray, list[float]] | None = None
    for init in inits:
        cents, history = _lloyd_run(levels, weights, init, k, max_iter, tol)
        if best is None or history[-1] < best[1][-1]:
            best = (cents, history)
    return best


def pixel_kmeans(
    img: np.ndarray,
    k: int = 3,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> IntensityCentroids:
    """Cluster pixel intensities into ``k`` groups (1-D Lloyd over the
    histogram, deterministic quantile initialization)."""
    img = ensure_gray(img)
    if k != 3:
        raise ValueError(f"intensity clustering is defined for k=3, got {k}")
    hist = np.bincount(img.ravel(), minlength=256)
    distinct = int((hist > 0).sum())
    if distinct < k:
        raise DegenerateImageError(
            f"image has {distinct} distinct intensity values, need at least {k}"
        )
    centroids, _ = _lloyd_1d(hist, k, max_iter=max_iter, tol=tol)
    return IntensityCentroids(*[float(c) for c in centroids])


def binarize(
    img: np.ndarray,
    threshold: float,
    floor: int = 0,
    roi: np.ndarray | None = None,
) -> np.ndarray:
    """Two-pass binarization: pixels above the threshold go to background,
    then every remaining pixel above ``floor`` becomes foreground.

    ``floor=0`` is the literal rule (any nonzero sub-threshold pixel is
    foreground). ``roi``, when given, restricts foreground to the region.
    """
    img = ensure_gray(img)
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    mask = (img <= threshold) & (img > floor)
    if roi is not None:
        roi = ensure_mask(roi)
        if roi.shape != img.shape:
            raise ValueError(f"roi shape {roi.shape} != image shape {img.shape}")
        mask &= roi
    return mask


def make_reference_mask(
    img: np.ndarray,
    filter_k: int = 3,
    floor: int = 0,
    roi: np.ndarray | None = None,
) -> np.ndarray:
    """Median filter, cluster intensities (K=3), binarize at the middle
    centroid. Raises DegenerateImageError for near-constant images."""
    mask, _ = reference_mask_with_stats(img, filter_k, floor=floor, roi=roi)
    return mask


def reference_mask_with_stats(
    img: np.ndarray,
    filter_k: int = 3,
    floor: int = 0,
    roi: np.ndarray | None = None,
) -> tuple[np.ndarray, IntensityCentroids]:
    """Same as make_reference_mask but also returns the converged centroids
    (for sidecar metadata)."""
    filtered = median_filter(img, filter_k)
    cents = pixel_kmeans(filtered)
    return binarize(filtered, cents.threshold, floor=floor, roi=roi), cents
