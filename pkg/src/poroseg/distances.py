"""Vector and sequence distances used by layer clustering.

The warping distance is the minimum over monotone alignment paths (steps
right/down/diagonal, endpoints pinned to the first and last elements) of
sqrt(sum of squared element differences along the path). An optional
Sakoe-Chiba band restricts the path to |i - j| <= band.
"""

from __future__ import annotations

import numpy as np
from numba import njit


def euclidean(a: np.ndarray, b: np.ndarray) -> float:
    """Straight-line distance between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


@njit(cache=True)
def _dtw_sq(a, b, band):  # pragma: no cover - exercised through dtw()
    m = a.shape[0]
    n = b.shape[0]
    prev = np.full(n, np.inf)
    curr = np.full(n, np.inf)
    for i in range(m):
        for j in range(n):
            curr[j] = np.inf
        jlo = 0
        jhi = n - 1
        if band >= 0:
            jlo = max(0, i - band)
            jhi = min(n - 1, i + band)
        for j in range(jlo, jhi + 1):
            d = a[i] - b[j]
            cost = d * d
            if i == 0 and j == 0:
                curr[j] = cost
                continue
            best = prev[j]
            if j > 0 and curr[j - 1] < best:
                best = curr[j - 1]
            if j > 0 and prev[j - 1] < best:
                best = prev[j - 1]
            curr[j] = cost + best
        tmp = prev
        prev = curr
        curr = tmp
    return prev[n - 1]


def dtw(a: np.ndarray, b: np.ndarray, band: int | None = None) -> float:
    """Dynamic-programming warping distance between two 1-D sequences."""
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel())
    b = np.ascontiguousarray(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("sequences must be nonempty")
    if band is not None:
        band = int(band)
        if band < abs(a.size - b.size):
            raise ValueError(
                f"band {band} is narrower than the length gap "
                f"|{a.size} - {b.size}|; no warping path exists"
            )
    return float(np.sqrt(_dtw_sq(a, b, -1 if band is None else band)))
