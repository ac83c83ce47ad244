"""Scoring and statistics: Dice overlap, bootstrap confidence intervals,
connected-component instance counts, and porosity percentages.

Confidence intervals are quantile intervals with linear interpolation
between order statistics (numpy's default), reported as [q(alpha/2),
q(1 - alpha/2)] plus their length.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy import ndimage

from .backend import Backend, select_mask
from .clustering import CentroidRecord
from .image_core import ensure_gray, ensure_mask, median_filter, to_model_input, transform_coords
from .prompts import bootstrap_prompts


def dsc(
    m: np.ndarray, r: np.ndarray, both_empty: float | None = 1.0
) -> float:
    """Dice similarity 2|M n R| / (|M| + |R|) between two binary masks.

    Two empty masks score ``both_empty`` (default 1.0, perfect agreement on
    absence); pass None to get nan so callers can exclude such pairs.
    """
    m = ensure_mask(m)
    r = ensure_mask(r)
    if m.shape != r.shape:
        raise ValueError(f"mask shapes differ: {m.shape} vs {r.shape}")
    denom = int(m.sum()) + int(r.sum())
    if denom == 0:
        return math.nan if both_empty is None else float(both_empty)
    return 2.0 * int((m & r).sum()) / denom


@dataclass
class BootstrapSummary:
    """Distribution summary of one image's bootstrap scores."""

    scores: np.ndarray
    mean: float
    ci_low: float
    ci_high: float

    @property
    def length(self) -> float:
        return self.ci_high - self.ci_low


def summarize_bootstrap(scores, alpha: float = 0.05) -> BootstrapSummary:
    """Mean and central quantile interval of a bootstrap score sample."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size == 0:
        raise ValueError("need at least one score")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    lo, hi = np.quantile(scores, [alpha / 2, 1 - alpha / 2])
    return BootstrapSummary(
        scores=scores,
        mean=float(scores.mean()),
        ci_low=float(lo),
        ci_high=float(hi),
    )


def _connectivity_structure(connectivity: int) -> np.ndarray:
    if connectivity == 8:
        return np.ones((3, 3), dtype=bool)
    if connectivity == 4:
        return np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def count_instances(mask: np.ndarray, connectivity: int = 8) -> int:
    """Number of maximal connected foreground components."""
    mask = ensure_mask(mask)
    _, n = ndimage.label(mask, structure=_connectivity_structure(connectivity))
    return int(n)


def porosity_pct(mask: np.ndarray, roi: np.ndarray | None = None) -> float:
    """Foreground pixels as a percentage of the region of interest
    (the full frame when no roi is given); foreground outside the region
    does not count."""
    mask = ensure_mask(mask)
    if roi is None:
        return 100.0 * int(mask.sum()) / mask.size
    roi = ensure_mask(roi)
    if roi.shape != mask.shape:
        raise ValueError(f"roi shape {roi.shape} != mask shape {mask.shape}")
    denom = int(roi.sum())
    if denom == 0:
        raise ValueError("empty region of interest")
    return 100.0 * int((mask & roi).sum()) / denom


@dataclass
class ImageBootstrapResult:
    summary: BootstrapSummary
    chosen_counts: tuple[int, int, int]  # histogram of selected mask indices


@dataclass
class BootstrapReport:
    per_image: dict[str, ImageBootstrapResult]
    skipped: list[tuple[str, str]]
    aggregate: dict
    params: dict


def run_bootstrap_eval(
    images: Mapping[str, np.ndarray],
    refs: Mapping[str, np.ndarray],
    records: list[CentroidRecord],
    assignments: Mapping[str, int],
    backend: Backend | Callable[[str], Backend],
    m: int = 10_000,
    B: int = 100,
    seed: int = 0,
    thresh: float = 0.90,
    filter_k: int = 3,
    alpha: float = 0.05,
    jobs: int = 1,
) -> BootstrapReport:
    """Bootstrap the prompts of every image: B resampled prompt sets each
    produce a predicted mask and a Dice score against the reference mask;
    per-image score distributions are summarized into quantile intervals
    and CI lengths are aggregated across images.

    ``backend`` is either a shared instance or a callable mapping an image
    id to its backend (the oracle is built per image; callables also give
    each parallel worker its own instance). Image k (in sorted id order)
    derives its prompt seeds from (seed, k), so results do not depend on
    scheduling; with ``jobs`` > 1 images are processed by a thread pool and
    the report is identical to the sequential one.
    """
    by_cluster = {rec.cluster_index: rec for rec in records}
    skipped: list[tuple[str, str]] = []
    tasks: list[tuple[int, str]] = []
    for idx, image_id in enumerate(sorted(images)):
        if image_id not in refs:
            warnings.warn(f"{image_id}: no reference mask; skipped", stacklevel=2)
            skipped.append((image_id, "no reference mask"))
            continue
        cluster = assignments.get(image_id)
        rec = by_cluster.get(cluster)
        if rec is None:
            skipped.append((image_id, f"no centroid record for cluster {cluster}"))
            warnings.warn(f"{image_id}: {skipped[-1][1]}; skipped", stacklevel=2)
            continue
        if not rec.usable:
            skipped.append((image_id, f"record {rec.record_id} has an empty pool"))
            warnings.warn(f"{image_id}: {skipped[-1][1]}; skipped", stacklevel=2)
            continue
        tasks.append((idx, image_id))

    def process(task: tuple[int, str]) -> tuple[str, ImageBootstrapResult]:
        idx, image_id = task
        rec = by_cluster[assignments[image_id]]
        b = backend(image_id) if callable(backend) else backend
        img = ensure_gray(images[image_id])
        model_input = to_model_input(median_filter(img, filter_k))
        ref = ensure_mask(refs[image_id])
        prompt_sets = bootstrap_prompts(rec, m, B, seed=(seed, idx))
        scores = np.empty(B)
        counts = [0, 0, 0]
        for i, ps in enumerate(prompt_sets):
            triplet = b.predict(model_input, transform_coords(ps, model_input))
            mask, chosen = select_mask(triplet, thresh)
            counts[chosen] += 1
            scores[i] = dsc(mask, ref)
        return image_id, ImageBootstrapResult(
            summary=summarize_bootstrap(scores, alpha),
            chosen_counts=tuple(counts),
        )

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            gathered = dict(pool.map(process, tasks))
    else:
        gathered = dict(map(process, tasks))
    per_image = {image_id: gathered[image_id] for _, image_id in tasks}
    lengths = np.array([r.summary.length for r in per_image.values()])
    means = np.array([r.summary.mean for r in per_image.values()])
    aggregate = {
        "images": len(per_image),
        "skipped": len(skipped),
        "mean_dsc": float(means.mean()) if len(means) else None,
        "std_dsc": float(means.std()) if len(means) else None,
        "mean_ci_length": float(lengths.mean()) if len(lengths) else None,
        "std_ci_length": float(lengths.std()) if len(lengths) else None,
    }
    params = {
        "m": m,
        "B": B,
        "seed": seed,
        "thresh": thresh,
        "filter_k": filter_k,
        "alpha": alpha,
    }
    return BootstrapReport(
        per_image=per_image, skipped=skipped, aggregate=aggregate, params=params
    )


BOOTSTRAP_CSV_HEADER = [
    "image_id",
    "mean_dsc",
    "ci_low",
    "ci_high",
    "ci_length",
    "chosen_0",
    "chosen_1",
    "chosen_2",
]


def write_bootstrap_csv(report: BootstrapReport, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(BOOTSTRAP_CSV_HEADER)
        for image_id in sorted(report.per_image):
            res = report.per_image[image_id]
            s = res.summary
            writer.writerow(
                [
                    image_id,
                    repr(s.mean),
                    repr(s.ci_low),
                    repr(s.ci_high),
                    repr(s.length),
                    *res.chosen_counts,
                ]
            )


def write_bootstrap_json(report: BootstrapReport, path: str | Path) -> None:
    doc = {
        "params": report.params,
        "aggregate": report.aggregate,
        "per_image": {
            image_id: {
                "mean_dsc": res.summary.mean,
                "ci_low": res.summary.ci_low,
                "ci_high": res.summary.ci_high,
                "ci_length": res.summary.length,
                "chosen_counts": list(res.chosen_counts),
            }
            for image_id, res in sorted(report.per_image.items())
        },
        "skipped": [{"image_id": i, "reason": r} for i, r in report.skipped],
    }
    Path(path).write_text(json.dumps(doc, indent=2))
