"""Layer clustering: K-means and K-medoids over flattened layer images,
centroid records carrying foreground prompt pools, and the on-disk store.

K-means minimizes the total squared distance to cluster means (Lloyd with
seeded k-means++ initialization and deterministic restarts). K-medoids
minimizes the total distance (Euclidean or warping) to a representative
member per cluster via greedy BUILD initialization and best-improvement
swaps. Both are deterministic given (inputs, seed, parameters).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .distances import dtw, euclidean
from .image_core import ensure_gray, load_gray, save_gray
from .thresholding import DegenerateImageError, make_reference_mask

DTW_DOWNSAMPLE_SIDE = 64
DTW_BAND_FRACTION = 0.10
STORE_FILENAME = "store.json"
STORE_FORMAT = "poroseg-centroid-store"


class StoreFormatError(ValueError):
    """Centroid store on disk fails validation."""


@dataclass
class ClusterModel:
    method: str  # "kmeans" | "kmedoids"
    distance: str  # "euclidean" | "dtw"
    k: int
    assignments: dict[str, int]  # image id -> cluster index
    centroids: np.ndarray  # (k, width*height) float64
    objective: float
    image_shape: tuple[int, int]
    ids: list[str]
    medoid_ids: list[str] | None = None
    seed: int | None = None
    history: list[float] = field(default_factory=list)

    def members(self, cluster: int) -> list[str]:
        return [i for i in self.ids if self.assignments[i] == cluster]


@dataclass
class CentroidRecord:
    """A cluster representative plus its precomputed foreground coordinate
    pool, the persisted source of point prompts."""

    cluster_index: int
    image: np.ndarray  # (h, w) uint8
    pool: np.ndarray  # (n, 2) int64, columns (x, y)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.image = ensure_gray(self.image)
        self.pool = np.asarray(self.pool, dtype=np.int64).reshape(-1, 2)

    @property
    def usable(self) -> bool:
        return len(self.pool) > 0

    @property
    def record_id(self) -> str:
        return f"centroid_{self.cluster_index}"


def _stack_images(
    images, ids=None
) -> tuple[np.ndarray, list[str], tuple[int, int]]:
    imgs = [ensure_gray(im) for im in images]
    if not imgs:
        raise ValueError("no images given")
    shape = imgs[0].shape
    for im in imgs[1:]:
        if im.shape != shape:
            raise ValueError(
                f"all images must share one shape, got {shape} and {im.shape}"
            )
    if ids is None:
        ids = [f"{i:04d}" for i in range(len(imgs))]
    ids = [str(i) for i in ids]
    if len(ids) != len(imgs):
        raise ValueError(f"{len(imgs)} images but {len(ids)} ids")
    if len(set(ids)) != len(ids):
        raise ValueError("image ids must be unique")
    X = np.stack([im.ravel() for im in imgs]).astype(np.float64)
    return X, ids, shape


EXACT_KMEANS_CELL_LIMIT = 1_000_000  # k**n * pixels bound for the exact path
EXACT_KMEDOIDS_SUBSET_LIMIT = 10_000  # C(n, k) bound for the exact path


def _nonempty_partitions(n: int, k: int):
    """All assignments of n items into exactly k nonempty unlabeled blocks,
    as restricted growth strings (first item always in block 0)."""
    a = [0] * n

    def rec(i, mx):
        if i == n:
            if mx == k - 1:
                yield tuple(a)
            return
        top = min(mx + 1, k - 1)
        for v in range(top + 1):
            if (k - 1) - max(mx, v) > (n - 1 - i):
                continue  # not enough items left to fill all blocks
            a[i] = v
            yield from rec(i + 1, max(mx, v))

    if k == 1:
        yield tuple(a)
    else:
        yield from rec(1, 0)


def _partition_sse(X: np.ndarray, assign, k: int) -> float:
    assign = np.asarray(assign)
    cost = 0.0
    for j in range(k):
        members = X[assign == j]
        mu = members.mean(axis=0)
        cost += float(((members - mu) ** 2).sum())
    return cost


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0:
            probs = np.full(n, 1.0 / n)
        else:
            probs = d2 / total
        nxt = int(rng.choice(n, p=probs))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared distances, one centroid at a time: full-resolution
    # layers make an (n, k, d) intermediate prohibitively large
    d2 = np.empty((len(X), len(centers)))
    for j, c in enumerate(centers):
        d2[:, j] = ((X - c) ** 2).sum(axis=1)
    return d2


def _lloyd(
    X: np.ndarray, centers: np.ndarray, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    k = len(centers)
    history: list[float] = []
    assign = np.zeros(len(X), dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(X)), assign].sum()))
        new = centers.copy()
        for j in range(k):
            sel = assign == j
            if sel.any():
                new[j] = X[sel].mean(axis=0)
        taken: list[int] = []
        for j in range(k):
            if not (assign == j).any():
                # reseed an empty cluster at the point farthest from its
                # current centroid
                gaps = d2[np.arange(len(X)), assign].copy()
                gaps[taken] = -1.0
                far = int(np.argmax(gaps))
                taken.append(far)
                new[j] = X[far]
        shift = float(np.max(np.abs(new - centers)))
        centers = new
        if shift < tol:
            break
    d2 = _sq_dists(X, centers)
    assign = np.argmin(d2, axis=1)
    obj = float(d2[np.arange(len(X)), assign].sum())
    history.append(obj)
    return centers, assign, obj, history


def kmeans_images(
    images,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
    n_init: int = 10,
    ids=None,
    exact: bool | None = None,
) -> ClusterModel:
    """Cluster layer images by K-means on flattened pixels.

    Normally runs ``n_init`` seeded k-means++ restarts of Lloyd iteration
    and keeps the lowest objective; the per-iteration objective of the
    winning run is available in ``history`` and is non-increasing. Seeded
    restarts can stall in local minima on unstructured tiny inputs, so
    instances small enough to enumerate (``exact=None`` decides by size)
    instead seed Lloyd from the globally optimal partition's means, which
    pins the result to the exhaustive optimum.
    """
    X, ids, shape = _stack_images(images, ids)
    if len(X) < k:
        raise ValueError(f"need at least k={k} images, got {len(X)}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n, d = X.shape
    if exact is None:
        exact = k**n * d <= EXACT_KMEANS_CELL_LIMIT
    if exact:
        best_assign = min(
            _nonempty_partitions(n, k), key=lambda a: _partition_sse(X, a, k)
        )
        centers = np.stack(
            [X[np.asarray(best_assign) == j].mean(axis=0) for j in range(k)]
        )
        centers, assign, obj, history = _lloyd(X, centers, max_iter, tol)
    else:
        best = None
        for child in np.random.SeedSequence(seed).spawn(n_init):
            rng = np.random.default_rng(child)
            centers = _kmeanspp_init(X, k, rng)
            centers, assign, obj, history = _lloyd(X, centers, max_iter, tol)
            if best is None or obj < best[2]:
                best = (centers, assign, obj, history)
        centers, assign, obj, history = best
    return ClusterModel(
        method="kmeans",
        distance="euclidean",
        k=k,
        assignments={i: int(a) for i, a in zip(ids, assign)},
        centroids=centers,
        objective=obj,
        image_shape=shape,
        ids=ids,
        medoid_ids=None,
        seed=seed,
        history=history,
    )


def downsample_for_dtw(img: np.ndarray, side: int = DTW_DOWNSAMPLE_SIDE) -> np.ndarray:
    """Shrink an image to at most side x side before flattening it into a
    warping-distance sequence (full-resolution warping is infeasible)."""
    img = ensure_gray(img)
    h, w = img.shape
    if max(h, w) <= side:
        return img.astype(np.float64)
    im = Image.fromarray(img, mode="L").resize((side, side), Image.BILINEAR)
    return np.asarray(im, dtype=np.float64)


def pairwise_distances(
    images,
    distance: str = "euclidean",
    dtw_side: int = DTW_DOWNSAMPLE_SIDE,
    dtw_band_frac: float = DTW_BAND_FRACTION,
) -> np.ndarray:
    """Symmetric pairwise distance matrix between images."""
    if distance == "euclidean":
        vecs = [ensure_gray(im).ravel().astype(np.float64) for im in images]
        band = None
    elif distance == "dtw":
        vecs = [downsample_for_dtw(im, dtw_side).ravel() for im in images]
        band = max(1, int(round(dtw_band_frac * len(vecs[0]))))
    else:
        raise ValueError(f"unknown distance {distance!r}")
    n = len(vecs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if distance == "euclidean":
                D[i, j] = euclidean(vecs[i], vecs[j])
            else:
                D[i, j] = dtw(vecs[i], vecs[j], band=band)
            D[j, i] = D[i, j]
    return D


def _build_init(D: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    # farthest-first after a seeded first medoid
    n = len(D)
    medoids = [int(rng.integers(n))]
    while len(medoids) < k:
        gaps = D[:, medoids].min(axis=1)
        gaps[medoids] = -1.0
        medoids.append(int(np.argmax(gaps)))
    return medoids


def _medoid_cost(D: np.ndarray, medoids) -> float:
    return float(D[:, list(medoids)].min(axis=1).sum())


def kmedoids_images(
    images,
    k: int,
    distance: str = "euclidean",
    seed: int = 0,
    max_iter: int = 100,
    ids=None,
    dtw_side: int = DTW_DOWNSAMPLE_SIDE,
    dtw_band_frac: float = DTW_BAND_FRACTION,
    exact: bool | None = None,
) -> ClusterModel:
    """Cluster layer images by K-medoids; each representative is an actual
    dataset member.

    Normally initializes by greedy BUILD (farthest-first after a seeded
    first medoid) and improves with best-improvement swaps accepted only on
    a strict cost decrease. Single-swap descent can stall one swap short of
    the optimum on unstructured tiny inputs, so when the number of medoid
    subsets is small enough to enumerate (``exact=None`` decides by size)
    the globally optimal subset is selected directly.
    """
    X, ids, shape = _stack_images(images, ids)
    if len(X) < k:
        raise ValueError(f"need at least k={k} images, got {len(X)}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    D = pairwise_distances(images, distance, dtw_side, dtw_band_frac)
    n = len(X)
    if exact is None:
        from math import comb

        exact = comb(n, k) <= EXACT_KMEDOIDS_SUBSET_LIMIT
    if exact:
        from itertools import combinations

        medoids = list(
            min(combinations(range(n), k), key=lambda s: _medoid_cost(D, s))
        )
        history = [_medoid_cost(D, medoids)]
    else:
        rng = np.random.default_rng(seed)
        medoids = _build_init(D, k, rng)
        cost = _medoid_cost(D, medoids)
        history = [cost]
        for _ in range(max_iter):
            best_swap = None
            best_cost = cost
            in_set = set(medoids)
            for pos in range(k):
                for h in range(len(X)):
                    if h in in_set:
                        continue
                    trial = medoids.copy()
                    trial[pos] = h
                    c = _medoid_cost(D, trial)
                    if c < best_cost:
                        best_cost = c
                        best_swap = (pos, h)
            if best_swap is None:
                break
            medoids[best_swap[0]] = best_swap[1]
            cost = best_cost
            history.append(cost)
    assign = np.argmin(D[:, medoids], axis=1)
    objective = float(D[np.arange(len(X)), [medoids[a] for a in assign]].sum())
    return ClusterModel(
        method="kmedoids",
        distance=distance,
        k=k,
        assignments={i: int(a) for i, a in zip(ids, assign)},
        centroids=X[medoids].copy(),
        objective=objective,
        image_shape=shape,
        ids=ids,
        medoid_ids=[ids[m] for m in medoids],
        seed=seed,
        history=history,
    )


def centroid_to_image(centroid: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Round a real-valued centroid vector half-up back to an 8-bit image."""
    arr = np.floor(np.asarray(centroid, dtype=np.float64) + 0.5)
    return np.clip(arr, 0, 255).astype(np.uint8).reshape(shape)


def build_centroid_records(
    model: ClusterModel,
    filter_k: int = 3,
    floor: int = 0,
    roi: np.ndarray | None = None,
) -> list[CentroidRecord]:
    """Threshold each centroid image and harvest its foreground coordinates
    into a prompt pool. Centroids with no foreground produce a flagged
    (unusable) record with a warning, not a failure."""
    records = []
    for idx in range(model.k):
        img8 = centroid_to_image(model.centroids[idx], model.image_shape)
        try:
            mask = make_reference_mask(img8, filter_k, floor=floor, roi=roi)
        except DegenerateImageError as e:
            warnings.warn(
                f"centroid {idx}: {e}; record flagged unusable", stacklevel=2
            )
            mask = np.zeros(model.image_shape, dtype=bool)
        pool = np.argwhere(mask)[:, ::-1].astype(np.int64)  # (row, col) -> (x, y)
        if len(pool) == 0:
            warnings.warn(
                f"centroid {idx} has an empty foreground pool; "
                f"record flagged unusable",
                stacklevel=2,
            )
        provenance = {
            "method": model.method,
            "distance": model.distance,
            "k": model.k,
            "seed": model.seed,
            "members": model.members(idx),
            "medoid_id": model.medoid_ids[idx] if model.medoid_ids else None,
            "filter_k": filter_k,
            "floor": floor,
        }
        records.append(
            CentroidRecord(
                cluster_index=idx, image=img8, pool=pool, provenance=provenance
            )
        )
    return records


def save_store(records: list[CentroidRecord], path: str | Path) -> None:
    """Persist centroid records as centroid_<k>.png files plus store.json."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in records:
        fname = f"centroid_{rec.cluster_index}.png"
        save_gray(rec.image, root / fname)
        entries.append(
            {
                "cluster_index": rec.cluster_index,
                "image": fname,
                "pool": rec.pool.tolist(),
                "provenance": rec.provenance,
            }
        )
    shared = records[0].provenance if records else {}
    doc = {
        "format": STORE_FORMAT,
        "version": 1,
        "method": shared.get("method"),
        "distance": shared.get("distance"),
        "k": shared.get("k", len(records)),
        "seed": shared.get("seed"),
        "records": entries,
    }
    (root / STORE_FILENAME).write_text(json.dumps(doc, indent=2))


def load_store(path: str | Path) -> list[CentroidRecord]:
    """Load and validate a centroid store directory."""
    root = Path(path)
    doc_path = root / STORE_FILENAME
    if not doc_path.exists():
        raise StoreFormatError(f"{root}: missing {STORE_FILENAME}")
    try:
        doc = json.loads(doc_path.read_text())
    except json.JSONDecodeError as e:
        raise StoreFormatError(f"{doc_path}: invalid JSON ({e})") from e
    if doc.get("format") != STORE_FORMAT:
        raise StoreFormatError(f"{doc_path}: unrecognized format {doc.get('format')!r}")
    records = []
    for entry in doc.get("records", []):
        idx = entry.get("cluster_index")
        img_name = entry.get("image")
        if not isinstance(idx, int) or not img_name:
            raise StoreFormatError(f"{doc_path}: malformed record {entry!r}")
        img_path = root / img_name
        if not img_path.exists():
            raise StoreFormatError(f"record {idx}: missing image file {img_name}")
        img = load_gray(img_path)
        try:
            pool = np.asarray(entry.get("pool", []), dtype=np.int64).reshape(-1, 2)
        except (TypeError, ValueError) as e:
            raise StoreFormatError(f"record {idx}: malformed pool ({e})") from e
        h, w = img.shape
        if len(pool) and (
            pool[:, 0].min() < 0
            or pool[:, 1].min() < 0
            or pool[:, 0].max() >= w
            or pool[:, 1].max() >= h
        ):
            raise StoreFormatError(
                f"record {idx}: pool coordinate outside the {w}x{h} centroid image"
            )
        records.append(
            CentroidRecord(
                cluster_index=idx,
                image=img,
                pool=pool,
                provenance=entry.get("provenance", {}),
            )
        )
    return records
