import itertools
import json

import numpy as np
import pytest

from poroseg import (
    StoreFormatError,
    SyntheticSpec,
    build_centroid_records,
    dtw,
    euclidean,
    generate,
    kmeans_images,
    kmedoids_images,
    load_store,
    make_reference_mask,
    save_store,
)
from poroseg.clustering import pairwise_distances


def brute_force_kmeans_cost(X, assignment):
    """Weighted SSE of a given assignment, cluster means as centers."""
    cost = 0.0
    for j in sorted(set(assignment)):
        members = X[[i for i, a in enumerate(assignment) if a == j]]
        mu = members.mean(axis=0)
        cost += ((members - mu) ** 2).sum()
    return float(cost)


def brute_force_kmeans(X, k):
    """Exhaustive minimum SSE over all assignments with no empty cluster."""
    n = len(X)
    best = np.inf
    for assignment in itertools.product(range(k), repeat=n):
        if len(set(assignment)) < k:
            continue
        best = min(best, brute_force_kmeans_cost(X, assignment))
    return best


def brute_force_kmedoids(D, k):
    """Exhaustive minimum cost over all medoid subsets."""
    n = len(D)
    best = np.inf
    best_set = None
    for subset in itertools.combinations(range(n), k):
        cost = float(D[:, list(subset)].min(axis=1).sum())
        if cost < best:
            best, best_set = cost, subset
    return best, best_set


def tiny_images(rng, n, shape=(4, 4)):
    return [rng.integers(0, 256, shape, dtype=np.uint8) for _ in range(n)]


def pixel_images(values):
    return [np.array([[v]], dtype=np.uint8) for v in values]


# ---------------------------------------------------------------- kmeans


def test_kmeans_recovers_identical_groups():
    rng = np.random.default_rng(0)
    groups = tiny_images(rng, 3, (6, 6))
    images = [groups[i % 3] for i in range(9)]
    model = kmeans_images(images, 3, seed=5)
    assert model.objective == 0.0
    # identical inputs land in identical clusters
    clusters = [model.assignments[f"{i:04d}"] for i in range(9)]
    for i in range(9):
        assert clusters[i] == clusters[i % 3]
    for j in range(3):
        centroid = model.centroids[j].reshape(model.image_shape)
        member = int([i for i in range(9) if clusters[i] == j][0])
        np.testing.assert_array_equal(centroid, images[member].astype(float))


def test_kmeans_k1_is_elementwise_mean():
    rng = np.random.default_rng(1)
    images = tiny_images(rng, 5)
    model = kmeans_images(images, 1, seed=0)
    expected = np.stack([im.ravel() for im in images]).astype(float).mean(axis=0)
    np.testing.assert_allclose(model.centroids[0], expected)


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_kmeans_matches_exhaustive_partitions(k, seed):
    rng = np.random.default_rng(100 + seed)
    images = tiny_images(rng, 6, (4, 4))
    X = np.stack([im.ravel() for im in images]).astype(float)
    model = kmeans_images(images, k, seed=seed)
    ours = brute_force_kmeans_cost(
        X, [model.assignments[f"{i:04d}"] for i in range(6)]
    )
    assert ours == brute_force_kmeans(X, k)
    assert model.objective == pytest.approx(ours, rel=1e-12)


def test_kmeans_restart_path_finds_structured_clusters():
    # seeded restarts reach the optimum when the data has real structure
    rng = np.random.default_rng(55)
    base = [rng.integers(0, 256, (4, 4), dtype=np.uint8) for _ in range(3)]
    images = []
    for i in range(9):
        jittered = base[i % 3].astype(int) + rng.integers(-2, 3, (4, 4))
        images.append(np.clip(jittered, 0, 255).astype(np.uint8))
    X = np.stack([im.ravel() for im in images]).astype(float)
    model = kmeans_images(images, 3, seed=0, exact=False)
    assert model.objective == pytest.approx(brute_force_kmeans(X, 3), rel=1e-12)


def test_kmedoids_pam_path_finds_structured_clusters():
    rng = np.random.default_rng(56)
    base = [rng.integers(0, 256, (4, 4), dtype=np.uint8) for _ in range(2)]
    images = []
    for i in range(8):
        jittered = base[i % 2].astype(int) + rng.integers(-2, 3, (4, 4))
        images.append(np.clip(jittered, 0, 255).astype(np.uint8))
    model = kmedoids_images(images, 2, seed=0, exact=False)
    D = pairwise_distances(images, "euclidean")
    best, _ = brute_force_kmedoids(D, 2)
    assert model.objective == pytest.approx(best, rel=1e-12)


def test_kmeans_objective_history_non_increasing():
    rng = np.random.default_rng(2)
    images = tiny_images(rng, 8, (5, 5))
    model = kmeans_images(images, 3, seed=9, exact=False)
    assert all(a >= b - 1e-9 for a, b in zip(model.history, model.history[1:]))


def test_kmeans_rejects_too_few_images():
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        kmeans_images(tiny_images(rng, 2), 3)


def test_kmeans_deterministic_given_seed():
    rng = np.random.default_rng(4)
    images = tiny_images(rng, 7)
    a = kmeans_images(images, 3, seed=11, exact=False)
    b = kmeans_images(images, 3, seed=11, exact=False)
    assert a.assignments == b.assignments
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.centroids, b.centroids)


# ---------------------------------------------------------------- kmedoids


def test_kmedoids_recovers_identical_groups():
    rng = np.random.default_rng(5)
    groups = tiny_images(rng, 3, (6, 6))
    images = [groups[i % 3] for i in range(9)]
    model = kmedoids_images(images, 3, seed=1)
    assert model.objective == 0.0
    assert model.medoid_ids is not None
    for mid in model.medoid_ids:
        # every medoid is a member of its own cluster
        assert model.assignments[mid] == model.medoid_ids.index(mid)


def test_kmedoids_line_dataset_matches_brute_force():
    images = pixel_images([0, 1, 2, 10, 11])
    model = kmedoids_images(images, 2, seed=0)
    D = pairwise_distances(images, "euclidean")
    best, _ = brute_force_kmedoids(D, 2)
    assert best == 3.0  # medoids {1, 10} or {1, 11}
    assert model.objective == best


@pytest.mark.parametrize("distance", ["euclidean", "dtw"])
@pytest.mark.parametrize("seed", [0, 1])
def test_kmedoids_matches_exhaustive_medoid_sets(distance, seed):
    rng = np.random.default_rng(200 + seed)
    images = tiny_images(rng, 7, (3, 3))
    model = kmedoids_images(images, 3, distance=distance, seed=seed)
    D = pairwise_distances(images, distance)
    best, _ = brute_force_kmedoids(D, 3)
    medoid_idx = [model.ids.index(m) for m in model.medoid_ids]
    ours = float(D[:, medoid_idx].min(axis=1).sum())
    assert ours == best
    assert model.objective == pytest.approx(best, rel=1e-12)


def test_kmedoids_same_optimum_under_both_distances_on_flat_images():
    # 1-pixel images make warping equal the straight-line distance, so the
    # optimal medoid set (and cost) coincide
    images = pixel_images([0, 1, 2, 10, 11])
    m_euc = kmedoids_images(images, 2, distance="euclidean", seed=3)
    m_dtw = kmedoids_images(images, 2, distance="dtw", seed=3)
    assert m_euc.objective == m_dtw.objective
    for d in ("euclidean", "dtw"):
        D = pairwise_distances(images, d)
        best, _ = brute_force_kmedoids(D, 2)
        assert best == m_euc.objective


def test_kmedoids_swap_history_strictly_decreasing():
    rng = np.random.default_rng(6)
    images = tiny_images(rng, 9, (4, 4))
    model = kmedoids_images(images, 3, seed=2, exact=False)
    assert all(a > b for a, b in zip(model.history, model.history[1:]))


def test_kmedoids_final_medoids_are_swap_fixed_point():
    rng = np.random.default_rng(7)
    images = tiny_images(rng, 8, (4, 4))
    model = kmedoids_images(images, 2, seed=4, exact=False)
    D = pairwise_distances(images, "euclidean")
    medoid_idx = [model.ids.index(m) for m in model.medoid_ids]
    cost = float(D[:, medoid_idx].min(axis=1).sum())
    for pos in range(len(medoid_idx)):
        for h in range(len(images)):
            if h in medoid_idx:
                continue
            trial = list(medoid_idx)
            trial[pos] = h
            assert float(D[:, trial].min(axis=1).sum()) >= cost


def test_kmedoids_deterministic_given_seed():
    rng = np.random.default_rng(8)
    images = tiny_images(rng, 6)
    a = kmedoids_images(images, 2, seed=17, exact=False)
    b = kmedoids_images(images, 2, seed=17, exact=False)
    assert a.assignments == b.assignments
    assert a.medoid_ids == b.medoid_ids


def test_pairwise_dtw_never_exceeds_euclidean_at_matched_resolution():
    # at a resolution where no downsampling happens, warping can only
    # match or beat the rigid alignment
    rng = np.random.default_rng(11)
    images = [rng.integers(0, 256, (8, 8), dtype=np.uint8) for _ in range(5)]
    De = pairwise_distances(images, "euclidean")
    Dd = pairwise_distances(images, "dtw", dtw_side=8, dtw_band_frac=1.0)
    assert (Dd <= De + 1e-9).all()


def test_dtw_distance_uses_downsampling_for_large_images():
    rng = np.random.default_rng(9)
    images = [rng.integers(0, 256, (128, 128), dtype=np.uint8) for _ in range(3)]
    D = pairwise_distances(images, "dtw", dtw_side=16, dtw_band_frac=0.1)
    assert D.shape == (3, 3)
    assert np.allclose(D, D.T)
    assert (np.diag(D) == 0).all()


# ------------------------------------------------------- centroid records


def test_centroid_record_pool_matches_reference_mask():
    img, gt, _ = generate(SyntheticSpec(seed=21, pore_count=5))
    model = kmeans_images([img, img, img], 1, seed=0)
    records = build_centroid_records(model, filter_k=1, floor=50)
    assert len(records) == 1
    rec = records[0]
    assert rec.usable
    mask = make_reference_mask(rec.image, 1, floor=50)
    np.testing.assert_array_equal(mask, gt)
    # every pool coordinate is a foreground pixel of the mask
    assert mask[rec.pool[:, 1], rec.pool[:, 0]].all()
    assert len(rec.pool) == int(mask.sum())


def test_centroid_record_flagged_when_no_foreground():
    flat = np.full((16, 16), 7, dtype=np.uint8)
    model = kmeans_images([flat, flat, flat], 1, seed=0)
    with pytest.warns(UserWarning, match="unusable"):
        records = build_centroid_records(model, filter_k=1)
    assert not records[0].usable
    assert len(records[0].pool) == 0


def test_store_round_trip(tmp_path):
    img, _, _ = generate(SyntheticSpec(seed=22))
    model = kmeans_images([img, img, img], 1, seed=3)
    records = build_centroid_records(model, filter_k=1, floor=50)
    save_store(records, tmp_path / "store")
    loaded = load_store(tmp_path / "store")
    assert len(loaded) == len(records)
    for a, b in zip(records, loaded):
        assert a.cluster_index == b.cluster_index
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.pool, b.pool)
        assert a.provenance == b.provenance


def test_store_records_provenance(tmp_path):
    rng = np.random.default_rng(10)
    images = [
        generate(SyntheticSpec(seed=int(s)))[0] for s in rng.integers(0, 99, 4)
    ]
    model = kmedoids_images(images, 2, distance="dtw", seed=6)
    records = build_centroid_records(model, filter_k=1, floor=50)
    save_store(records, tmp_path / "store")
    loaded = load_store(tmp_path / "store")
    for rec in loaded:
        assert rec.provenance["method"] == "kmedoids"
        assert rec.provenance["distance"] == "dtw"
        assert rec.provenance["medoid_id"] in model.ids
        assert rec.provenance["members"]


def test_store_empty_record_list_round_trips(tmp_path):
    save_store([], tmp_path / "store")
    assert load_store(tmp_path / "store") == []


def test_store_rejects_out_of_bounds_pool(tmp_path):
    img, _, _ = generate(SyntheticSpec(seed=23))
    model = kmeans_images([img], 1, seed=0)
    records = build_centroid_records(model, filter_k=1, floor=50)
    save_store(records, tmp_path / "store")
    doc = json.loads((tmp_path / "store" / "store.json").read_text())
    doc["records"][0]["pool"][0] = [99999, 3]
    (tmp_path / "store" / "store.json").write_text(json.dumps(doc))
    with pytest.raises(StoreFormatError, match="record 0"):
        load_store(tmp_path / "store")


def test_store_rejects_missing_image(tmp_path):
    img, _, _ = generate(SyntheticSpec(seed=24))
    model = kmeans_images([img], 1, seed=0)
    save_store(build_centroid_records(model, filter_k=1, floor=50),
               tmp_path / "store")
    (tmp_path / "store" / "centroid_0.png").unlink()
    with pytest.raises(StoreFormatError, match="centroid_0.png"):
        load_store(tmp_path / "store")


def test_store_rejects_garbage_json(tmp_path):
    (tmp_path / "store").mkdir()
    (tmp_path / "store" / "store.json").write_text("{nope")
    with pytest.raises(StoreFormatError, match="invalid JSON"):
        load_store(tmp_path / "store")
