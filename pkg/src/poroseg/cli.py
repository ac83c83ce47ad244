"""Command-line pipeline driver.

Subcommands: synth (fixture stacks), refs (reference masks by thresholding),
cluster (centroid store), segment (fresh or reused centroids), bootstrap
(prompt-resampling uncertainty report), eval (score prediction directories).

A config file may hold any long flag as a ``key = value`` line (underscores
for dashes, ``#`` comments); explicit command-line flags win over file
values. Exit codes: 0 all images processed, 2 partial failures, 1 fatal.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .backend import BackendDescriptor, build_backend, segment_image, select_mask
from .clustering import (
    build_centroid_records,
    kmeans_images,
    kmedoids_images,
    load_store,
    save_store,
)
from .distances import euclidean
from .evaluation import (
    count_instances,
    dsc,
    porosity_pct,
    run_bootstrap_eval,
    write_bootstrap_csv,
    write_bootstrap_json,
)
from .image_core import (
    load_gray,
    load_mask,
    median_filter,
    save_gray,
    save_mask,
    to_model_input,
    transform_coords,
)
from .prompts import PromptSet
from .synth import SyntheticSpec, generate_stack
from .thresholding import reference_mask_with_stats

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


class FatalError(Exception):
    """Configuration or environment problem that aborts the whole run."""


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def parse_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` file; values are parsed as JSON when possible,
    otherwise kept as strings."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _apply_config(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill argparse None values from the config file, then from defaults."""
    file_cfg = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key in file_cfg:
        if key not in defaults:
            raise FatalError(f"config key {key!r} is not a setting of this command")
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, file_cfg.get(key, default))
    return args


def _collect_images(spec: str) -> dict[str, Path]:
    """Input images by id (file stem), lexicographic id order = layer order."""
    p = Path(spec)
    if p.is_dir():
        paths = sorted(p.glob("*.png"))
    else:
        paths = sorted(Path().glob(spec)) if not p.is_absolute() else sorted(
            p.parent.glob(p.name)
        )
    out = {path.stem: path for path in paths}
    if not out:
        raise FatalError(f"no input images match {spec!r}")
    return out


def _load_mask_dir(path: str | Path) -> dict[str, Path]:
    p = Path(path)
    if not p.is_dir():
        raise FatalError(f"mask directory does not exist: {p}")
    return {f.stem: f for f in sorted(p.glob("*.png"))}


def _config_snapshot(args: argparse.Namespace, skip=("config", "func")) -> dict:
    snap = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        snap[key] = str(value) if isinstance(value, Path) else value
    return snap


def _write_manifest(path: Path, command: str, config: dict, images: list[dict],
                    aggregate: dict, started_at: str) -> None:
    doc = {
        "tool_version": __version__,
        "command": command,
        "config": config,
        "images": images,
        "aggregate": aggregate,
        "started_at": started_at,
        "finished_at": _utcnow(),
    }
    path.write_text(json.dumps(doc, indent=2))


def _load_roi(args) -> np.ndarray | None:
    return load_mask(args.roi) if getattr(args, "roi", None) else None


# --------------------------------------------------------------------------
# synth


SYNTH_DEFAULTS = dict(
    layers=1, side=256, disc_frac=0.42, pores=10, pores_poisson=None,
    pore_radius=[6.0, 12.0], background=10, pore_intensity=90, solid=200,
    particle_prob=0.0, noise_sigma=0.0, salt_pepper=0.0, drift="reshuffle",
    seed=0, allow_overlap=False,
)


def cmd_synth(args: argparse.Namespace) -> int:
    _apply_config(args, SYNTH_DEFAULTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(
        side=args.side,
        disc_radius_frac=args.disc_frac,
        background=args.background,
        pore=args.pore_intensity,
        solid=args.solid,
        pore_count=None if args.pores_poisson is not None else args.pores,
        pore_count_mean=args.pores_poisson,
        pore_radius=tuple(args.pore_radius),
        allow_overlap=bool(args.allow_overlap),
        particle_prob=args.particle_prob,
        noise_sigma=args.noise_sigma,
        salt_pepper=args.salt_pepper,
        seed=args.seed,
    )
    layers = generate_stack(spec, args.layers, drift=args.drift)
    for i, (img, gt, roi) in enumerate(layers):
        save_gray(img, out / f"layer_{i:03d}.png")
        save_mask(gt, out / f"gt_layer_{i:03d}.png")
        save_mask(roi, out / f"roi_layer_{i:03d}.png")
    (out / "spec.json").write_text(
        json.dumps(
            {
                "spec": {
                    k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in vars(spec).items()
                },
                "layers": args.layers,
                "drift": args.drift,
            },
            indent=2,
        )
    )
    print(f"wrote {args.layers} layer(s) to {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# refs


REFS_DEFAULTS = dict(filter_k=3, floor=0, roi=None)


def cmd_refs(args: argparse.Namespace) -> int:
    _apply_config(args, REFS_DEFAULTS)
    images = _collect_images(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    roi = _load_roi(args)
    failed = []
    for image_id, path in images.items():
        try:
            img = load_gray(path)
            mask, cents = reference_mask_with_stats(
                img, args.filter_k, floor=args.floor, roi=roi
            )
        except Exception as e:
            failed.append((image_id, str(e)))
            print(f"[refs] {image_id}: FAILED ({e})", file=sys.stderr)
            continue
        save_mask(mask, out / f"{image_id}.png")
        (out / f"{image_id}.json").write_text(
            json.dumps(
                {
                    "c1": cents.c1,
                    "c2": cents.c2,
                    "c3": cents.c3,
                    "threshold": cents.threshold,
                    "filter_k": args.filter_k,
                    "floor": args.floor,
                },
                indent=2,
            )
        )
    print(f"[refs] wrote {len(images) - len(failed)}/{len(images)} masks to {out}")
    return EXIT_PARTIAL if failed else EXIT_OK


# --------------------------------------------------------------------------
# cluster


CLUSTER_DEFAULTS = dict(
    k=3, method="kmeans", distance="euclidean", seed=0, filter_k=3, floor=0,
    roi=None, dtw_side=64, dtw_band=0.10,
)


def _run_clustering(args, images: dict[str, np.ndarray]):
    ids = sorted(images)
    imgs = [images[i] for i in ids]
    if args.method == "kmeans":
        if args.distance != "euclidean":
            raise FatalError("kmeans supports only the euclidean distance")
        return kmeans_images(imgs, args.k, seed=args.seed, ids=ids)
    if args.method == "kmedoids":
        return kmedoids_images(
            imgs,
            args.k,
            distance=args.distance,
            seed=args.seed,
            ids=ids,
            dtw_side=args.dtw_side,
            dtw_band_frac=args.dtw_band,
        )
    raise FatalError(f"unknown clustering method {args.method!r}")


def cmd_cluster(args: argparse.Namespace) -> int:
    _apply_config(args, CLUSTER_DEFAULTS)
    paths = _collect_images(args.input)
    images = {i: load_gray(p) for i, p in paths.items()}
    roi = _load_roi(args)
    model = _run_clustering(args, images)
    records = build_centroid_records(model, args.filter_k, floor=args.floor, roi=roi)
    save_store(records, args.store)
    sizes = [len(model.members(j)) for j in range(model.k)]
    print(
        f"[cluster] method={model.method} distance={model.distance} k={model.k} "
        f"objective={model.objective:.6g} sizes={sizes}"
    )
    for rec in records:
        state = "ok" if rec.usable else "UNUSABLE (empty pool)"
        print(f"  centroid {rec.cluster_index}: pool={len(rec.pool)} {state}")
    print(f"[cluster] store written to {args.store}")
    return EXIT_OK


# --------------------------------------------------------------------------
# segment


SEGMENT_DEFAULTS = dict(
    k=3, method="kmeans", distance="euclidean", seed=0, filter_k=3, floor=0,
    roi=None, dtw_side=64, dtw_band=0.10, prompt_size=10_000, thresh=0.90,
    backend="oracle", model=None, store=None, refs=None, oracle_gt=None,
    oracle_scores=[0.7, 0.85, 0.95], jobs=1, no_prompt=False,
    pixel_divisor=1.0,
)


def _nearest_record_assignments(
    images: dict[str, np.ndarray], records
) -> dict[str, int]:
    """Reuse mode: attach each new image to the closest stored centroid."""
    out = {}
    for image_id, img in images.items():
        dists = [
            euclidean(img.ravel().astype(np.float64), rec.image.ravel().astype(np.float64))
            for rec in records
        ]
        out[image_id] = records[int(np.argmin(dists))].cluster_index
    return out


def _prepare_records(args, images):
    """Fresh mode clusters the inputs; reuse mode loads the given store."""
    roi = _load_roi(args)
    if args.store:
        records = load_store(args.store)
        assignments = _nearest_record_assignments(images, records)
        return records, assignments
    model = _run_clustering(args, images)
    records = build_centroid_records(model, args.filter_k, floor=args.floor, roi=roi)
    return records, dict(model.assignments)


def _backend_descriptor(args) -> BackendDescriptor:
    return BackendDescriptor(
        kind=args.backend,
        model_path=Path(args.model) if args.model else None,
        oracle_scores=tuple(float(s) for s in args.oracle_scores),
        pixel_divisor=args.pixel_divisor,
    )


def _oracle_gt_masks(args, images) -> dict[str, np.ndarray]:
    gt_dir = args.oracle_gt or args.refs
    if not gt_dir:
        raise FatalError("oracle backend needs --oracle-gt (or --refs) masks")
    paths = _load_mask_dir(gt_dir)
    missing = sorted(set(images) - set(paths))
    if missing:
        raise FatalError(f"oracle ground truth missing for images: {missing}")
    return {i: load_mask(paths[i]) for i in images}


def cmd_segment(args: argparse.Namespace) -> int:
    _apply_config(args, SEGMENT_DEFAULTS)
    started = _utcnow()
    paths = _collect_images(args.input)
    images = {i: load_gray(p) for i, p in paths.items()}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    records, assignments = _prepare_records(args, images)
    by_cluster = {rec.cluster_index: rec for rec in records}
    desc = _backend_descriptor(args)
    oracle_gt = _oracle_gt_masks(args, images) if desc.kind == "oracle" else {}
    refs = {}
    if args.refs:
        ref_paths = _load_mask_dir(args.refs)
        refs = {i: load_mask(ref_paths[i]) for i in images if i in ref_paths}

    shared_backend = build_backend(desc) if desc.kind == "model-file" else None
    ids = sorted(images)

    def process(item):
        idx, image_id = item
        t0 = time.perf_counter()
        rec = by_cluster.get(assignments[image_id])
        backend = (
            shared_backend
            if shared_backend is not None
            else build_backend(desc, gt=oracle_gt[image_id])
        )
        img = images[image_id]
        if args.no_prompt:
            if desc.kind != "model-file":
                raise ValueError("--no-prompt is an integration flag for the "
                                 "model-file backend only")
            model_input = to_model_input(median_filter(img, args.filter_k))
            empty = PromptSet(points=np.empty((0, 2), dtype=np.int64),
                              labels=np.empty(0, dtype=np.int64))
            triplet = backend.predict(
                model_input, transform_coords(empty, model_input)
            )
            mask, chosen = select_mask(triplet, args.thresh)
            scores = triplet.scores
        else:
            if rec is None or not rec.usable:
                raise ValueError("no usable centroid record for this image")
            mask, chosen, scores = segment_image(
                img, rec, args.prompt_size, (args.seed, idx), backend,
                thresh=args.thresh, filter_k=args.filter_k,
            )
        seconds = time.perf_counter() - t0
        score = dsc(mask, refs[image_id]) if image_id in refs else None
        return image_id, mask, chosen, scores, score, seconds

    results = {}
    failures = []
    tasks = list(enumerate(ids))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for item, outcome in zip(tasks, pool.map(lambda t: _safe(process, t), tasks)):
                _record_outcome(item[1], outcome, results, failures)
    else:
        for item in tasks:
            _record_outcome(item[1], _safe(process, item), results, failures)

    manifest_images = []
    scored = []
    for image_id in ids:
        if image_id in results:
            _, mask, chosen, scores, score, seconds = results[image_id]
            save_mask(mask, out / f"mask_{image_id}.png")
            (out / f"meta_{image_id}.json").write_text(
                json.dumps(
                    {
                        "chosen_index": chosen,
                        "scores": list(scores),
                        "dsc": score,
                        "seconds": seconds,
                    },
                    indent=2,
                )
            )
            manifest_images.append(
                {
                    "id": image_id,
                    "status": "ok",
                    "chosen_index": chosen,
                    "scores": list(scores),
                    "dsc": score,
                    "seconds": seconds,
                }
            )
            if score is not None:
                scored.append(score)
        else:
            reason = dict(failures)[image_id]
            manifest_images.append(
                {"id": image_id, "status": "failed", "reason": reason}
            )
    aggregate = {
        "processed": len(results),
        "failed": len(failures),
        "mean_dsc": float(np.mean(scored)) if scored else None,
        "std_dsc": float(np.std(scored)) if scored else None,
        "mode": "reuse" if args.store else "fresh",
    }
    _write_manifest(
        out / "manifest.json", "segment", _config_snapshot(args),
        manifest_images, aggregate, started,
    )
    print(
        f"[segment] processed {len(results)}/{len(ids)} images"
        + (f", mean DSC {aggregate['mean_dsc']:.4f}" if scored else "")
    )
    return EXIT_PARTIAL if failures else EXIT_OK


def _safe(fn, item):
    try:
        return fn(item)
    except Exception as e:  # per-image failures keep the batch going
        return e


def _record_outcome(image_id, outcome, results, failures):
    if isinstance(outcome, Exception):
        failures.append((image_id, str(outcome)))
        print(f"[segment] {image_id}: FAILED ({outcome})", file=sys.stderr)
    else:
        results[image_id] = outcome


# --------------------------------------------------------------------------
# bootstrap


BOOTSTRAP_DEFAULTS = {
    k: v for k, v in SEGMENT_DEFAULTS.items() if k != "no_prompt"
} | dict(bootstrap_iters=100, alpha=0.05)


def cmd_bootstrap(args: argparse.Namespace) -> int:
    _apply_config(args, BOOTSTRAP_DEFAULTS)
    started = _utcnow()
    paths = _collect_images(args.input)
    images = {i: load_gray(p) for i, p in paths.items()}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    roi = _load_roi(args)

    records, assignments = _prepare_records(args, images)
    desc = _backend_descriptor(args)

    if args.refs:
        ref_paths = _load_mask_dir(args.refs)
        refs = {i: load_mask(ref_paths[i]) for i in images if i in ref_paths}
    else:
        # no reference directory: score against thresholding-derived masks
        refs = {}
        for image_id, img in images.items():
            try:
                refs[image_id], _ = reference_mask_with_stats(
                    img, args.filter_k, floor=args.floor, roi=roi
                )
            except Exception as e:
                print(f"[bootstrap] {image_id}: no reference ({e})", file=sys.stderr)

    if desc.kind == "oracle":
        oracle_gt = _oracle_gt_masks(args, images)

        def backend(image_id):
            return build_backend(desc, gt=oracle_gt[image_id])
    else:
        backend = build_backend(desc)

    report = run_bootstrap_eval(
        images,
        refs,
        records,
        assignments,
        backend,
        m=args.prompt_size,
        B=args.bootstrap_iters,
        seed=args.seed,
        thresh=args.thresh,
        filter_k=args.filter_k,
        alpha=args.alpha,
        jobs=args.jobs,
    )
    write_bootstrap_csv(report, out / "report.csv")
    write_bootstrap_json(report, out / "report.json")
    _write_manifest(
        out / "manifest.json", "bootstrap", _config_snapshot(args),
        [
            {"id": i, "status": "ok"} if i in report.per_image
            else {"id": i, "status": "skipped",
                  "reason": dict(report.skipped).get(i, "")}
            for i in sorted(images)
        ],
        report.aggregate, started,
    )
    agg = report.aggregate
    if agg["images"]:
        print(
            f"[bootstrap] {agg['images']} images: mean DSC "
            f"{agg['mean_dsc']:.4f} +/- {agg['std_dsc']:.4f}, mean CI length "
            f"{agg['mean_ci_length']:.6f} +/- {agg['std_ci_length']:.6f}"
        )
    print(f"[bootstrap] reports written to {out}")
    return EXIT_PARTIAL if report.skipped else EXIT_OK


# --------------------------------------------------------------------------
# eval


EVAL_DEFAULTS = dict(connectivity=8, roi=None)


def cmd_eval(args: argparse.Namespace) -> int:
    _apply_config(args, EVAL_DEFAULTS)
    pred_paths = _load_mask_dir(args.pred)
    ref_paths = _load_mask_dir(args.refs)
    # prediction files may carry a mask_ prefix from the segment command
    pred_ids = {}
    for stem, p in pred_paths.items():
        pred_ids[stem.removeprefix("mask_")] = p
    common = sorted(set(pred_ids) & set(ref_paths))
    if not common:
        raise FatalError("no overlapping image ids between --pred and --refs")
    roi = _load_roi(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for image_id in common:
        pred = load_mask(pred_ids[image_id])
        ref = load_mask(ref_paths[image_id])
        rows.append(
            {
                "image_id": image_id,
                "dsc": dsc(pred, ref),
                "instances_pred": count_instances(pred, args.connectivity),
                "instances_ref": count_instances(ref, args.connectivity),
                "porosity_pred": porosity_pct(pred, roi),
                "porosity_ref": porosity_pct(ref, roi),
            }
        )
    with open(out / "eval.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v)
                        for k, v in row.items()})
    scores = [r["dsc"] for r in rows]
    summary = {
        "images": len(rows),
        "mean_dsc": float(np.mean(scores)),
        "std_dsc": float(np.std(scores)),
        "connectivity": args.connectivity,
    }
    (out / "eval.json").write_text(
        json.dumps({"aggregate": summary, "per_image": rows}, indent=2)
    )
    print(
        f"[eval] {len(rows)} images: mean DSC {summary['mean_dsc']:.4f} "
        f"+/- {summary['std_dsc']:.4f}"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_common_cluster_flags(p):
    p.add_argument("--k", type=int)
    p.add_argument("--method", choices=["kmeans", "kmedoids"])
    p.add_argument("--distance", choices=["euclidean", "dtw"])
    p.add_argument("--dtw-side", type=int, dest="dtw_side")
    p.add_argument("--dtw-band", type=float, dest="dtw_band")


def _add_threshold_flags(p):
    p.add_argument("--filter-k", type=int, dest="filter_k")
    p.add_argument("--floor", type=int)
    p.add_argument("--roi")


def _add_backend_flags(p):
    p.add_argument("--backend", choices=["oracle", "model-file"])
    p.add_argument("--model")
    p.add_argument("--oracle-gt", dest="oracle_gt")
    p.add_argument("--oracle-scores", dest="oracle_scores", type=float, nargs=3)
    p.add_argument("--pixel-divisor", dest="pixel_divisor", type=float)
    p.add_argument("--thresh", type=float)
    p.add_argument("--prompt-size", dest="prompt_size", type=int)
    p.add_argument("--refs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poroseg",
        description="Unsupervised porosity segmentation for layer-wise XCT stacks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic fixture stacks")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--layers", type=int)
    p.add_argument("--side", type=int)
    p.add_argument("--disc-frac", dest="disc_frac", type=float)
    p.add_argument("--pores", type=int)
    p.add_argument("--pores-poisson", dest="pores_poisson", type=float)
    p.add_argument("--pore-radius", dest="pore_radius", type=float, nargs=2)
    p.add_argument("--background", type=int)
    p.add_argument("--pore-intensity", dest="pore_intensity", type=int)
    p.add_argument("--solid", type=int)
    p.add_argument("--particle-prob", dest="particle_prob", type=float)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--salt-pepper", dest="salt_pepper", type=float)
    p.add_argument("--allow-overlap", dest="allow_overlap", action="store_const",
                   const=True)
    p.add_argument("--drift", choices=["none", "reshuffle"])
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("refs", help="reference masks by thresholding")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    _add_threshold_flags(p)
    p.set_defaults(func=cmd_refs)

    p = sub.add_parser("cluster", help="cluster layers into a centroid store")
    p.add_argument("--input", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    _add_common_cluster_flags(p)
    _add_threshold_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("segment", help="segment a stack (fresh or reused centroids)")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--store")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-prompt", dest="no_prompt", action="store_const", const=True)
    _add_common_cluster_flags(p)
    _add_threshold_flags(p)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("bootstrap", help="prompt-bootstrap uncertainty report")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--store")
    p.add_argument("--seed", type=int)
    p.add_argument("--bootstrap-iters", dest="bootstrap_iters", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--jobs", type=int)
    _add_common_cluster_flags(p)
    _add_threshold_flags(p)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("eval", help="score a directory of predicted masks")
    p.add_argument("--pred", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--connectivity", type=int, choices=[4, 8])
    p.add_argument("--roi")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FatalError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
