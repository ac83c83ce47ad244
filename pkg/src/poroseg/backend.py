"""Promptable-segmentation backends and the rank-threshold selection rule.

A backend consumes a model-frame input plus model-frame point prompts and
returns three candidate masks (subpart, part, whole object) in the original
image resolution together with the model's own predicted-IoU score for
each. Masks are indexed in ascending predicted-IoU rank order: subpart
masks normally score lowest and whole-object masks highest, and the
selection rule relies on that ordering.

Two implementations are provided: a deterministic oracle built from a known
ground-truth mask (the test double for the whole pipeline) and an ONNX
model-file backend that drives exported encoder/decoder graphs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy import ndimage

from .clustering import CentroidRecord
from .image_core import (
    MODEL_SIDE,
    ModelInput,
    ensure_gray,
    ensure_mask,
    inverse_transform_points,
    median_filter,
    to_model_input,
    transform_coords,
)
from .prompts import PromptSet, generate_prompts

DEFAULT_SELECT_THRESHOLD = 0.90


class BackendError(RuntimeError):
    """Backend could not be loaded or produced malformed output."""


@dataclass(frozen=True)
class SegmentationTriplet:
    """Three candidate masks with predicted-IoU scores, ascending rank order
    (0 = subpart, 1 = part, 2 = whole object)."""

    masks: tuple[np.ndarray, np.ndarray, np.ndarray]
    scores: tuple[float, float, float]

    def __post_init__(self):
        if len(self.masks) != 3 or len(self.scores) != 3:
            raise ValueError("a triplet holds exactly three masks and scores")
        shape = self.masks[0].shape
        for m in self.masks:
            ensure_mask(m)
            if m.shape != shape:
                raise ValueError("triplet masks must share one shape")
        for s in self.scores:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"scores must be in [0, 1], got {s}")


class Backend(Protocol):
    def predict(
        self, model_input: ModelInput, prompts: PromptSet
    ) -> SegmentationTriplet: ...


def select_mask(
    triplet: SegmentationTriplet, thresh: float = DEFAULT_SELECT_THRESHOLD
) -> tuple[np.ndarray, int]:
    """Pick the part mask, unless its score exceeds the threshold (meaning
    it degenerated to the whole object), in which case pick the subpart."""
    idx = 0 if triplet.scores[1] > thresh else 1
    return triplet.masks[idx], idx


def _connectivity_structure(connectivity: int) -> np.ndarray:
    if connectivity == 8:
        return np.ones((3, 3), dtype=bool)
    if connectivity == 4:
        return np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def _bounding_disc(mask: np.ndarray) -> np.ndarray:
    """Smallest centroid-centered disc covering the foreground."""
    if not mask.any():
        return np.zeros_like(mask)
    ys, xs = np.nonzero(mask)
    cy, cx = ys.mean(), xs.mean()
    r = np.sqrt(((ys - cy) ** 2 + (xs - cx) ** 2).max())
    yy, xx = np.mgrid[: mask.shape[0], : mask.shape[1]]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r**2


class OracleBackend:
    """Deterministic test double derived from a known ground-truth mask.

    Subpart = union of ground-truth connected components containing at
    least one prompt; part = the full ground truth; whole = a filled disc
    covering the ground-truth support. Scores are configured, not computed.
    """

    def __init__(
        self,
        gt: np.ndarray,
        scores: tuple[float, float, float] = (0.7, 0.85, 0.95),
        connectivity: int = 8,
    ):
        self.gt = ensure_mask(gt)
        for s in scores:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"scores must be in [0, 1], got {s}")
        self.scores = tuple(float(s) for s in scores)
        self._labels, self._n_components = ndimage.label(
            self.gt, structure=_connectivity_structure(connectivity)
        )
        self._whole = _bounding_disc(self.gt)

    def predict(
        self, model_input: ModelInput, prompts: PromptSet
    ) -> SegmentationTriplet:
        if self.gt.shape != (model_input.orig_height, model_input.orig_width):
            raise BackendError(
                f"oracle ground truth shape {self.gt.shape} does not match "
                f"input {model_input.orig_height}x{model_input.orig_width}"
            )
        pts = inverse_transform_points(prompts.points, model_input)
        hit = np.unique(self._labels[pts[:, 1], pts[:, 0]]) if len(pts) else []
        hit = [h for h in np.atleast_1d(hit) if h != 0]
        subpart = (
            np.isin(self._labels, hit)
            if hit
            else np.zeros_like(self.gt)
        )
        return SegmentationTriplet(
            masks=(subpart, self.gt.copy(), self._whole.copy()),
            scores=self.scores,
        )


def make_oracle(
    gt: np.ndarray, scores: tuple[float, float, float] = (0.7, 0.85, 0.95)
) -> OracleBackend:
    return OracleBackend(gt, scores)


class OnnxModelBackend:
    """Drives exported encoder/decoder ONNX graphs of a promptable
    segmentation model.

    Expects ``encoder.onnx`` (image -> embedding) and ``decoder.onnx``
    (embedding + points -> masks + scores) under ``model_dir``. The decoder
    is fed the standard exported-decoder inputs (point_coords, point_labels,
    mask_input, has_mask_input, orig_im_size); a padding point with label -1
    is appended to the prompts. Raw outputs are re-sorted into ascending
    predicted-IoU order, thresholded at logit 0, and mapped back to the
    original resolution.
    """

    def __init__(
        self,
        model_dir: str | Path,
        providers: list[str] | None = None,
        pixel_divisor: float = 1.0,
    ):
        try:
            import onnxruntime  # noqa: PLC0415 - optional dependency
        except ImportError as e:
            raise BackendError(
                "the model-file backend requires onnxruntime "
                "(pip install poroseg[onnx])"
            ) from e
        root = Path(model_dir)
        enc_path = root / "encoder.onnx"
        dec_path = root / "decoder.onnx"
        for p in (enc_path, dec_path):
            if not p.exists():
                raise BackendError(f"missing model graph: {p}")
        opts = {"providers": providers} if providers else {}
        try:
            self._encoder = onnxruntime.InferenceSession(str(enc_path), **opts)
            self._decoder = onnxruntime.InferenceSession(str(dec_path), **opts)
        except Exception as e:
            raise BackendError(f"failed to load model graphs from {root}: {e}") from e
        self._pixel_divisor = float(pixel_divisor)
        self._encoder_input = self._encoder.get_inputs()[0].name
        self._decoder_inputs = {i.name for i in self._decoder.get_inputs()}
        self._cache_key: int | None = None
        self._cache_embedding = None
        self.last_predict_seconds: float | None = None

    def _embed(self, model_input: ModelInput):
        key = id(model_input)
        if key == self._cache_key:
            return self._cache_embedding
        chw = model_input.pixels.astype(np.float32).transpose(2, 0, 1)
        if self._pixel_divisor != 1.0:
            chw = chw / self._pixel_divisor
        out = self._encoder.run(None, {self._encoder_input: chw[None]})
        self._cache_key = key
        self._cache_embedding = out[0]
        return self._cache_embedding

    def predict(
        self, model_input: ModelInput, prompts: PromptSet
    ) -> SegmentationTriplet:
        start = time.perf_counter()
        embedding = self._embed(model_input)
        coords = prompts.points.astype(np.float32)
        labels = prompts.labels.astype(np.float32)
        # exported decoders expect a padding point when no box prompt is given
        coords = np.concatenate([coords, [[0.0, 0.0]]], axis=0)
        labels = np.concatenate([labels, [-1.0]], axis=0)
        feeds = {
            "image_embeddings": embedding,
            "point_coords": coords[None],
            "point_labels": labels[None],
            "mask_input": np.zeros((1, 1, 256, 256), dtype=np.float32),
            "has_mask_input": np.zeros(1, dtype=np.float32),
            "orig_im_size": np.array(
                [model_input.orig_height, model_input.orig_width], dtype=np.float32
            ),
        }
        feeds = {k: v for k, v in feeds.items() if k in self._decoder_inputs}
        try:
            masks, scores = self._decoder.run(
                ["masks", "iou_predictions"], feeds
            )
        except Exception as e:
            raise BackendError(f"decoder run failed: {e}") from e
        masks = np.asarray(masks)[0]
        scores = np.asarray(scores, dtype=np.float64).reshape(-1)
        if masks.shape[0] != scores.shape[0] or masks.shape[0] < 3:
            raise BackendError(
                f"decoder returned {masks.shape[0]} masks and "
                f"{scores.shape[0]} scores; need at least three of each"
            )
        if masks.shape[0] > 3:
            # multimask exports prepend a single-mask output; keep the last 3
            masks, scores = masks[-3:], scores[-3:]
        order = np.argsort(scores, kind="stable")
        masks, scores = masks[order], scores[order]
        out_masks = tuple(
            self._to_original(masks[i] > 0, model_input) for i in range(3)
        )
        out_scores = tuple(float(np.clip(s, 0.0, 1.0)) for s in scores)
        self.last_predict_seconds = time.perf_counter() - start
        return SegmentationTriplet(masks=out_masks, scores=out_scores)

    @staticmethod
    def _to_original(mask: np.ndarray, model_input: ModelInput) -> np.ndarray:
        from .image_core import mask_to_original

        h, w = model_input.orig_height, model_input.orig_width
        if mask.shape == (h, w):
            return mask.astype(bool)
        if mask.shape == (MODEL_SIDE, MODEL_SIDE):
            return mask_to_original(mask.astype(bool), model_input)
        raise BackendError(
            f"decoder mask shape {mask.shape} is neither the original "
            f"{h}x{w} nor the {MODEL_SIDE}x{MODEL_SIDE} model frame"
        )


@dataclass
class BackendDescriptor:
    """Configuration-level backend choice; resolved into instances by
    build_backend (per image for the oracle, shared for model files)."""

    kind: str  # "oracle" | "model-file"
    model_path: Path | None = None
    oracle_scores: tuple[float, float, float] = (0.7, 0.85, 0.95)
    device: str | None = None
    pixel_divisor: float = 1.0

    def __post_init__(self):
        if self.kind not in ("oracle", "model-file"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "model-file":
            if self.model_path is None:
                raise ValueError("model-file backend needs a model path")
            self.model_path = Path(self.model_path)
            if not self.model_path.exists():
                raise ValueError(f"model path does not exist: {self.model_path}")


def build_backend(desc: BackendDescriptor, gt: np.ndarray | None = None) -> Backend:
    if desc.kind == "oracle":
        if gt is None:
            raise ValueError("oracle backend needs a ground-truth mask per image")
        return OracleBackend(gt, desc.oracle_scores)
    providers = [desc.device] if desc.device else None
    return OnnxModelBackend(
        desc.model_path, providers=providers, pixel_divisor=desc.pixel_divisor
    )


def segment_image(
    img: np.ndarray,
    record: CentroidRecord,
    m: int,
    seed,
    backend: Backend,
    thresh: float = DEFAULT_SELECT_THRESHOLD,
    filter_k: int = 3,
) -> tuple[np.ndarray, int, tuple[float, float, float]]:
    """Run the full single-image pipeline: denoise, map to the model frame,
    draw prompts from the centroid pool, predict, select a mask.

    Returns (mask in original resolution, chosen index, predicted scores).
    """
    img = ensure_gray(img)
    filtered = median_filter(img, filter_k)
    model_input = to_model_input(filtered)
    prompts = generate_prompts(record, m, seed)
    prompts_model = transform_coords(prompts, model_input)
    triplet = backend.predict(model_input, prompts_model)
    mask, idx = select_mask(triplet, thresh)
    return mask, idx, triplet.scores
