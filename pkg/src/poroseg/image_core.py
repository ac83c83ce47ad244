"""Grayscale image handling: PNG I/O, median denoising, and the geometry
contract that places images and prompt coordinates into the fixed
1024x1024 model frame.

Images are 2-D uint8 arrays (row-major, intensities 0..255); masks are 2-D
bool arrays of the same shape (True = foreground). The model frame scales
the longest side to 1024 with bilinear interpolation, replicates the result
to three identical channels, and zero-pads on the right/bottom so the
origin stays fixed and coordinate transforms are a pure scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .prompts import PromptSet

MODEL_SIDE = 1024


class ImageFormatError(ValueError):
    """File decoded, but not to a supported 8-bit raster."""


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def ensure_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(
            f"expected a 2-D uint8 image, got shape {img.shape} dtype {img.dtype}"
        )
    return img


def ensure_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != np.bool_:
        raise ValueError(
            f"expected a 2-D bool mask, got shape {mask.shape} dtype {mask.dtype}"
        )
    return mask


def load_gray(path: str | Path) -> np.ndarray:
    """Load an 8-bit grayscale PNG; RGB inputs are averaged to gray.

    The RGB average uses the arithmetic channel mean rounded half-up, which
    is deterministic and channel-symmetric. Unreadable files raise OSError;
    other pixel formats (16-bit, palette, alpha) raise ImageFormatError.
    """
    with Image.open(path) as im:
        im.load()
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode == "RGB":
            arr = np.asarray(im, dtype=np.float64)
            return _round_half_up(arr.mean(axis=2)).astype(np.uint8)
        raise ImageFormatError(
            f"{path}: unsupported image mode {im.mode!r} "
            f"(expected 8-bit grayscale or RGB)"
        )


def save_gray(img: np.ndarray, path: str | Path) -> None:
    Image.fromarray(ensure_gray(img), mode="L").save(path, format="PNG")


def load_mask(path: str | Path) -> np.ndarray:
    """Load a {0, 255} PNG mask (255 = foreground)."""
    raw = load_gray(path)
    bad = np.setdiff1d(np.unique(raw), [0, 255])
    if bad.size:
        raise ImageFormatError(
            f"{path}: mask contains values {bad.tolist()}, expected only 0 and 255"
        )
    return raw == 255


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    save_gray(ensure_mask(mask).astype(np.uint8) * 255, path)


def median_filter(img: np.ndarray, k: int = 3) -> np.ndarray:
    """Median-filter with a k x k window; borders replicate the edge pixel."""
    img = ensure_gray(img)
    if not isinstance(k, (int, np.integer)) or k < 1 or k % 2 == 0:
        raise ValueError(f"median window must be a positive odd integer, got {k}")
    if k == 1:
        return img.copy()
    return ndimage.median_filter(img, size=int(k), mode="nearest")


@dataclass(frozen=True)
class ModelInput:
    """An image resampled into the model frame plus the geometry to undo it.

    ``pixels`` is (1024, 1024, 3) uint8 with three identical channels;
    ``scale`` is the original->model ratio; the content occupies the
    top-left (content_height x content_width) region, the rest is zero
    padding on the right/bottom.
    """

    pixels: np.ndarray
    scale: float
    pad_x: int
    pad_y: int
    orig_width: int
    orig_height: int

    @property
    def content_width(self) -> int:
        return MODEL_SIDE - self.pad_x

    @property
    def content_height(self) -> int:
        return MODEL_SIDE - self.pad_y


def to_model_input(img: np.ndarray) -> ModelInput:
    """Scale the longest side to 1024 (bilinear), replicate to 3 channels,
    zero-pad right/bottom to a 1024x1024 frame."""
    img = ensure_gray(img)
    h, w = img.shape
    if h < 1 or w < 1:
        raise ValueError("image must be at least 1x1")
    scale = MODEL_SIDE / max(w, h)
    # extreme aspect ratios must still keep at least one content pixel
    cw = max(1, int(_round_half_up(w * scale)))
    ch = max(1, int(_round_half_up(h * scale)))
    resized = np.asarray(
        Image.fromarray(img, mode="L").resize((cw, ch), Image.BILINEAR),
        dtype=np.uint8,
    )
    canvas = np.zeros((MODEL_SIDE, MODEL_SIDE), dtype=np.uint8)
    canvas[:ch, :cw] = resized
    pixels = np.repeat(canvas[:, :, None], 3, axis=2)
    return ModelInput(
        pixels=pixels,
        scale=scale,
        pad_x=MODEL_SIDE - cw,
        pad_y=MODEL_SIDE - ch,
        orig_width=w,
        orig_height=h,
    )


def transform_coords(prompts: PromptSet, model_input: ModelInput) -> PromptSet:
    """Map prompt coordinates into the model frame with the same scale as
    the pixels; labels and order are preserved.

    Rounded coordinates are clamped into the content region so a point can
    never land in the padding. For originals whose longest side is at most
    2048 (scale >= 0.5) the round trip back to the original frame is within
    one pixel.
    """
    pts = prompts.points
    w, h = model_input.orig_width, model_input.orig_height
    if len(pts):
        x, y = pts[:, 0], pts[:, 1]
        if x.min() < 0 or y.min() < 0 or x.max() >= w or y.max() >= h:
            raise ValueError(
                f"prompt coordinates outside the {w}x{h} original image"
            )
    mapped = _round_half_up(pts * model_input.scale).astype(np.int64)
    if len(mapped):
        mapped[:, 0] = np.minimum(mapped[:, 0], model_input.content_width - 1)
        mapped[:, 1] = np.minimum(mapped[:, 1], model_input.content_height - 1)
    return PromptSet(
        points=mapped,
        labels=prompts.labels.copy(),
        source=prompts.source,
        seed=prompts.seed,
    )


def inverse_transform_points(points: np.ndarray, model_input: ModelInput) -> np.ndarray:
    """Map model-frame (x, y) points back to original-frame pixel indices."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    back = _round_half_up(pts / model_input.scale).astype(np.int64)
    if len(back):
        back[:, 0] = np.clip(back[:, 0], 0, model_input.orig_width - 1)
        back[:, 1] = np.clip(back[:, 1], 0, model_input.orig_height - 1)
    return back


def mask_to_original(mask: np.ndarray, model_input: ModelInput) -> np.ndarray:
    """Crop the content region of a model-frame mask and resize it back to
    the original resolution (nearest neighbor)."""
    mask = ensure_mask(mask)
    if mask.shape != (MODEL_SIDE, MODEL_SIDE):
        raise ValueError(
            f"expected a {MODEL_SIDE}x{MODEL_SIDE} model-frame mask, got {mask.shape}"
        )
    content = mask[: model_input.content_height, : model_input.content_width]
    im = Image.fromarray(content.astype(np.uint8) * 255, mode="L")
    im = im.resize((model_input.orig_width, model_input.orig_height), Image.NEAREST)
    return np.asarray(im) > 0
