"""Synthetic XCT-like disc fixtures with exact pore ground truth.

Each layer is a bright solid disc on a dark (but nonzero) background with
darker circular pores inside; the nonzero background deliberately exercises
the background-floor handling of the literal binarization rule. Optional
solid-intensity speckles inside pores imitate unmelted particles trapped in
real pores; speckle pixels are excluded from the ground truth. Everything
is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class GenerationError(RuntimeError):
    """Pore placement failed within the retry budget."""


@dataclass(frozen=True)
class SyntheticSpec:
    side: int = 256
    disc_radius_frac: float = 0.42
    background: int = 10
    pore: int = 90
    solid: int = 200
    pore_count: int | None = 10
    pore_count_mean: float | None = None  # Poisson alternative to pore_count
    pore_radius: tuple[float, float] = (6.0, 12.0)
    allow_overlap: bool = False
    particle_prob: float = 0.0
    particle_intensity: int | None = None  # defaults to solid
    noise_sigma: float = 0.0
    salt_pepper: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.background < self.pore < self.solid <= 255):
            raise ValueError(
                "intensity ordering must be background < pore < solid, got "
                f"{self.background}, {self.pore}, {self.solid}"
            )
        if self.pore_radius[0] < 1 or self.pore_radius[1] < self.pore_radius[0]:
            raise ValueError(f"bad pore radius range {self.pore_radius}")
        if (self.pore_count is None) == (self.pore_count_mean is None):
            raise ValueError("set exactly one of pore_count / pore_count_mean")
        if self.side < 8:
            raise ValueError(f"side must be at least 8, got {self.side}")


def _disc_mask(side: int, cy: float, cx: float, r: float) -> np.ndarray:
    yy, xx = np.mgrid[:side, :side]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r**2


def generate(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build one layer. Returns (image, ground-truth pore mask, disc roi)."""
    rng = np.random.default_rng(spec.seed)
    side = spec.side
    center = (side - 1) / 2.0
    disc_r = spec.disc_radius_frac * side
    roi = _disc_mask(side, center, center, disc_r)

    count = (
        spec.pore_count
        if spec.pore_count is not None
        else int(rng.poisson(spec.pore_count_mean))
    )
    placed: list[tuple[float, float, float]] = []
    budget = 200 * max(count, 1)
    while len(placed) < count:
        if budget <= 0:
            raise GenerationError(
                f"could not place {count} non-overlapping pores "
                f"(placed {len(placed)})"
            )
        budget -= 1
        r = rng.uniform(*spec.pore_radius)
        margin = disc_r - r - 1.0
        if margin <= 0:
            raise GenerationError(f"pore radius {r:.1f} does not fit in the disc")
        rad = margin * np.sqrt(rng.uniform())
        ang = rng.uniform(0, 2 * np.pi)
        cy = center + rad * np.sin(ang)
        cx = center + rad * np.cos(ang)
        if not spec.allow_overlap:
            if any(
                np.hypot(cy - py, cx - px) <= r + pr + 1.0
                for py, px, pr in placed
            ):
                continue
        placed.append((cy, cx, r))

    pores = np.zeros((side, side), dtype=bool)
    particles = np.zeros((side, side), dtype=bool)
    particle_value = (
        spec.solid if spec.particle_intensity is None else spec.particle_intensity
    )
    for cy, cx, r in placed:
        pores |= _disc_mask(side, cy, cx, r)
        if spec.particle_prob > 0 and rng.uniform() < spec.particle_prob:
            pr = max(1.0, 0.3 * r)
            jr = (r - pr - 1.0) * np.sqrt(rng.uniform()) if r - pr > 1.0 else 0.0
            ja = rng.uniform(0, 2 * np.pi)
            particles |= _disc_mask(
                side, cy + jr * np.sin(ja), cx + jr * np.cos(ja), pr
            )
    particles &= pores

    img = np.full((side, side), spec.background, dtype=np.float64)
    img[roi] = spec.solid
    img[pores] = spec.pore
    img[particles] = particle_value
    gt = pores & ~particles

    if spec.noise_sigma > 0:
        img += rng.normal(0.0, spec.noise_sigma, size=img.shape)
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    if spec.salt_pepper > 0:
        n_noisy = int(round(spec.salt_pepper * img.size))
        flat_idx = rng.choice(img.size, size=n_noisy, replace=False)
        values = np.where(rng.uniform(size=n_noisy) < 0.5, 0, 255)
        img.ravel()[flat_idx] = values.astype(np.uint8)
    return img, gt, roi


def generate_stack(
    spec: SyntheticSpec, n_layers: int, drift: str = "reshuffle"
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Build a layer stack sharing one spec.

    drift="none" repeats the identical layer; drift="reshuffle" relocates
    (and resizes within the same range) the pores per layer while keeping
    the count and size distribution fixed.
    """
    if n_layers < 1:
        raise ValueError(f"need at least one layer, got {n_layers}")
    if drift == "none":
        layer = generate(spec)
        return [
            (layer[0].copy(), layer[1].copy(), layer[2].copy())
            for _ in range(n_layers)
        ]
    if drift != "reshuffle":
        raise ValueError(f"unknown drift policy {drift!r}")
    layers = []
    for i in range(n_layers):
        layer_seed = int(
            np.random.SeedSequence((spec.seed, i)).generate_state(1)[0]
        )
        layers.append(generate(replace(spec, seed=layer_seed)))
    return layers
