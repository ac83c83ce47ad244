"""Point-prompt sampling from centroid foreground pools.

Prompt coordinates are (x, y) = (column, row) pairs in the original image
frame; every emitted point is a member of the source pool. All sampling uses
numpy's PCG64 generator (``numpy.random.default_rng``) so that identical
seeds reproduce identical prompt sets across runs and platforms.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .clustering import CentroidRecord

SeedLike = int | Sequence[int]


class UnusableRecordError(ValueError):
    """Raised when a centroid record has an empty foreground pool."""


@dataclass
class PromptSet:
    """Sparse point prompts: foreground coordinates plus all-ones class labels."""

    points: np.ndarray  # (n, 2) int64, columns (x, y)
    labels: np.ndarray  # (n,) int64, every entry 1
    source: str = ""
    seed: tuple[int, ...] | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.points) != len(self.labels):
            raise ValueError(
                f"{len(self.points)} points but {len(self.labels)} labels"
            )
        if len(self.labels) and not np.all(self.labels == 1):
            raise ValueError("prompt labels must all be 1 (foreground)")

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "labels": self.labels.tolist(),
            "source": self.source,
            "seed": list(self.seed) if self.seed is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptSet":
        seed = d.get("seed")
        return cls(
            points=np.asarray(d["points"], dtype=np.int64).reshape(-1, 2),
            labels=np.asarray(d["labels"], dtype=np.int64),
            source=d.get("source", ""),
            seed=tuple(seed) if seed is not None else None,
        )


def save_prompts(ps: PromptSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ps.to_dict()))


def load_prompts(path: str | Path) -> PromptSet:
    return PromptSet.from_dict(json.loads(Path(path).read_text()))


def _seed_tuple(seed: SeedLike) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def generate_prompts(record: "CentroidRecord", m: int, seed: SeedLike = 0) -> PromptSet:
    """Sample ``m`` distinct pool points uniformly without replacement.

    When ``m`` meets or exceeds the pool size the whole pool is returned
    (with a warning if it was exceeded); the sampler assumes m is normally
    far below the pool size.
    """
    pool = record.pool
    if len(pool) == 0:
        raise UnusableRecordError(
            f"record {record.record_id} has an empty foreground pool"
        )
    if m < 1:
        raise ValueError(f"prompt count must be >= 1, got {m}")
    seed_t = _seed_tuple(seed)
    if m >= len(pool):
        if m > len(pool):
            warnings.warn(
                f"requested {m} prompts from a pool of {len(pool)}; "
                f"returning the whole pool",
                stacklevel=2,
            )
        points = pool.copy()
    else:
        rng = np.random.default_rng(seed_t)
        idx = rng.choice(len(pool), size=m, replace=False)
        points = pool[idx]
    return PromptSet(
        points=points,
        labels=np.ones(len(points), dtype=np.int64),
        source=record.record_id,
        seed=seed_t,
    )


def bootstrap_prompts(
    record: "CentroidRecord", m: int, B: int = 100, seed: SeedLike = 0
) -> list[PromptSet]:
    """Draw ``B`` independent prompt sets of ``m`` points with replacement.

    Set ``i`` is generated from the seed material ``(*seed, i)``, so any
    single iteration can be regenerated without replaying the others.
    """
    pool = record.pool
    if len(pool) == 0:
        raise UnusableRecordError(
            f"record {record.record_id} has an empty foreground pool"
        )
    if m < 1:
        raise ValueError(f"prompt count must be >= 1, got {m}")
    if B < 1:
        raise ValueError(f"bootstrap iteration count must be >= 1, got {B}")
    seed_t = _seed_tuple(seed)
    out = []
    for i in range(B):
        rng = np.random.default_rng(seed_t + (i,))
        idx = rng.integers(0, len(pool), size=m)
        out.append(
            PromptSet(
                points=pool[idx],
                labels=np.ones(m, dtype=np.int64),
                source=record.record_id,
                seed=seed_t + (i,),
            )
        )
    return out
