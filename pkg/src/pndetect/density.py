"""Density score: how often a point appears in the others' n-nearest-neighbor lists.

Each point nominates its ``n`` nearest other points (Euclidean, ties to the
lower frame index). A point's density score is the number of nominations it
received; scores below 2 mark it as anomalous.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .projection import Point2D, points_array

DEFAULT_NEIGHBORS = 5
ANOMALY_BELOW = 2
_ROW_CHUNK = 256


@dataclass(frozen=True)
class NeighborPool:
    n: int
    frame_indices: tuple[int, ...]
    neighbors: np.ndarray  # (N, n) positions into frame_indices

    @property
    def occurrences(self) -> np.ndarray:
        """The pooled neighbor list, as frame indices."""
        return np.asarray(self.frame_indices, dtype=np.int64)[self.neighbors.reshape(-1)]


@dataclass(frozen=True)
class DensityScores:
    frame_indices: tuple[int, ...]
    scores: np.ndarray

    def __getitem__(self, position: int) -> int:
        return int(self.scores[position])

    def by_frame(self) -> dict[int, int]:
        return {f: int(s) for f, s in zip(self.frame_indices, self.scores)}


def build_neighbor_pool(points: Sequence[Point2D], n: int = DEFAULT_NEIGHBORS) -> NeighborPool:
    if n < 1:
        raise ConfigError(f"neighbors must be >= 1, got {n}")
    count = len(points)
    if count < n + 1:
        raise DataError(f"need at least {n + 1} points for {n} neighbors, got {count}")
    xy = points_array(points)
    frames = np.array([p.frame_index for p in points], dtype=np.int64)
    x, y = xy[:, 0], xy[:, 1]

    neighbors = np.empty((count, n), dtype=np.intp)
    for lo in range(0, count, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, count)
        dx = x[lo:hi, None] - x[None, :]
        dy = y[lo:hi, None] - y[None, :]
        d2 = dx * dx + dy * dy
        rows = np.arange(hi - lo)
        d2[rows, rows + lo] = np.inf  # never your own neighbor
        tie = np.broadcast_to(frames, d2.shape)
        order = np.lexsort((tie, d2), axis=-1)
        neighbors[lo:hi] = order[:, :n]
    return NeighborPool(n, tuple(int(f) for f in frames), neighbors)


def density_scores(pool: NeighborPool, point_count: int | None = None) -> DensityScores:
    if point_count is None:
        point_count = len(pool.frame_indices)
    if point_count <= 0:
        raise DataError("density scores need at least one point")
    if point_count != len(pool.frame_indices):
        raise DataError(f"pool covers {len(pool.frame_indices)} points, not {point_count}")
    scores = np.bincount(pool.neighbors.reshape(-1), minlength=point_count).astype(np.int64)
    return DensityScores(pool.frame_indices, scores)


def detect_density(scores: DensityScores, below: int = ANOMALY_BELOW) -> set[int]:
    return {f for f, s in zip(scores.frame_indices, scores.scores) if s < below}
