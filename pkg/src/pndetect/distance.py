"""Distance-to-centroid outlier detection with a histogram-derived threshold.

The distance histogram splits into a dense region (small distances, every bin
populated) and a sparse region beginning at the first empty bin. The left
edge of that empty bin is the automatic threshold; points strictly beyond it
are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .projection import Point2D, points_array

DEFAULT_BINS = 32


@dataclass(frozen=True)
class DistanceProfile:
    centroid: tuple[float, float]
    frame_indices: tuple[int, ...]
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.frame_indices)


@dataclass(frozen=True)
class DistanceHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    split_index: int | None

    @classmethod
    def from_counts(cls, counts: Sequence[int], bin_edges: Sequence[float] | None = None) -> "DistanceHistogram":
        counts = np.asarray(counts, dtype=np.int64)
        if bin_edges is None:
            bin_edges = np.arange(len(counts) + 1, dtype=float)
        bin_edges = np.asarray(bin_edges, dtype=float)
        if bin_edges.shape != (len(counts) + 1,):
            raise DataError(f"need {len(counts) + 1} bin edges for {len(counts)} bins, got {bin_edges.size}")
        return cls(bin_edges, counts, find_split(counts))

    @property
    def dense_region(self) -> np.ndarray:
        return self.counts if self.split_index is None else self.counts[:self.split_index]

    @property
    def sparse_region(self) -> np.ndarray:
        return self.counts[:0] if self.split_index is None else self.counts[self.split_index:]


@dataclass(frozen=True)
class DistanceThreshold:
    value: float
    provenance: Literal["automatic", "manual"] = "manual"

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value < 0:
            raise ConfigError(f"distance threshold must be finite and >= 0, got {self.value}")


def find_split(counts: Sequence[int]) -> int | None:
    """Index of the first empty bin following the first populated one.

    Leading empty bins (no frame that close to the centroid) are not a gap
    between dense and sparse data, so they are skipped.
    """
    counts = np.asarray(counts)
    populated = np.flatnonzero(counts > 0)
    if populated.size == 0:
        return None
    empty = np.flatnonzero(counts[populated[0]:] == 0)
    if empty.size == 0:
        return None
    return int(populated[0] + empty[0])


def distance_profile(points: Sequence[Point2D]) -> DistanceProfile:
    if len(points) == 0:
        raise DataError("no projected points")
    xy = points_array(points)
    centroid = xy.mean(axis=0)
    distances = np.hypot(xy[:, 0] - centroid[0], xy[:, 1] - centroid[1])
    return DistanceProfile(
        centroid=(float(centroid[0]), float(centroid[1])),
        frame_indices=tuple(p.frame_index for p in points),
        distances=distances,
    )


def build_histogram(profile: DistanceProfile, bins: int = DEFAULT_BINS) -> DistanceHistogram:
    """Uniform bins over ``[0, max distance]``; the last bin is closed."""
    if bins < 2:
        raise ConfigError(f"bins must be >= 2, got {bins}")
    top = float(profile.distances.max()) if len(profile) else 0.0
    if top == 0.0:
        # every point sits on the centroid; any positive range puts them in bin 0
        top = 1.0
    counts, edges = np.histogram(profile.distances, bins=bins, range=(0.0, top))
    return DistanceHistogram(edges, counts.astype(np.int64), find_split(counts))


def auto_threshold(histogram: DistanceHistogram) -> DistanceThreshold:
    if histogram.split_index is None:
        raise DataError("no empty bin; increase bin count or set threshold manually")
    return DistanceThreshold(float(histogram.bin_edges[histogram.split_index]), "automatic")


def detect_distance(profile: DistanceProfile, threshold: DistanceThreshold | float) -> set[int]:
    value = threshold.value if isinstance(threshold, DistanceThreshold) else float(threshold)
    if not np.isfinite(value):
        raise ConfigError(f"distance threshold must be finite, got {value}")
    hits = np.flatnonzero(profile.distances > value)
    return {profile.frame_indices[i] for i in hits}
