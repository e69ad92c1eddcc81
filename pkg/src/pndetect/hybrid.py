"""Union vote of the distance and density detectors, plus pair sensitivity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .errors import DataError

Impact = Literal["Distance", "Density"]


@dataclass(frozen=True)
class DetectionResult:
    frame_index: int
    distance_flag: bool
    density_flag: bool
    distance: float = math.nan
    density_score: int = -1

    @property
    def hybrid_flag(self) -> bool:
        return self.distance_flag or self.density_flag


@dataclass(frozen=True)
class SensitivityVerdict:
    impact: Impact
    distance_count: int
    density_count: int
    common_count: int
    stretch_ratio: float


def hybrid_detect(
    distance_flags: Iterable[int],
    density_flags: Iterable[int],
    frame_indices: Iterable[int] | None = None,
    distances: Mapping[int, float] | None = None,
    density_scores: Mapping[int, int] | None = None,
) -> list[DetectionResult]:
    """One :class:`DetectionResult` per frame, ordered by frame index.

    ``frame_indices`` is the frame universe; by default only frames flagged
    by at least one detector are reported.
    """
    distance_flags = set(distance_flags)
    density_flags = set(density_flags)
    universe = set(frame_indices) if frame_indices is not None else distance_flags | density_flags
    stray = (distance_flags | density_flags) - universe
    if stray:
        raise DataError(f"flags reference frames outside the universe: {sorted(stray)[:5]}")
    distances = distances or {}
    density_scores = density_scores or {}
    return [
        DetectionResult(
            frame_index=f,
            distance_flag=f in distance_flags,
            density_flag=f in density_flags,
            distance=float(distances.get(f, math.nan)),
            density_score=int(density_scores.get(f, -1)),
        )
        for f in sorted(universe)
    ]


def hybrid_flags(results: Iterable[DetectionResult]) -> set[int]:
    return {r.frame_index for r in results if r.hybrid_flag}


def _cv(values: np.ndarray) -> float:
    mean = values.mean()
    if mean == 0:
        return math.inf if values.std() > 0 else 0.0
    return float(values.std() / abs(mean))


def stretch_ratio(points: Sequence[tuple[float, int]]) -> float:
    """Coefficient of variation of distances over that of density scores."""
    if len(points) == 0:
        return math.nan
    arr = np.asarray(points, dtype=float)
    dist_cv, dens_cv = _cv(arr[:, 0]), _cv(arr[:, 1])
    if dens_cv == 0:
        return math.inf if dist_cv > 0 else math.nan
    return dist_cv / dens_cv


def classify_sensitivity(
    distance_count: int,
    density_count: int,
    common_count: int,
    points: Sequence[tuple[float, int]] = (),
) -> SensitivityVerdict:
    """Distance impact iff the distance detector flagged strictly more frames.

    Equal counts resolve to Density. ``stretch_ratio`` is diagnostic only.
    """
    if min(distance_count, density_count, common_count) < 0:
        raise DataError("counts must be non-negative")
    if common_count > min(distance_count, density_count):
        raise DataError(
            f"common count {common_count} exceeds a detector count ({distance_count}, {density_count})"
        )
    if distance_count == 0 and density_count == 0:
        raise DataError("no outliers to classify")
    impact: Impact = "Distance" if distance_count > density_count else "Density"
    return SensitivityVerdict(impact, distance_count, density_count, common_count, stretch_ratio(points))
