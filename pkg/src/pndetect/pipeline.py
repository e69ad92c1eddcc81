"""End-to-end detection for one candle series."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence


from . import density as dens
from . import distance as dist
from .errors import DataError
from .framing import DEFAULT_WINDOW, FeatureScaler, Frame, FrameVector, extract_frames, frame_vectors, normalize_features
from .hybrid import DetectionResult, SensitivityVerdict, classify_sensitivity, hybrid_detect
from .market_data import FEATURES, CandleSeries
from .projection import PcaBasis, Point2D, fit_pca, project_all


@dataclass(frozen=True)
class DetectionParams:
    window: int = DEFAULT_WINDOW
    features: tuple[str, ...] = FEATURES
    normalize: bool = False
    bins: int = dist.DEFAULT_BINS
    neighbors: int = dens.DEFAULT_NEIGHBORS
    threshold: float | None = None  # manual distance threshold overrides the histogram


@dataclass
class PairDetection:
    series: CandleSeries
    params: DetectionParams
    frames: list[Frame]
    vectors: list[FrameVector]
    basis: PcaBasis
    points: list[Point2D]
    profile: dist.DistanceProfile
    histogram: dist.DistanceHistogram
    threshold: dist.DistanceThreshold
    scores: dens.DensityScores
    distance_flags: set[int]
    density_flags: set[int]
    results: list[DetectionResult] = field(default_factory=list)
    verdict: SensitivityVerdict | None = None

    @property
    def hybrid_flags(self) -> set[int]:
        return self.distance_flags | self.density_flags

    @property
    def common_flags(self) -> set[int]:
        return self.distance_flags & self.density_flags

    def frame_bounds(self) -> list[tuple[int, int]]:
        """``(first, last)`` candle timestamps of every frame, epoch minutes."""
        return [(f.first_timestamp, f.last_timestamp) for f in self.frames]


def detect_series(series: CandleSeries, params: DetectionParams | None = None, **overrides) -> PairDetection:
    params = params or DetectionParams()
    if overrides:
        params = DetectionParams(**{**params.__dict__, **overrides})
    features = normalize_features(params.features)

    frames = extract_frames(series, params.window)
    if len(frames) < 3:
        raise DataError(f"{len(frames)} frame(s) of {params.window} candles; detection needs at least 3")
    scaler = FeatureScaler.fit(series.candles, features) if params.normalize else None
    vectors = frame_vectors(frames, features, scaler)
    basis = fit_pca(vectors)
    points = project_all(basis, vectors)

    profile = dist.distance_profile(points)
    histogram = dist.build_histogram(profile, params.bins)
    if params.threshold is not None:
        threshold = dist.DistanceThreshold(float(params.threshold), "manual")
    else:
        threshold = dist.auto_threshold(histogram)
    distance_flags = dist.detect_distance(profile, threshold)

    pool = dens.build_neighbor_pool(points, params.neighbors)
    scores = dens.density_scores(pool, len(points))
    if profile.distances.max() > 0:
        density_flags = dens.detect_density(scores)
    else:
        # every frame projects to the same point; neighbour votes then only
        # reflect the tie rule, so nobody is isolated
        density_flags = set()

    by_frame = scores.by_frame()
    distances = dict(zip(profile.frame_indices, profile.distances.tolist()))
    results = hybrid_detect(
        distance_flags,
        density_flags,
        frame_indices=profile.frame_indices,
        distances=distances,
        density_scores=by_frame,
    )
    verdict = None
    if distance_flags or density_flags:
        verdict = classify_sensitivity(
            len(distance_flags),
            len(density_flags),
            len(distance_flags & density_flags),
            [(distances[f], by_frame[f]) for f in profile.frame_indices],
        )
    return PairDetection(
        series=series,
        params=DetectionParams(**{**params.__dict__, "features": features}),
        frames=frames,
        vectors=vectors,
        basis=basis,
        points=points,
        profile=profile,
        histogram=histogram,
        threshold=threshold,
        scores=scores,
        distance_flags=distance_flags,
        density_flags=density_flags,
        results=results,
        verdict=verdict,
    )


def frames_containing(frames: Sequence[Frame], candle_positions: Sequence[int]) -> set[int]:
    """Indices of the frames that hold any of the given candle ordinals."""
    hits = set()
    for pos in candle_positions:
        for f in frames:
            if f.start <= pos < f.stop:
                hits.add(f.index)
                break
    return hits
