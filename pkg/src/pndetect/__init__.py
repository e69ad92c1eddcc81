"""Unsupervised pump-and-dump outlier detection on OHLCV candle series.

Frames of consecutive candles are flattened, projected to 2-D with PCA and
scored by two detectors: distance from the centroid with a histogram-chosen
threshold, and a nearest-neighbour density vote. Their union is the hybrid
detector. A streaming predictor compares sliding windows to the first frame.
"""

from .density import DensityScores, build_neighbor_pool, density_scores, detect_density
from .distance import (
    DistanceHistogram,
    DistanceThreshold,
    auto_threshold,
    build_histogram,
    detect_distance,
    distance_profile,
    find_split,
)
from .errors import ConfigError, ConvergenceError, DataError, PndError
from .evaluation import GroundTruthEvent, PairRow, match_events, summarize
from .framing import Frame, FrameVector, extract_frames, flatten_frame, frame_vectors
from .hybrid import DetectionResult, SensitivityVerdict, classify_sensitivity, hybrid_detect
from .market_data import Candle, CandleSeries, parse_candles, read_series, validate_series
from .pipeline import DetectionParams, PairDetection, detect_series
from .predictor import PredictionAlert, PredictorConfig, StreamingPredictor, predict_stream, scan
from .projection import PcaBasis, Point2D, fit_pca, project, project_all

__version__ = "0.1.0"

__all__ = [
    "Candle", "CandleSeries", "ConfigError", "ConvergenceError", "DataError", "DensityScores",
    "DetectionParams", "DetectionResult", "DistanceHistogram", "DistanceThreshold", "Frame",
    "FrameVector", "GroundTruthEvent", "PairDetection", "PairRow", "PcaBasis", "PndError",
    "Point2D", "PredictionAlert", "PredictorConfig", "SensitivityVerdict", "StreamingPredictor",
    "auto_threshold", "build_histogram", "build_neighbor_pool", "classify_sensitivity",
    "density_scores", "detect_density", "detect_distance", "detect_series", "distance_profile",
    "extract_frames", "find_split", "fit_pca", "flatten_frame", "frame_vectors", "hybrid_detect",
    "match_events", "parse_candles", "predict_stream", "project", "project_all", "read_series",
    "scan", "summarize", "validate_series",
]
