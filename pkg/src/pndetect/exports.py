"""Plot-data and detection CSV files.

Every file starts with a fixed header. Floats are written with ``repr`` so a
file round-trips exactly and identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .market_data import format_timestamp, parse_timestamp
from .pipeline import PairDetection
from .predictor import FrameDistance

DETECTION_HEADER = (
    "exchange", "symbol_pair", "frame_index", "first_timestamp", "last_timestamp",
    "x", "y", "distance", "density_score", "distance_flag", "density_flag", "hybrid_flag",
)
PROJECTION_HEADER = ("frame_index", "x", "y")
DISTANCE_HEADER = ("frame_index", "distance", "flagged")
HISTOGRAM_HEADER = ("bin_left", "bin_right", "count", "region")
DENSITY_HEADER = ("frame_index", "density_score", "flagged")
DENSITY_DISTANCE_HEADER = ("frame_index", "distance", "density_score")
DIAGRAM_HEADER = ("frame_start_index", "timestamp", "distance")

SCHEMAS = {
    "detections": DETECTION_HEADER,
    "projection": PROJECTION_HEADER,
    "distance": DISTANCE_HEADER,
    "histogram": HISTOGRAM_HEADER,
    "density": DENSITY_HEADER,
    "density_distance": DENSITY_DISTANCE_HEADER,
    "diagram": DIAGRAM_HEADER,
}


def _cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(header, rows), encoding="utf-8")
    return path


def detection_rows(det: PairDetection) -> list[tuple]:
    s = det.series
    rows = []
    for r, p in zip(det.results, det.points):
        frame = det.frames[r.frame_index]
        rows.append((
            s.exchange, s.symbol_pair, r.frame_index,
            format_timestamp(frame.first_timestamp), format_timestamp(frame.last_timestamp),
            float(p.x), float(p.y), r.distance, r.density_score,
            r.distance_flag, r.density_flag, r.hybrid_flag,
        ))
    return rows


def projection_rows(det: PairDetection) -> list[tuple]:
    return [(p.frame_index, float(p.x), float(p.y)) for p in det.points]


def distance_rows(det: PairDetection) -> list[tuple]:
    return [(r.frame_index, r.distance, r.distance_flag) for r in det.results]


def histogram_rows(det: PairDetection) -> list[tuple]:
    h = det.histogram
    split = h.split_index if h.split_index is not None else len(h.counts)
    return [
        (float(h.bin_edges[i]), float(h.bin_edges[i + 1]), int(c), "dense" if i < split else "sparse")
        for i, c in enumerate(h.counts)
    ]


def density_rows(det: PairDetection) -> list[tuple]:
    return [(r.frame_index, r.density_score, r.density_flag) for r in det.results]


def density_distance_rows(det: PairDetection) -> list[tuple]:
    return [(r.frame_index, r.distance, r.density_score) for r in det.results]


def diagram_rows(diagram: Sequence[FrameDistance]) -> list[tuple]:
    return [(d.frame_start_index, format_timestamp(d.timestamp), d.distance) for d in diagram]


PAIR_TABLES = {
    "projection": (PROJECTION_HEADER, projection_rows),
    "distance": (DISTANCE_HEADER, distance_rows),
    "histogram": (HISTOGRAM_HEADER, histogram_rows),
    "density": (DENSITY_HEADER, density_rows),
    "density_distance": (DENSITY_DISTANCE_HEADER, density_distance_rows),
}



@dataclass
class DetectionFile:
    """A detections CSV read back for evaluation."""

    exchange: str
    symbol_pair: str
    frame_bounds: list[tuple[int, int]]
    distance_flags: set[int]
    density_flags: set[int]

    @property
    def pair_id(self) -> str:
        return f"{self.exchange}_{self.symbol_pair.replace('/', '-')}"


def read_detections(path: str | Path) -> DetectionFile:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != DETECTION_HEADER:
            raise DataError(f"{path}: not a detections file (unexpected header)")
        pair = None
        bounds: list[tuple[int, int]] = []
        dist_flags, dens_flags = set(), set()
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise DataError(f"{path}: expected {len(header)} columns, got {len(row)}", row=i)
            rec = dict(zip(header, row))
            try:
                frame = int(rec["frame_index"])
                if frame != len(bounds):
                    raise ValueError(f"frame indices out of order at {frame}")
                bounds.append((parse_timestamp(rec["first_timestamp"]), parse_timestamp(rec["last_timestamp"])))
            except ValueError as exc:
                raise DataError(f"{path}: {exc}", row=i) from None
            pair = pair or (rec["exchange"], rec["symbol_pair"])
            if rec["distance_flag"] == "1":
                dist_flags.add(frame)
            if rec["density_flag"] == "1":
                dens_flags.add(frame)
    if pair is None:
        raise DataError(f"{path}: detections file has no frames")
    return DetectionFile(pair[0], pair[1], bounds, dist_flags, dens_flags)
