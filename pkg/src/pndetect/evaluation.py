"""Scoring detections against alleged pump-and-dump events.

The unit of decision is the frame: an event counts as found when a flagged
frame's candle time range contains the event timestamp. Success rate for a
method is matched events over alleged events, summed across pairs.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .errors import DataError
from .hybrid import classify_sensitivity
from .market_data import format_timestamp, parse_timestamp

log = logging.getLogger(__name__)

METHODS = ("distance", "density", "hybrid")
GROUND_TRUTH_HEADER = ("exchange", "symbol_pair", "timestamp")


@dataclass(frozen=True, order=True)
class GroundTruthEvent:
    exchange: str
    symbol_pair: str
    timestamp: int  # epoch minutes


@dataclass(frozen=True)
class MatchResult:
    true_positives: int
    false_positives: int
    false_negatives: int
    matches: tuple[tuple[int, int], ...] = ()  # (frame_index, event timestamp)

    def counts(self) -> tuple[int, int, int]:
        return self.true_positives, self.false_positives, self.false_negatives

    # unpacks and indexes like the (TP, FP, FN) triple
    def __iter__(self):
        return iter(self.counts())

    def __getitem__(self, item):
        return self.counts()[item]


@dataclass
class PairRow:
    exchange: str
    symbol_pair: str
    alleged: int
    detected: dict[str, int]
    matched: dict[str, int]
    common: int | None = None
    impact: str | None = None

    def __post_init__(self):
        for method in METHODS:
            if self.matched[method] > min(self.alleged, self.detected[method]):
                raise DataError(
                    f"{self.exchange} {self.symbol_pair}: {method} matches exceed "
                    f"min(alleged, detected)"
                )

    @classmethod
    def from_counts(
        cls,
        exchange: str,
        symbol_pair: str,
        alleged: int,
        distance: int,
        density: int,
        hybrid: int,
        common: int | None = None,
        impact: str | None = None,
    ) -> "PairRow":
        """Row from detection counts alone.

        Without frame-level matches, every detection up to the alleged count
        is taken as a hit and the rest as false positives.
        """
        detected = {"distance": distance, "density": density, "hybrid": hybrid}
        matched = {m: min(alleged, n) for m, n in detected.items()}
        return cls(exchange, symbol_pair, alleged, detected, matched, common, impact)

    @property
    def false_positives(self) -> int:
        return self.detected["hybrid"] - self.matched["hybrid"]

    @property
    def union(self) -> int | None:
        if self.common is None:
            return None
        return self.detected["distance"] + self.detected["density"] - self.common


@dataclass
class EvaluationReport:
    rows: list[PairRow]
    totals: dict[str, int]
    success_rate: dict[str, float]
    common_outlier_rate: float
    false_positive_total: int
    unmatched_pairs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    **{k: v for k, v in asdict(r).items() if k not in ("detected", "matched")},
                    "distance_detected": r.detected["distance"],
                    "density_detected": r.detected["density"],
                    "hybrid_detected": r.detected["hybrid"],
                    "distance_matched": r.matched["distance"],
                    "density_matched": r.matched["density"],
                    "true_positives": r.matched["hybrid"],
                    "false_positives": r.false_positives,
                    "common_outliers": r.common,
                }
                for r in self.rows
            ],
            "totals": self.totals,
            "success_rate": self.success_rate,
            "common_outlier_rate": None if math.isnan(self.common_outlier_rate) else self.common_outlier_rate,
            "false_positive_total": self.false_positive_total,
            "unmatched_pairs": self.unmatched_pairs,
        }


def read_ground_truth(stream: IO[str] | str | Path) -> list[GroundTruthEvent]:
    if isinstance(stream, (str, Path)):
        with open(stream, newline="", encoding="utf-8-sig") as fh:
            return read_ground_truth(fh)
    reader = csv.reader(stream, skipinitialspace=True)
    header = next(reader, None)
    if header is None:
        return []
    names = [h.strip().lower() for h in header]
    missing = [c for c in GROUND_TRUTH_HEADER if c not in names]
    if missing:
        raise DataError(f"ground truth missing column(s) {', '.join(missing)}", row="header")
    pos = {c: names.index(c) for c in GROUND_TRUTH_HEADER}
    events = []
    for i, row in enumerate(reader):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} columns, got {len(row)}", row=i)
        try:
            ts = parse_timestamp(row[pos["timestamp"]])
        except ValueError:
            raise DataError(f"unparseable timestamp {row[pos['timestamp']]!r}", row=i) from None
        events.append(GroundTruthEvent(row[pos["exchange"]].strip(), row[pos["symbol_pair"]].strip(), ts))
    return events


def match_events(
    flagged_frames: Iterable[int],
    frame_boundaries: Mapping[int, tuple[int, int]] | Sequence[tuple[int, int]],
    events: Sequence[GroundTruthEvent | int],
) -> MatchResult:
    """Greedy one-to-one matching of events to flagged frames, in time order.

    ``frame_boundaries`` maps frame index to its ``(first, last)`` candle
    timestamps (inclusive).
    """
    if not isinstance(frame_boundaries, Mapping):
        frame_boundaries = dict(enumerate(frame_boundaries))
    flagged = sorted(set(flagged_frames), key=lambda f: frame_boundaries[f][0])
    times = sorted(e.timestamp if isinstance(e, GroundTruthEvent) else int(e) for e in events)

    if frame_boundaries:
        lo = min(b[0] for b in frame_boundaries.values())
        hi = max(b[1] for b in frame_boundaries.values())
        outside = [t for t in times if not lo <= t <= hi]
        if outside:
            log.warning(
                "%d event(s) outside the series time range, counted unmatched: %s",
                len(outside), ", ".join(format_timestamp(t) for t in outside[:5]),
            )

    used: set[int] = set()
    matches = []
    for t in times:
        for f in flagged:
            first, last = frame_boundaries[f]
            if f not in used and first <= t <= last:
                used.add(f)
                matches.append((f, t))
                break
    tp = len(matches)
    return MatchResult(tp, len(flagged) - tp, len(times) - tp, tuple(matches))


def evaluate_pair(
    exchange: str,
    symbol_pair: str,
    frame_bounds: Sequence[tuple[int, int]],
    distance_flags: Iterable[int],
    density_flags: Iterable[int],
    events: Sequence[GroundTruthEvent],
) -> PairRow:
    """Score one pair's detector flags against its alleged events."""
    distance_flags, density_flags = set(distance_flags), set(density_flags)
    bounds = dict(enumerate(frame_bounds))
    flags = {
        "distance": distance_flags,
        "density": density_flags,
        "hybrid": distance_flags | density_flags,
    }
    detected = {m: len(f) for m, f in flags.items()}
    matched = {m: match_events(f, bounds, events).true_positives for m, f in flags.items()}
    common = len(distance_flags & density_flags)
    impact = None
    if detected["distance"] or detected["density"]:
        impact = classify_sensitivity(detected["distance"], detected["density"], common).impact
    return PairRow(exchange, symbol_pair, len(events), detected, matched, common, impact)


def summarize(rows: Sequence[PairRow], unmatched_pairs: Sequence[str] = ()) -> EvaluationReport:
    if not rows:
        raise DataError("nothing to summarize: no pair rows")
    alleged = sum(r.alleged for r in rows)
    if alleged == 0:
        raise DataError("zero alleged events")
    for r in rows:
        if r.impact is None and r.common is not None and (r.detected["distance"] or r.detected["density"]):
            r.impact = classify_sensitivity(r.detected["distance"], r.detected["density"], r.common).impact

    totals = {"alleged": alleged}
    totals.update({m: sum(r.detected[m] for r in rows) for m in METHODS})
    totals.update({f"{m}_matched": sum(r.matched[m] for r in rows) for m in METHODS})
    success = {m: totals[f"{m}_matched"] / alleged for m in METHODS}

    with_common = [r for r in rows if r.common is not None]
    union = sum(r.union for r in with_common)
    common_rate = sum(r.common for r in with_common) / union if union else math.nan
    return EvaluationReport(
        rows=list(rows),
        totals=totals,
        success_rate=success,
        common_outlier_rate=common_rate,
        false_positive_total=sum(r.false_positives for r in rows),
        unmatched_pairs=list(unmatched_pairs),
    )


def read_count_rows(stream: IO[str] | str | Path) -> list[PairRow]:
    """Rows of ``exchange,symbol_pair,alleged,distance,density,hybrid[,common][,impact]``."""
    if isinstance(stream, (str, Path)):
        with open(stream, newline="", encoding="utf-8-sig") as fh:
            return read_count_rows(fh)
    reader = csv.DictReader(stream, skipinitialspace=True)
    rows = []
    for i, rec in enumerate(reader):
        rec = {k.strip().lower(): (v or "").strip() for k, v in rec.items()}
        try:
            rows.append(PairRow.from_counts(
                rec["exchange"], rec["symbol_pair"],
                int(rec["alleged"]), int(rec["distance"]), int(rec["density"]), int(rec["hybrid"]),
                int(rec["common"]) if rec.get("common") else None,
                rec.get("impact") or None,
            ))
        except KeyError as exc:
            raise DataError(f"count table missing column {exc.args[0]!r}", row="header") from None
        except ValueError as exc:
            raise DataError(str(exc), row=i) from None
    return rows


def format_report(report: EvaluationReport) -> str:
    """Aligned text table: one line per pair, then totals and rates."""
    header = ["Exchange", "Symbol pair", "Alleged", "Distance", "Density", "Hybrid", "TP", "FP", "Common", "Impact"]
    lines = [header]
    for r in report.rows:
        lines.append([
            r.exchange, r.symbol_pair, str(r.alleged),
            str(r.detected["distance"]), str(r.detected["density"]), str(r.detected["hybrid"]),
            str(r.matched["hybrid"]), str(r.false_positives),
            "-" if r.common is None else str(r.common), r.impact or "-",
        ])
    t = report.totals
    common_total = sum(r.common for r in report.rows if r.common is not None)
    lines.append([
        "Total", "", str(t["alleged"]), str(t["distance"]), str(t["density"]), str(t["hybrid"]),
        str(t["hybrid_matched"]), str(report.false_positive_total), str(common_total), "",
    ])
    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    out = io.StringIO()
    for n, row in enumerate(lines):
        cells = [c.ljust(w) if i < 2 or i == 9 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))]
        out.write("  ".join(cells).rstrip() + "\n")
        if n == 0 or n == len(lines) - 2:
            out.write("  ".join("-" * w for w in widths) + "\n")
    out.write("\n")
    for m in METHODS:
        out.write(f"{m:<8} success rate  {report.success_rate[m]:.4f}  "
                  f"({t[m + '_matched']}/{t['alleged']})\n")
    rate = report.common_outlier_rate
    out.write(f"common outlier rate    {'n/a' if math.isnan(rate) else f'{rate:.4f}'}\n")
    out.write(f"hybrid false positives {report.false_positive_total}\n")
    if report.unmatched_pairs:
        out.write(f"pairs without ground truth or detections: {', '.join(report.unmatched_pairs)}\n")
    return out.getvalue()


def plot_tables(report: EvaluationReport) -> dict[str, list[list]]:
    """Plot-data tables for the summary figure panels, keyed by file stem."""
    t = report.totals
    tables: dict[str, list[list]] = {}
    tables["success_by_method"] = [["method", "matched", "alleged", "success_rate"]] + [
        [m, t[m + "_matched"], t["alleged"], _fmt(report.success_rate[m])] for m in METHODS
    ]

    by_exchange: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for r in report.rows:
        agg = by_exchange[r.exchange]
        agg["alleged"] += r.alleged
        agg["false_positives"] += r.false_positives
        for m in METHODS:
            agg[m] += r.matched[m]
    rows = [["exchange", "method", "matched", "alleged", "success_rate"]]
    for ex in sorted(by_exchange):
        agg = by_exchange[ex]
        for m in METHODS:
            rate = agg[m] / agg["alleged"] if agg["alleged"] else math.nan
            rows.append([ex, m, agg[m], agg["alleged"], _fmt(rate)])
    tables["success_by_exchange"] = rows

    labelled = [r for r in report.rows if r.impact]
    tables["impact_split"] = [["impact", "pairs", "share"]] + [
        [imp, n, _fmt(n / len(labelled))]
        for imp in ("Distance", "Density")
        for n in [sum(1 for r in labelled if r.impact == imp)]
    ] if labelled else [["impact", "pairs", "share"]]

    rows = [["exchange", "symbol_pair", "common", "union", "rate"]]
    for r in report.rows:
        if r.common is not None:
            rows.append([r.exchange, r.symbol_pair, r.common, r.union, _fmt(r.common / r.union if r.union else math.nan)])
    rows.append(["total", "", sum(r.common for r in report.rows if r.common is not None),
                 sum(r.union for r in report.rows if r.common is not None), _fmt(report.common_outlier_rate)])
    tables["common_outliers"] = rows

    tables["false_positives"] = [["exchange", "false_positives"]] + [
        [ex, by_exchange[ex]["false_positives"]] for ex in sorted(by_exchange)
    ]
    return tables


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"
