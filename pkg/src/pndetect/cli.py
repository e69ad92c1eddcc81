"""Command-line front end: ``pndetect detect|predict|evaluate|export``.

Settings resolve as command-line flag, then ``--config`` file, then built-in
default. The config file is flat ``key = value`` text; keys are flag names
with ``_`` or ``-``. Exit codes: 0 ok, 1 usage, 2 data error, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

from . import evaluation as ev
from . import exports
from .errors import ConfigError, DataError, PndError
from .framing import DEFAULT_WINDOW, normalize_features
from .market_data import FEATURES, CandleSeries, iter_candles, read_series, validate_series
from .pipeline import DetectionParams, PairDetection, detect_series
from .predictor import DEFAULT_WARMUP, PredictorConfig, StreamingPredictor, scan

OUT_ENV = "PNDETECT_OUT"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    window: int = DEFAULT_WINDOW
    bins: int = 32
    neighbors: int = 5
    features: tuple[str, ...] = FEATURES
    normalize: bool = False
    shift: int = 1
    threshold: float | None = None
    warmup: int = DEFAULT_WARMUP
    input: tuple[str, ...] = ()
    out: str = "pndetect-out"
    ground_truth: str | None = None
    counts: str | None = None
    first_only: bool = False
    jobs: int = 1

    def validate(self) -> "RunConfig":
        checks = [
            (self.window >= 1, f"window must be >= 1, got {self.window}"),
            (self.bins >= 2, f"bins must be >= 2, got {self.bins}"),
            (self.neighbors >= 1, f"neighbors must be >= 1, got {self.neighbors}"),
            (1 <= self.shift <= self.window, f"shift must be between 1 and window ({self.window}), got {self.shift}"),
            (self.warmup >= 3, f"warmup must be >= 3 frames, got {self.warmup}"),
            (self.jobs >= 1, f"jobs must be >= 1, got {self.jobs}"),
            (self.threshold is None or (math.isfinite(self.threshold) and self.threshold >= 0),
             f"threshold must be a finite number >= 0, got {self.threshold}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        self.features = normalize_features(self.features)
        return self

    def detection_params(self) -> DetectionParams:
        return DetectionParams(
            window=self.window, features=self.features, normalize=self.normalize,
            bins=self.bins, neighbors=self.neighbors, threshold=self.threshold,
        )

    def predictor_config(self) -> PredictorConfig:
        if self.threshold is None:
            raise ConfigError("predict needs --threshold (inspect the distance diagram to choose one)")
        return PredictorConfig(
            threshold=self.threshold, window=self.window, shift=self.shift,
            warmup_frames=self.warmup, features=self.features,
            normalize=self.normalize, first_only=self.first_only,
        )


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _split_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


_CONVERTERS: dict[str, Callable[[str], object]] = {
    "window": int, "bins": int, "neighbors": int, "shift": int, "warmup": int, "jobs": int,
    "threshold": float, "normalize": _parse_bool, "first_only": _parse_bool,
    "features": _split_list, "input": _split_list,
    "out": str, "ground_truth": str, "counts": str,
}


def read_config_file(path: str | Path) -> dict[str, object]:
    values: dict[str, object] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_").lower()
            if key not in _CONVERTERS:
                raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
            try:
                values[key] = _CONVERTERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {key}: {exc}") from None
    return values


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    merged: dict[str, object] = {}
    if environ.get(OUT_ENV):
        merged["out"] = environ[OUT_ENV]
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    if isinstance(merged.get("features"), str):
        merged["features"] = _split_list(merged["features"])
    if "input" in merged:
        merged["input"] = tuple(merged["input"])
    return RunConfig(**merged).validate()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pndetect", description="Pump-and-dump outlier detection on OHLCV candles.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, detection=True):
        p.add_argument("--input", nargs="+", metavar="PATH", help="CSV file(s) or directories")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./pndetect-out)")
        p.add_argument("--config", help="flat key = value settings file")
        p.add_argument("--jobs", type=int, help="parallel workers for multi-file runs")
        if detection:
            p.add_argument("--window", type=int, help="candles per frame")
            p.add_argument("--features", type=_split_list, help="comma list of open,low,high,close,volume")
            p.add_argument("--normalize", action="store_const", const=True, help="z-score each feature first")

    p = sub.add_parser("detect", help="flag outlier frames per pair")
    common(p)
    p.add_argument("--bins", type=int, help="distance histogram bins")
    p.add_argument("--neighbors", type=int, help="nearest neighbours per point for density scores")
    p.add_argument("--threshold", type=float, help="manual distance threshold (default: histogram split)")

    p = sub.add_parser("export", help="write plot-data CSVs for each pair")
    common(p)
    p.add_argument("--bins", type=int)
    p.add_argument("--neighbors", type=int)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("predict", help="sliding-window alerts against the first frame")
    common(p)
    p.add_argument("--threshold", type=float, help="distance that raises an alert")
    p.add_argument("--shift", type=int, help="candles between consecutive windows")
    p.add_argument("--warmup", type=int, help="disjoint frames used to fit the projection")
    p.add_argument("--first-only", dest="first_only", action="store_const", const=True,
                   help="stop at the first alert")

    p = sub.add_parser("evaluate", help="score detections against alleged events")
    common(p, detection=False)
    p.add_argument("--ground-truth", dest="ground_truth", help="CSV of exchange,symbol_pair,timestamp")
    p.add_argument("--counts", help="replay per-pair counts instead of detection files")
    return parser


def discover(paths: Sequence[str], suffix: str = ".csv", exclude: str | None = None) -> list[Path]:
    """Expand directories to their sorted CSV files; missing paths are data errors."""
    found: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            found.extend(
                p for p in sorted(path.iterdir())
                if p.name.endswith(suffix) and not (exclude and p.name.endswith(exclude))
            )
        elif path.exists():
            found.append(path)
        else:
            raise DataError(f"no such file or directory: {raw}")
    if not found:
        raise DataError(f"no input files found in {', '.join(paths)}")
    return found


def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _dump_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _run_files(paths: Sequence[Path], jobs: int, work: Callable[[Path], object]) -> tuple[list, list]:
    """Apply ``work`` to each file; results and failures come back in input order."""

    def guarded(path):
        try:
            return path, work(path), None
        except (PndError, OSError) as exc:
            return path, None, exc

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = list(pool.map(guarded, paths))
    done = [(p, r) for p, r, e in outcomes if e is None]
    failed = [(p, e) for p, _, e in outcomes if e is not None]
    for path, exc in failed:
        print(f"error: {path}: {exc}", file=sys.stderr)
    return done, failed


def _load(path: Path) -> CandleSeries:
    return validate_series(read_series(path))


def _detect_file(path: Path, cfg: RunConfig) -> PairDetection:
    return detect_series(_load(path), cfg.detection_params())


def _summary(det: PairDetection) -> dict:
    v = det.verdict
    return {
        "pair": det.series.pair_id,
        "exchange": det.series.exchange,
        "symbol_pair": det.series.symbol_pair,
        "candles": len(det.series),
        "frames": len(det.frames),
        "threshold": det.threshold.value,
        "threshold_source": det.threshold.provenance,
        "distance_flags": sorted(det.distance_flags),
        "density_flags": sorted(det.density_flags),
        "hybrid_flags": sorted(det.hybrid_flags),
        "common": len(det.common_flags),
        "impact": v.impact if v else None,
        "stretch_ratio": _json_value(v.stretch_ratio) if v else None,
        "eigenvalues": [float(x) for x in det.basis.eigenvalues],
    }


def cmd_detect(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    files = discover(cfg.input)

    def work(path):
        det = _detect_file(path, cfg)
        pid = det.series.pair_id
        exports.write_csv(out / f"{pid}.detections.csv", exports.DETECTION_HEADER, exports.detection_rows(det))
        exports.write_csv(out / f"{pid}.histogram.csv", exports.HISTOGRAM_HEADER, exports.histogram_rows(det))
        exports.write_csv(out / f"{pid}.projection.csv", exports.PROJECTION_HEADER, exports.projection_rows(det))
        return _summary(det)

    done, failed = _run_files(files, cfg.jobs, work)
    for _, s in done:
        print(
            f"{s['pair']}: {s['frames']} frames, threshold {s['threshold']:.6g} ({s['threshold_source']}), "
            f"distance {len(s['distance_flags'])}, density {len(s['density_flags'])}, "
            f"hybrid {len(s['hybrid_flags'])}, impact {s['impact'] or '-'}"
        )
    if done:
        _dump_json(out / "detect_summary.json", [s for _, s in done])
    return EXIT_DATA if failed else EXIT_OK


def cmd_export(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    files = discover(cfg.input)

    def work(path):
        det = _detect_file(path, cfg)
        written = []
        for name, (header, rows) in exports.PAIR_TABLES.items():
            written.append(exports.write_csv(out / f"{det.series.pair_id}.{name}.csv", header, rows(det)))
        return written

    done, failed = _run_files(files, cfg.jobs, work)
    for _, written in done:
        for path in written:
            print(path)
    return EXIT_DATA if failed else EXIT_OK


def _alert_line(pair: str, alert) -> str:
    return json.dumps({"pair": pair, **alert.to_record()})


def _predict_stdin(config: PredictorConfig, out: Path) -> int:
    predictor = StreamingPredictor(config)
    for candle in iter_candles(sys.stdin):
        for alert in predictor.feed(candle):
            print(_alert_line("stdin", alert), flush=True)
    predictor.finish()
    exports.write_csv(out / "stdin.diagram.csv", exports.DIAGRAM_HEADER, exports.diagram_rows(predictor.diagram))
    return EXIT_OK


def cmd_predict(cfg: RunConfig) -> int:
    config = cfg.predictor_config()
    out = Path(cfg.out)
    if list(cfg.input) == ["-"]:
        return _predict_stdin(config, out)
    files = discover(cfg.input)

    def work(path):
        series = _load(path)
        run = scan(series, config)
        pid = series.pair_id
        exports.write_csv(out / f"{pid}.diagram.csv", exports.DIAGRAM_HEADER, exports.diagram_rows(run.diagram))
        return pid, run.alerts

    done, failed = _run_files(files, cfg.jobs, work)
    for _, (pid, alerts) in done:
        for alert in alerts:
            print(_alert_line(pid, alert))
    return EXIT_DATA if failed else EXIT_OK


def _pair_key(exchange: str, symbol_pair: str) -> tuple[str, str]:
    return exchange.strip().lower(), symbol_pair.strip().upper().replace("-", "/")


def cmd_evaluate(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    unmatched: list[str] = []
    if cfg.counts:
        rows = ev.read_count_rows(cfg.counts)
    else:
        if not cfg.ground_truth or not cfg.input:
            raise ConfigError("evaluate needs --ground-truth and --input detection files, or --counts")
        events = ev.read_ground_truth(cfg.ground_truth)
        if not events:
            raise DataError("zero alleged events")
        by_pair: dict[tuple[str, str], list[ev.GroundTruthEvent]] = {}
        for e in events:
            by_pair.setdefault(_pair_key(e.exchange, e.symbol_pair), []).append(e)
        detections = [exports.read_detections(p) for p in discover(cfg.input, suffix=".detections.csv")]
        seen = set()
        rows = []
        for det in detections:
            key = _pair_key(det.exchange, det.symbol_pair)
            if key not in by_pair:
                unmatched.append(f"{det.pair_id} (no ground truth)")
                continue
            seen.add(key)
            rows.append(ev.evaluate_pair(
                det.exchange, det.symbol_pair, det.frame_bounds,
                det.distance_flags, det.density_flags, by_pair[key],
            ))
        for key in sorted(set(by_pair) - seen):
            unmatched.append(f"{key[0]}_{key[1].replace('/', '-')} (no detections)")
        for item in unmatched:
            print(f"warning: unmatched pair {item}", file=sys.stderr)
        if not rows:
            raise DataError("no pair has both detections and ground truth")

    report = ev.summarize(rows, unmatched)
    text = ev.format_report(report)
    _dump_json(out / "report.json", report.to_dict())
    (out / "report.txt").write_text(text, encoding="utf-8")
    for name, table in ev.plot_tables(report).items():
        exports.write_csv(out / f"fig_{name}.csv", table[0], table[1:])
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "export": cmd_export, "predict": cmd_predict, "evaluate": cmd_evaluate}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(format="warning: %(message)s", level=logging.WARNING)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    try:
        cfg = resolve_config(args)
        if not cfg.input and not (args.command == "evaluate" and cfg.counts):
            raise ConfigError("no --input given")
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"pndetect: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"pndetect: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort report with exit code 3
        print(f"pndetect: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
