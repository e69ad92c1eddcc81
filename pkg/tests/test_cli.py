import io
import json
import sys

import pytest

from conftest import REFERENCE_COUNTS

from pndetect import cli
from pndetect.market_data import format_timestamp, serialize_candles
from pndetect.synthetic import flat_series, inject_spike, pump_series


def run(argv, monkeypatch, capsys, stdin=None, env=None):
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    for k, v in (env or {}).items():
        monkeypatch.setenv(k, v)
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def data_dir(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    pump, starts = pump_series(n=2400, n_events=4, seed=3, exchange="binance", symbol_pair="PUMP/BTC")
    (d / "binance_PUMP-BTC.csv").write_text(serialize_candles(pump))
    spike = inject_spike(flat_series(500, noise=0.002, seed=1, exchange="yobit", symbol_pair="FLAT/BTC"), 300)
    (d / "yobit_FLAT-BTC.csv").write_text(serialize_candles(spike))
    flat = flat_series(240, exchange="kucoin", symbol_pair="CONST/ETH")
    (d / "kucoin_CONST-ETH.csv").write_text(serialize_candles(flat))
    gt = tmp_path / "gt.csv"
    lines = ["exchange,symbol_pair,timestamp"]
    lines += [f"binance,PUMP/BTC,{format_timestamp(pump.candles[s].timestamp)}" for s in starts]
    lines += [f"yobit,FLAT/BTC,{format_timestamp(spike.candles[301].timestamp)}"]
    lines += ["kraken,GHOST/BTC,2018-05-01T00:00"]
    gt.write_text("\n".join(lines) + "\n")
    return d, gt


def tree(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_detect_writes_outputs(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    code, out, _ = run(["detect", "--input", str(data), "--out", str(tmp_path / "o")], monkeypatch, capsys)
    assert code == 0
    files = tree(tmp_path / "o")
    assert "kucoin_CONST-ETH.detections.csv" in files and "detect_summary.json" in files
    summary = {s["pair"]: s for s in json.loads(files["detect_summary.json"])}
    assert summary["kucoin_CONST-ETH"]["frames"] == 10
    assert summary["kucoin_CONST-ETH"]["hybrid_flags"] == []
    assert 300 // 24 in summary["yobit_FLAT-BTC"]["distance_flags"]
    assert out.splitlines()[0].startswith("binance_PUMP-BTC:")


def test_detect_is_byte_deterministic_across_jobs(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    run(["detect", "--input", str(data), "--out", str(tmp_path / "a")], monkeypatch, capsys)
    run(["detect", "--input", str(data), "--out", str(tmp_path / "b"), "--jobs", "3"], monkeypatch, capsys)
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_missing_input(tmp_path, monkeypatch, capsys):
    code, _, err = run(["detect", "--input", str(tmp_path / "nope.csv")], monkeypatch, capsys)
    assert code == 2
    assert "nope.csv" in err


def test_bad_file_reports_context_and_continues(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    (data / "bad_X-Y.csv").write_text("Timestamp,Open,Low,High,Close,Trading Volume\n2018-01-01T00:00,1,2,0,1,1\n")
    code, out, err = run(["detect", "--input", str(data), "--out", str(tmp_path / "o")], monkeypatch, capsys)
    assert code == 2
    assert "bad_X-Y.csv" in err and "low above high" in err
    assert "yobit_FLAT-BTC" in out


def test_usage_errors(monkeypatch, capsys):
    assert run(["detect", "--bogus"], monkeypatch, capsys)[0] == 1
    assert run([], monkeypatch, capsys)[0] == 1
    assert run(["detect"], monkeypatch, capsys)[0] == 1
    code, _, err = run(["detect", "--input", "x.csv", "--features", "price"], monkeypatch, capsys)
    assert code == 1 and "unknown feature" in err


def test_predict_shift_over_window_fails_first(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    code, out, err = run(["predict", "--input", str(data / "yobit_FLAT-BTC.csv"), "--threshold", "1",
                          "--shift", "30", "--out", str(tmp_path / "o")], monkeypatch, capsys)
    assert code == 1 and "shift" in err
    assert not (tmp_path / "o").exists()


def test_predict_file_and_stdin_agree(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    src = data / "yobit_FLAT-BTC.csv"
    args = ["--threshold", "100000", "--out", str(tmp_path / "o")]
    code, file_out, _ = run(["predict", "--input", str(src), *args], monkeypatch, capsys)
    assert code == 0
    code, stdin_out, _ = run(["predict", "--input", "-", *args], monkeypatch, capsys, stdin=src.read_text())
    assert code == 0
    records = [json.loads(line) for line in file_out.splitlines()]
    assert records and records[0]["frame_start_index"] <= 300 < records[0]["frame_start_index"] + 24
    strip = lambda text: [{k: v for k, v in json.loads(l).items() if k != "pair"} for l in text.splitlines()]
    assert strip(file_out) == strip(stdin_out)
    assert (tmp_path / "o" / "yobit_FLAT-BTC.diagram.csv").read_bytes() == (tmp_path / "o" / "stdin.diagram.csv").read_bytes()


def test_predict_constant_stream_no_alerts(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    code, out, _ = run(["predict", "--input", str(data / "kucoin_CONST-ETH.csv"), "--threshold", "1e-9",
                        "--out", str(tmp_path / "o")], monkeypatch, capsys)
    assert code == 0 and out == ""


def test_predict_needs_threshold(data_dir, monkeypatch, capsys):
    data, _ = data_dir
    assert run(["predict", "--input", str(data)], monkeypatch, capsys)[0] == 1


def test_evaluate_lists_mismatches(data_dir, tmp_path, monkeypatch, capsys):
    data, gt = data_dir
    out_dir = tmp_path / "o"
    run(["detect", "--input", str(data), "--out", str(out_dir)], monkeypatch, capsys)
    code, out, err = run(["evaluate", "--input", str(out_dir), "--ground-truth", str(gt), "--out", str(out_dir)],
                         monkeypatch, capsys)
    assert code == 0
    assert "kucoin_CONST-ETH (no ground truth)" in err
    assert "kraken_GHOST-BTC (no detections)" in err
    report = json.loads((out_dir / "report.json").read_text())
    assert [r["symbol_pair"] for r in report["rows"]] == ["PUMP/BTC", "FLAT/BTC"]
    assert report["totals"]["alleged"] == 5
    for name in ("success_by_method", "success_by_exchange", "impact_split", "common_outliers", "false_positives"):
        assert (out_dir / f"fig_{name}.csv").exists()
    assert out == (out_dir / "report.txt").read_text()


def test_evaluate_empty_ground_truth(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    empty = tmp_path / "empty.csv"
    empty.write_text("exchange,symbol_pair,timestamp\n")
    code, _, err = run(["evaluate", "--input", str(data), "--ground-truth", str(empty)], monkeypatch, capsys)
    assert code == 2 and "zero alleged events" in err


def test_evaluate_count_replay(tmp_path, monkeypatch, capsys):
    counts = tmp_path / "counts.csv"
    counts.write_text("exchange,symbol_pair,alleged,distance,density,hybrid\n"
                      + "".join(",".join(map(str, r)) + "\n" for r in REFERENCE_COUNTS))
    code, out, _ = run(["evaluate", "--counts", str(counts), "--out", str(tmp_path / "o")], monkeypatch, capsys)
    assert code == 0
    total = next(l for l in out.splitlines() if l.startswith("Total")).split()
    assert total[1:5] == ["84", "51", "41", "69"]


def test_config_precedence(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nwindow = 12\nbins=16\nout = %s\n" % (tmp_path / "from_cfg"))
    code, _, _ = run(["detect", "--config", str(cfg), "--input", str(data), "--bins", "40"], monkeypatch, capsys)
    assert code == 0
    summary = json.loads((tmp_path / "from_cfg" / "detect_summary.json").read_text())
    assert {s["frames"] for s in summary} == {200, 41, 20}  # window 12 from the file
    hist = (tmp_path / "from_cfg" / "yobit_FLAT-BTC.histogram.csv").read_text().splitlines()
    assert len(hist) == 41  # bins 40 from the flag


def test_env_output_dir(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    target = tmp_path / "env_out"
    code, _, _ = run(["detect", "--input", str(data / "yobit_FLAT-BTC.csv")], monkeypatch, capsys,
                     env={cli.OUT_ENV: str(target)})
    assert code == 0 and (target / "yobit_FLAT-BTC.detections.csv").exists()


def test_config_errors(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(["detect", "--config", str(cfg), "--input", "x"], monkeypatch, capsys)
    assert code == 1 and "unknown setting" in err
    cfg.write_text("window = many\n")
    assert run(["detect", "--config", str(cfg), "--input", "x"], monkeypatch, capsys)[0] == 1


def test_export_writes_every_table(data_dir, tmp_path, monkeypatch, capsys):
    data, _ = data_dir
    code, out, _ = run(["export", "--input", str(data / "binance_PUMP-BTC.csv"), "--out", str(tmp_path / "o")],
                       monkeypatch, capsys)
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "o").iterdir())
    assert names == sorted(f"binance_PUMP-BTC.{t}.csv" for t in
                           ("projection", "distance", "histogram", "density", "density_distance"))
