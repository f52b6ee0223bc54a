"""Binary/CSV file formats, run configuration, and the command-line interface."""

import numpy as np
import pytest

from specshrink import (
    DataFormatError,
    DomainError,
    MultiTrialSeries,
    read_config,
    read_trials,
    read_trials_csv,
    write_trials,
)
from specshrink.cli import main
from specshrink.io import RunConfig, format_value, parse_bands, write_csv

rng = np.random.default_rng(42)


def make_series(n_trials=4, n_channels=2, n_samples=64, sampling_rate=64.0):
    values = rng.standard_normal((n_trials, n_channels, n_samples))
    return MultiTrialSeries(values=values, sampling_rate=sampling_rate)


def test_binary_round_trip_is_bit_exact(tmp_path):
    series = MultiTrialSeries(values=rng.standard_normal((3, 2, 16)),
                              sampling_rate=250.0, channel_labels=("Fz", "Oz"))
    path = tmp_path / "trials.mts"
    write_trials(path, series)
    loaded = read_trials(path)
    np.testing.assert_array_equal(loaded.values, series.values)
    assert loaded.sampling_rate == 250.0
    assert loaded.channel_labels == ("Fz", "Oz")
    # no leftover temp files from the atomic write
    assert [p.name for p in tmp_path.iterdir()] == ["trials.mts"]


def test_binary_reader_reports_byte_offsets(tmp_path):
    series = make_series(2, 2, 8)
    path = tmp_path / "t.mts"
    write_trials(path, series)
    blob = path.read_bytes()

    def expect(data, fragment):
        bad = tmp_path / "bad.mts"
        bad.write_bytes(data)
        with pytest.raises(DataFormatError, match=fragment):
            read_trials(bad)

    expect(blob[:10], "truncated inside the 26-byte header")
    expect(b"XXXX" + blob[4:], r"bad magic.*offset 0\)")
    expect(blob[:4] + b"\x02\x00" + blob[6:], r"version 2.*offset 4\)")
    expect(blob[:-8], r"payload is \d+ bytes, expected 256")
    expect(blob + b"\x00", "payload is 257 bytes, expected 256")
    expect(blob[:27], "truncated in the length prefix of label 0")
    expect(blob[:30], "truncated inside label 0")

    nan = blob[:-128] + np.array([np.nan]).tobytes() + blob[-120:]
    expect(nan, rf"non-finite value \(at byte offset {len(blob) - 128}\)")


def test_csv_import(tmp_path):
    path = tmp_path / "tidy.csv"
    lines = ["trial,channel,time,value"]
    values = rng.standard_normal((2, 2, 4))
    for n in range(2):
        for p in range(2):
            for t in range(4):
                lines.append(f"{n},{p},{t},{float(values[n, p, t])!r}")
    # row order must not matter
    lines[1], lines[-1] = lines[-1], lines[1]
    path.write_text("\n".join(lines) + "\n")
    series = read_trials_csv(path, sampling_rate=100.0)
    np.testing.assert_array_equal(series.values, values)
    assert series.sampling_rate == 100.0


def test_csv_import_rejects_malformed_files(tmp_path):
    def expect(text, fragment):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(DataFormatError, match=fragment):
            read_trials_csv(path)

    header = "trial,channel,time,value\n"
    expect("time,value\n0,1\n", "expected header")
    expect(header, "no data rows")
    expect(header + "0,0,0\n", r"expected 4 columns \(line 2\)")
    expect(header + "0,0,zero,1.0\n", r"\(line 2\)")
    expect(header + "0,0,0,1.0\n0,0,0,2.0\n", "duplicate cell trial=0 channel=0 time=0")
    expect(header + "0,0,0,1.0\n0,0,2,2.0\n", "missing cell trial=0 channel=0 time=1")
    expect(header + "-1,0,0,1.0\n", "negative")


def test_csv_formatting(tmp_path):
    assert format_value(True) == "1"
    assert format_value(False) == "0"
    assert format_value(np.float64(1) / 3) == "0.333333333333"
    assert format_value(0.5) == "0.5"
    assert format_value(7) == "7"
    path = tmp_path / "out.csv"
    write_csv(path, ("a", "b"), [(1.0, "x"), (2.5, "y")])
    assert path.read_text() == "a,b\n1,x\n2.5,y\n"


def test_span_grid_from_config_bounds():
    assert RunConfig().span_grid() is None
    assert RunConfig(span_min=3, span_max=9).span_grid() == (3, 5, 7, 9)
    assert RunConfig(span_min=4, span_max=9).span_grid() == (5, 7, 9)
    with pytest.raises(DomainError):
        RunConfig(span_min=10, span_max=9).span_grid()


def test_parse_bands():
    assert parse_bands("alpha:8:12") == (("alpha", 8.0, 12.0),)
    assert parse_bands("a:1:2, b:3:4.5") == (("a", 1.0, 2.0), ("b", 3.0, 4.5))
    with pytest.raises(DataFormatError):
        parse_bands("alpha:8")
    with pytest.raises(DataFormatError):
        parse_bands("alpha:eight:12")


def test_read_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "method = var\n"
        "window = 7   # trailing comment\n"
        "span_max=21\n"
        "bands = theta:4:8\n"
        "\n"
        "fdr_q = 0.01\n")
    config = read_config(path)
    assert config.method == "var"
    assert config.window == 7
    assert config.span_grid() == (3, 5, 7, 9, 11, 13, 15, 17, 19, 21)
    assert config.bands == (("theta", 4.0, 8.0),)
    assert config.fdr_q == 0.01
    assert config.max_order == 10  # untouched default

    bad = tmp_path / "bad.cfg"
    bad.write_text("windowsill = 3\n")
    with pytest.raises(DataFormatError, match=r"unknown key 'windowsill' \(line 1\)"):
        read_config(bad)
    bad.write_text("window\n")
    with pytest.raises(DataFormatError, match="expected key = value"):
        read_config(bad)
    bad.write_text("window = seven\n")
    with pytest.raises(DataFormatError, match=r"bad value for 'window' \(line 1\)"):
        read_config(bad)


# --- command-line interface ---------------------------------------------


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cli_simulate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.mts", tmp_path / "b.mts"
    assert run_cli("simulate", "--trials", 2, "--samples", 32, "--seed", 9,
                   "--out", a) == 0
    assert run_cli("simulate", "--trials", 2, "--samples", 32, "--seed", 9,
                   "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    series = read_trials(a)
    assert (series.n_trials, series.n_channels, series.n_samples) == (2, 12, 32)
    assert "wrote" in capsys.readouterr().out


def test_cli_estimate_shrinkage_outputs(tmp_path):
    data = tmp_path / "t.mts"
    write_trials(data, make_series())
    out = tmp_path / "run"
    assert run_cli("estimate", data, "--out-dir", out, "--order", "1",
                   "--window", "5") == 0

    spectra = (out / "spectra.csv").read_text().splitlines()
    assert spectra[0] == "frequency_hz,channel,value"
    assert len(spectra) == 1 + 33 * 2  # J = 64 // 2 + 1 frequencies, 2 channels
    assert spectra[1].startswith("0,ch00,")

    cross = (out / "cross_spectra.csv").read_text().splitlines()
    assert cross[0] == "frequency_hz,channel_a,channel_b,real,imag"
    assert len(cross) == 1 + 33

    weights = (out / "weights.csv").read_text().splitlines()
    assert weights[0] == "frequency_hz,alpha2,beta2,delta2,w_raw,w"
    assert len(weights) == 1 + 33
    w = np.array([line.split(",")[-1] for line in weights[1:]], dtype=float)
    assert np.all((w >= 0.0) & (w <= 1.0))

    report = (out / "fit_report.txt").read_text()
    assert "var_order = 1" in report
    assert "window = 5" in report
    assert "selected_spans = " in report


def test_cli_estimate_other_methods(tmp_path):
    data = tmp_path / "t.mts"
    write_trials(data, make_series())
    for method, extra in (("raw_mean", ()), ("smoothed", ("--fixed-span", "7")),
                          ("var", ("--order", "2")), ("multitaper", ("--tapers", "3"))):
        out = tmp_path / method
        assert run_cli("estimate", data, "--method", method, "--out-dir", out,
                       *extra) == 0
        assert (out / "spectra.csv").exists()
        assert (out / "cross_spectra.csv").exists()
        assert not (out / "weights.csv").exists()
    assert "tapers = 3" in (tmp_path / "multitaper" / "fit_report.txt").read_text()
    assert "selected_spans = 7" in (tmp_path / "smoothed" / "fit_report.txt").read_text()


def test_cli_fixed_weight_one_matches_var(tmp_path):
    data = tmp_path / "t.mts"
    write_trials(data, make_series())
    fixed, var = tmp_path / "fixed", tmp_path / "var"
    assert run_cli("estimate", data, "--out-dir", fixed, "--order", "1",
                   "--weight", "1.0", "--fixed") == 0
    assert run_cli("estimate", data, "--method", "var", "--out-dir", var,
                   "--order", "1") == 0
    assert (fixed / "spectra.csv").read_bytes() == (var / "spectra.csv").read_bytes()
    assert (fixed / "cross_spectra.csv").read_bytes() == \
        (var / "cross_spectra.csv").read_bytes()


def test_cli_estimate_from_csv_input(tmp_path):
    path = tmp_path / "tidy.csv"
    lines = ["trial,channel,time,value"]
    values = rng.standard_normal((2, 2, 16))
    for n in range(2):
        for p in range(2):
            for t in range(16):
                lines.append(f"{n},{p},{t},{float(values[n, p, t])!r}")
    path.write_text("\n".join(lines) + "\n")
    out = tmp_path / "out"
    assert run_cli("estimate", path, "--method", "raw_mean", "--out-dir", out,
                   "--sampling-rate", "32") == 0
    spectra = (out / "spectra.csv").read_text().splitlines()
    assert len(spectra) == 1 + 9 * 2
    # frequency column runs 0..16 Hz for a 32 Hz sampling rate
    assert spectra[-1].split(",")[0] == "16"


def test_cli_error_path_is_clean(tmp_path, capsys):
    data = tmp_path / "t.mts"
    write_trials(data, make_series())
    out = tmp_path / "out"
    # --weight without --fixed is rejected before any file is written
    assert run_cli("estimate", data, "--out-dir", out, "--weight", "0.5") == 1
    captured = capsys.readouterr()
    assert captured.err.startswith("error: ")
    assert captured.err.strip().count("\n") == 0
    assert not (out / "spectra.csv").exists()

    assert run_cli("estimate", tmp_path / "missing.mts", "--out-dir", out) == 1
    assert capsys.readouterr().err.startswith("error: ")

    with pytest.raises(SystemExit):
        run_cli("estimate", data, "--method", "banana")


def test_cli_config_file_and_flag_precedence(tmp_path):
    data = tmp_path / "t.mts"
    write_trials(data, make_series())
    cfg = tmp_path / "run.cfg"
    cfg.write_text("window = 7\nmethod = shrinkage\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("estimate", data, "--config", cfg, "--out-dir", out_a,
                   "--order", "1") == 0
    assert "window = 7" in (out_a / "fit_report.txt").read_text()
    # explicit flags override the file
    assert run_cli("estimate", data, "--config", cfg, "--out-dir", out_b,
                   "--order", "1", "--window", "5") == 0
    assert "window = 5" in (out_b / "fit_report.txt").read_text()


def test_cli_connectivity_single_condition(tmp_path):
    data = tmp_path / "t.mts"
    write_trials(data, make_series(n_trials=6))
    out = tmp_path / "out"
    assert run_cli("connectivity", data, "--out-dir", out, "--order", "1",
                   "--fixed-span", "7", "--band", "low:4:8", "--band", "high:12:20") == 0
    for name in ("pcoh_low.csv", "pcoh_high.csv"):
        lines = (out / name).read_text().splitlines()
        assert lines[0] == "channel_a,channel_b,value"
        assert len(lines) == 1 + 4  # full 2 x 2 matrix
    assert not (out / "tests.csv").exists()


def test_cli_connectivity_two_conditions(tmp_path, capsys):
    left, right = tmp_path / "l.mts", tmp_path / "r.mts"
    write_trials(left, make_series(n_trials=6))
    write_trials(right, make_series(n_trials=5))
    out = tmp_path / "out"
    assert run_cli("connectivity", left, right, "--out-dir", out, "--order", "1",
                   "--fixed-span", "7", "--q", "0.1") == 0
    for band in ("alpha", "beta"):  # default bands
        assert (out / f"pcoh_{band}_left.csv").exists()
        assert (out / f"pcoh_{band}_right.csv").exists()
    lines = (out / "tests.csv").read_text().splitlines()
    assert lines[0] == ("pair,band,z_left,z_right,se_left,se_right,t,p,rejected")
    assert len(lines) == 1 + 2  # one channel pair in each of two bands
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[0] == "ch00-ch01"
        assert cells[1] in ("alpha", "beta")
        assert 0.0 <= float(cells[7]) <= 1.0
        assert cells[8] in ("0", "1")
    assert "q=0.1" in capsys.readouterr().out

    bad = tmp_path / "bad.mts"
    write_trials(bad, make_series(n_trials=4, n_channels=3))
    assert run_cli("connectivity", left, bad, "--out-dir", out) == 1
    assert "different channel counts" in capsys.readouterr().err


def test_cli_compare_writes_mse_tables(tmp_path):
    out = tmp_path / "out"
    # 24 trials: the raw periodogram mean must outrank the 12 channels or its
    # partial coherence is undefined
    assert run_cli("compare", "--reps", "1", "--trials", "24", "--samples", "64",
                   "--estimators", "raw_mean,shrinkage", "--windows", "5,3",
                   "--max-order", "1", "--out-dir", out) == 0
    for name in ("mse_spectral.csv", "mse_pcoh.csv"):
        lines = (out / name).read_text().splitlines()
        assert lines[0] == "frequency_hz,raw_mean,shrinkage,shrinkage_w3"
        assert len(lines) == 1 + 33
        assert all(float(cell) >= 0.0 for cell in lines[1].split(",")[1:])
    weight = (out / "mean_weight.csv").read_text().splitlines()
    assert weight[0] == "frequency_hz,shrinkage,shrinkage_w3"
    assert len(weight) == 1 + 33
