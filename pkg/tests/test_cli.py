import csv
import json

import numpy as np
import pytest

from conftest import delay_record

from phaseflow.cli import main
from phaseflow.timeseries import MultichannelRecord, save_record


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture
def delay_csv(tmp_path):
    rec = delay_record(n_samples=6000, delay=5, seed=1)
    path = tmp_path / "delay.csv"
    save_record(rec, path, format="csv")
    return path


class TestAnalyze:
    def test_delay_fixture_outputs(self, tmp_path, delay_csv, capsys):
        out = tmp_path / "out"
        rc = main(
            [
                "analyze",
                "--input", str(delay_csv),
                "--rate", "100",
                "--methods", "psi,granger",
                "--dump-spectra",
                "--out", str(out),
            ]
        )
        assert rc == 0
        header, rows = read_csv(out / "psi_pairs.csv")
        assert header == ["i", "j", "f_center", "psi_norm", "significant"]
        values = {(r[0], r[1]): (float(r[3]), int(r[4])) for r in rows}
        # channel 0 leads channel 1: positive significant flow 0 -> 1
        assert values[("0", "1")][0] > 2
        assert values[("0", "1")][1] == 1
        assert values[("1", "0")][0] == -values[("0", "1")][0]

        gheader, grows = read_csv(out / "granger_pairs.csv")
        assert gheader == ["method", "i", "j", "f_center", "value_norm", "significant"]
        gvalues = {(r[0], r[1], r[2]): float(r[4]) for r in grows}
        # emitted orientation is flow i -> j for granger too
        assert gvalues[("granger_wide", "0", "1")] > 2

        nheader, nrows = read_csv(out / "net_flux.csv")
        assert nheader == ["channel", "f_center", "psi_net"]
        net = {r[0]: float(r[2]) for r in nrows}
        assert net["0"] > 0 > net["1"]

        assert (out / "run_config.json").exists()
        doc = json.loads((out / "spectra.json").read_text())
        assert "cross_spectrum" in doc and "coherency" in doc
        assert len(doc["cross_spectrum"]["frequencies"]) == 101

    def test_projections_with_layout(self, tmp_path, delay_csv):
        layout = tmp_path / "layout.csv"
        layout.write_text("label,x,y\nfront,0,1\nback,0,-1\n")
        out = tmp_path / "out"
        rc = main(
            [
                "analyze",
                "--input", str(delay_csv),
                "--rate", "100",
                "--layout", str(layout),
                "--direction", "front-back",
                "--out", str(out),
            ]
        )
        assert rc == 0
        header, rows = read_csv(out / "projections.csv")
        assert header == ["direction", "i", "j", "f_center", "contribution"]
        total = sum(float(r[4]) for r in rows if r[0] == "front-back")
        assert total > 0  # frontal channel drives: positive front-to-back flow

    def test_band_center_narrow_granger(self, tmp_path, delay_csv):
        out = tmp_path / "out"
        rc = main(
            [
                "analyze",
                "--input", str(delay_csv),
                "--rate", "100",
                "--band-center", "10",
                "--band-width", "5",
                "--methods", "granger",
                "--out", str(out),
            ]
        )
        assert rc == 0
        _, grows = read_csv(out / "granger_pairs.csv")
        methods = {r[0] for r in grows}
        assert methods == {"granger_wide", "granger_narrow"}

    def test_missing_file(self, tmp_path, capsys):
        rc = main(["analyze", "--input", str(tmp_path / "nope.csv"), "--rate", "100"])
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert err.count("\n") == 1

    def test_degenerate_data_exit_2(self, tmp_path, capsys):
        rec = MultichannelRecord(
            data=np.vstack([np.random.default_rng(0).standard_normal(2000), np.zeros(2000)]),
            sampling_rate=100.0,
        )
        path = tmp_path / "zero.csv"
        save_record(rec, path, format="csv")
        rc = main(["analyze", "--input", str(path), "--rate", "100", "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "degenerate" in capsys.readouterr().err

    def test_raw_format_roundtrip(self, tmp_path):
        rec = delay_record(n_samples=4000, seed=2)
        path = tmp_path / "rec.bin"
        save_record(rec, path, format="raw")
        out = tmp_path / "out"
        rc = main(
            [
                "analyze",
                "--input", str(path),
                "--format", "raw",
                "--rate", "100",
                "--channels", "2",
                "--out", str(out),
            ]
        )
        assert rc == 0
        _, rows = read_csv(out / "psi_pairs.csv")
        assert len(rows) == 2


class TestBenchmark:
    def test_deterministic_byte_identical(self, tmp_path):
        args = ["benchmark", "--gammas", "0,1", "--systems", "2", "--seed", "7"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "benchmark.csv").read_bytes() == (out2 / "benchmark.csv").read_bytes()
        assert (out1 / "benchmark.json").read_bytes() == (out2 / "benchmark.json").read_bytes()

    def test_schema(self, tmp_path):
        out = tmp_path / "out"
        rc = main(
            ["benchmark", "--gammas", "0,0.5,1", "--systems", "2", "--seed", "3", "--out", str(out)]
        )
        assert rc == 0
        header, rows = read_csv(out / "benchmark.csv")
        assert header == [
            "gamma", "method", "band_mode", "n",
            "frac_correct", "frac_false",
            "ci_correct_low", "ci_correct_high", "ci_false_low", "ci_false_high",
        ]
        assert len(rows) == 6  # 3 gammas x 2 methods
        for row in rows:
            assert 0.0 <= float(row[4]) <= 1.0
            assert 0.0 <= float(row[5]) <= 1.0
        cfg = json.loads((out / "run_config.json").read_text())
        assert cfg["command"] == "benchmark"
        assert cfg["seed"] == 3

    def test_zero_systems_rejected(self, capsys):
        assert main(["benchmark", "--gammas", "0", "--systems", "0"]) == 1
        assert "systems" in capsys.readouterr().err

    def test_bad_gamma_rejected(self, capsys):
        assert main(["benchmark", "--gammas", "0,2", "--systems", "1"]) == 1


class TestSweep:
    def test_single_center_matches_analyze(self, tmp_path, delay_csv):
        out_a = tmp_path / "analyze"
        out_s = tmp_path / "sweep"
        assert main(
            [
                "analyze",
                "--input", str(delay_csv), "--rate", "100",
                "--band-center", "10", "--band-width", "5",
                "--out", str(out_a),
            ]
        ) == 0
        assert main(
            [
                "sweep",
                "--input", str(delay_csv), "--rate", "100",
                "--centers", "10", "--band-width", "5",
                "--out", str(out_s),
            ]
        ) == 0
        _, arows = read_csv(out_a / "psi_pairs.csv")
        _, srows = read_csv(out_s / "sweep_pairs.csv")
        a = {(r[0], r[1]): r[3] for r in arows}
        s = {(r[1], r[2]): r[3] for r in srows}
        assert a == s

    def test_range_syntax_and_projections(self, tmp_path, delay_csv):
        layout = tmp_path / "layout.csv"
        layout.write_text("label,x,y\nA,0,1\nB,0,-1\n")
        out = tmp_path / "out"
        rc = main(
            [
                "sweep",
                "--input", str(delay_csv), "--rate", "100",
                "--centers", "5:15:2.5", "--band-width", "5",
                "--layout", str(layout), "--direction", "front-back",
                "--out", str(out),
            ]
        )
        assert rc == 0
        _, rows = read_csv(out / "sweep_pairs.csv")
        centers = sorted({float(r[0]) for r in rows})
        assert centers == [5.0, 7.5, 10.0, 12.5, 15.0]
        _, prows = read_csv(out / "sweep_projections.csv")
        assert {r[0] for r in prows} == {"front-back"}

    def test_empty_centers_rejected(self, delay_csv, capsys):
        rc = main(["sweep", "--input", str(delay_csv), "--rate", "100", "--centers", ""])
        assert rc == 1
        assert "center" in capsys.readouterr().err

    def test_band_exceeding_grid_rejected(self, delay_csv, capsys):
        rc = main(
            ["sweep", "--input", str(delay_csv), "--rate", "100", "--centers", "49", "--band-width", "5"]
        )
        assert rc == 1


def test_fres_flag_sets_resolution(tmp_path, delay_csv):
    out = tmp_path / "out"
    rc = main(
        [
            "analyze",
            "--input", str(delay_csv), "--rate", "100",
            "--fres", "0.25", "--dump-spectra",
            "--out", str(out),
        ]
    )
    assert rc == 0
    doc = json.loads((out / "spectra.json").read_text())
    freqs = doc["cross_spectrum"]["frequencies"]
    assert freqs[1] - freqs[0] == pytest.approx(0.25)
