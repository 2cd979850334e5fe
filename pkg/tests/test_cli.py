"""Command-line contracts: files written, exit codes, determinism."""

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from specprune import generate_smooth_library, save_library
from specprune.cli import main


@pytest.fixture(scope="module")
def lib_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("lib") / "lib.csv"
    save_library(generate_smooth_library(12, 50, seed=99), path)
    return path


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory, lib_csv):
    out = tmp_path_factory.mktemp("scene")
    code = main(
        [
            "synth", "--lib", str(lib_csv), "--pixels", "120", "--endmembers", "3",
            "--purity", "0.9", "--seed", "7", "--keep-clean", "--out", str(out),
        ]
    )
    assert code == 0
    return out


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSynth:
    def test_writes_three_files(self, tmp_path, lib_csv):
        out = tmp_path / "s"
        code = main(
            [
                "synth", "--lib", str(lib_csv), "--pixels", "50", "--endmembers", "3",
                "--purity", "0.8", "--snr", "30", "--seed", "1", "--out", str(out),
            ]
        )
        assert code == 0
        assert sorted(p.name for p in out.iterdir()) == [
            "cube.bin", "cube.json", "truth.json",
        ]

    def test_truth_json_contents(self, scene_dir, lib_csv):
        doc = json.loads((scene_dir / "truth.json").read_text())
        assert doc["schema"] == 1
        assert doc["seed"] == 7
        assert len(doc["indices"]) == 3
        assert doc["snr_db"] is None
        assert doc["library"].endswith("lib.csv")

    def test_rerun_identical_truth(self, tmp_path, lib_csv):
        args = [
            "synth", "--lib", str(lib_csv), "--pixels", "40", "--endmembers", "2",
            "--seed", "3", "--out",
        ]
        assert main(args + [str(tmp_path / "a")]) == 0
        assert main(args + [str(tmp_path / "b")]) == 0
        assert (tmp_path / "a/truth.json").read_bytes() == (
            tmp_path / "b/truth.json"
        ).read_bytes()
        assert (tmp_path / "a/cube.bin").read_bytes() == (
            tmp_path / "b/cube.bin"
        ).read_bytes()

    def test_infeasible_purity_exit_2(self, tmp_path, lib_csv, capsys):
        code = main(
            [
                "synth", "--lib", str(lib_csv), "--pixels", "10", "--endmembers", "5",
                "--purity", "0.1", "--out", str(tmp_path / "x"),
            ]
        )
        assert code == 2
        assert "infeasible purity" in capsys.readouterr().err

    def test_missing_library_exit_3(self, tmp_path):
        code = main(
            [
                "synth", "--lib", str(tmp_path / "ghost.csv"), "--pixels", "10",
                "--endmembers", "2", "--out", str(tmp_path / "x"),
            ]
        )
        assert code == 3

    def test_pinned_indices(self, tmp_path, lib_csv):
        out = tmp_path / "pinned"
        code = main(
            [
                "synth", "--lib", str(lib_csv), "--pixels", "10", "--endmembers", "3",
                "--indices", "5,1,8", "--out", str(out),
            ]
        )
        assert code == 0
        assert json.loads((out / "truth.json").read_text())["indices"] == [5, 1, 8]


class TestPrune:
    def test_nnd_selects_truth(self, tmp_path, lib_csv, scene_dir):
        report = tmp_path / "report.json"
        code = main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "3", "--out", str(report),
            ]
        )
        assert code == 0
        doc = json.loads(report.read_text())
        truth = json.loads((scene_dir / "truth.json").read_text())
        assert set(doc["selected_indices"]) == set(truth["indices"])
        assert doc["algorithm"] == "nnd"
        assert len(doc["scores"]) == 12
        assert doc["config"]["lambda_mode"] == "auto"
        assert doc["notes"]  # denoise decision is recorded

    def test_no_denoise_drops_note(self, tmp_path, lib_csv, scene_dir):
        report = tmp_path / "nd.json"
        main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "3", "--no-denoise", "--out", str(report),
            ]
        )
        doc = json.loads(report.read_text())
        assert "notes" not in doc
        assert doc["config"]["denoise"] is False

    def test_omp_records_selection_order(self, tmp_path, lib_csv, scene_dir):
        report = tmp_path / "omp.json"
        code = main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "3", "--algo", "omp", "--out", str(report),
            ]
        )
        assert code == 0
        doc = json.loads(report.read_text())
        assert doc["algorithm"] == "omp"
        picked = doc["selected_indices"]
        ranks = [doc["scores"][i] for i in picked]
        assert ranks == sorted(ranks, reverse=True)  # K, K-1, ...
        assert doc["base_nuclear_norm"] is None

    def test_p_too_large_exit_2(self, tmp_path, lib_csv, scene_dir):
        code = main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "99", "--out", str(tmp_path / "r.json"),
            ]
        )
        assert code == 2

    def test_missing_cube_exit_3(self, tmp_path, lib_csv):
        code = main(
            [
                "prune", "--cube", str(tmp_path / "none.json"), "--lib", str(lib_csv),
                "--p", "2", "--out", str(tmp_path / "r.json"),
            ]
        )
        assert code == 3

    def test_score_plot_svg(self, tmp_path, lib_csv, scene_dir):
        plot = tmp_path / "scores.svg"
        code = main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "3", "--out", str(tmp_path / "r.json"),
                "--plot", str(plot), "--truth", str(scene_dir / "truth.json"),
            ]
        )
        assert code == 0
        text = plot.read_text()
        assert text.startswith("<svg")
        assert text.count("<circle") >= 12  # one dot per atom + truth rings


class TestUnmix:
    def test_truth_indices_noiseless_high_sre(self, tmp_path, lib_csv, scene_dir):
        truth = json.loads((scene_dir / "truth.json").read_text())
        out = tmp_path / "um"
        code = main(
            [
                "unmix", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--indices", ",".join(str(i) for i in truth["indices"]),
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads((out / "unmix.json").read_text())
        assert doc["sre_exact"] or doc["sre_db"] >= 60.0
        assert doc["sum_to_one"] is True
        assert doc["nonneg"] is True
        assert (out / "abundance.json").is_file()
        assert (out / "abundance.bin").is_file()

    def test_abundance_file_shape(self, tmp_path, lib_csv, scene_dir):
        from specprune import load_cube

        out = tmp_path / "um2"
        main(
            [
                "unmix", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--indices", "0,1,2,3", "--out", str(out),
            ]
        )
        ab = load_cube(out / "abundance.json")
        assert ab.data.shape == (120, 4)
        assert np.abs(ab.data.sum(axis=1) - 1.0).max() < 1e-6

    def test_from_json_selection(self, tmp_path, lib_csv, scene_dir):
        report = tmp_path / "r.json"
        main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "3", "--out", str(report),
            ]
        )
        out = tmp_path / "um3"
        code = main(
            [
                "unmix", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--from-json", str(report), "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads((out / "unmix.json").read_text())
        assert doc["indices"] == json.loads(report.read_text())["selected_indices"]

    def test_empty_indices_exit_2(self, tmp_path, lib_csv, scene_dir):
        code = main(
            [
                "unmix", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--indices", "", "--out", str(tmp_path / "um4"),
            ]
        )
        assert code == 2

    def test_reference_cube_scoring(self, tmp_path, lib_csv, scene_dir):
        truth = json.loads((scene_dir / "truth.json").read_text())
        out = tmp_path / "um5"
        code = main(
            [
                "unmix", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--indices", ",".join(str(i) for i in truth["indices"]),
                "--reference", str(scene_dir / "clean.json"), "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads((out / "unmix.json").read_text())
        assert doc["reference"].endswith("clean.json")


class TestEval:
    def _make_report(self, tmp_path, lib_csv, scene_dir, name="r.json"):
        report = tmp_path / name
        main(
            [
                "prune", "--cube", str(scene_dir / "cube.json"), "--lib", str(lib_csv),
                "--p", "3", "--out", str(report),
            ]
        )
        return report

    def test_stdout_metrics(self, tmp_path, lib_csv, scene_dir, capsys):
        report = self._make_report(tmp_path, lib_csv, scene_dir)
        capsys.readouterr()  # drop the prune command's own output
        code = main(
            ["eval", "--truth", str(scene_dir / "truth.json"), "--report", str(report)]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["detection"] == 1.0
        assert doc["asad"] == pytest.approx(0.0, abs=1e-6)
        assert len(doc["per_endmember_sad"]) == 3

    def test_out_file_and_sre(self, tmp_path, lib_csv, scene_dir):
        report = self._make_report(tmp_path, lib_csv, scene_dir, "r2.json")
        out = tmp_path / "metrics.json"
        code = main(
            [
                "eval", "--truth", str(scene_dir / "truth.json"),
                "--report", str(report), "--cube", str(scene_dir / "cube.json"),
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["sre"] is None or doc["sre"] > 0.0
        assert doc["schema"] == 1

    def test_detection_zero_on_wrong_selection(self, tmp_path, lib_csv, scene_dir):
        truth = json.loads((scene_dir / "truth.json").read_text())
        wrong = [i for i in range(12) if i not in truth["indices"]][:3]
        fake = tmp_path / "fake.json"
        fake.write_text(
            json.dumps({"selected_indices": wrong, "config": {}})
        )
        out = tmp_path / "m.json"
        code = main(
            [
                "eval", "--truth", str(scene_dir / "truth.json"),
                "--report", str(fake), "--lib", str(lib_csv), "--out", str(out),
            ]
        )
        assert code == 0
        assert json.loads(out.read_text())["detection"] == 0.0

    def test_missing_truth_exit_3(self, tmp_path, lib_csv, scene_dir):
        report = self._make_report(tmp_path, lib_csv, scene_dir, "r3.json")
        code = main(
            ["eval", "--truth", str(tmp_path / "ghost.json"), "--report", str(report)]
        )
        assert code == 3


class TestExperiment:
    def _spec(self, tmp_path, lib_csv, **overrides):
        doc = {
            "library": str(lib_csv),
            "n_pixels": [60],
            "n_endmembers": [3],
            "max_purity": [0.9],
            "snr_db": [None],
            "trials_per_cell": 1,
            "base_seed": 50,
            "algorithms": ["nnd"],
            "solver": {"rho": 1.0, "max_iter": 200},
            "denoise": False,
        }
        doc.update(overrides)
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(doc))
        return path

    def test_single_cell_single_row(self, tmp_path, lib_csv):
        spec = self._spec(tmp_path, lib_csv)
        out = tmp_path / "runs.csv"
        assert main(["experiment", "--spec", str(spec), "--out", str(out)]) == 0
        rows = _read_csv(out)
        data = [r for r in rows if r["row_type"] == "data"]
        agg = [r for r in rows if r["row_type"] == "aggregate"]
        assert len(data) == 1
        assert len(agg) == 1
        assert data[0]["seed"] == "50"
        assert data[0]["schema"] == "1"
        assert "wall_s" in rows[0]

    def test_no_timing_drops_column(self, tmp_path, lib_csv):
        spec = self._spec(tmp_path, lib_csv)
        out = tmp_path / "nt.csv"
        main(["experiment", "--spec", str(spec), "--out", str(out), "--no-timing"])
        rows = _read_csv(out)
        assert "wall_s" not in rows[0]

    def test_rerun_byte_identical(self, tmp_path, lib_csv):
        spec = self._spec(
            tmp_path, lib_csv, trials_per_cell=2, algorithms=["nnd", "omp"],
            snr_db=[30.0, None],
        )
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        main(["experiment", "--spec", str(spec), "--out", str(a), "--no-timing"])
        main(["experiment", "--spec", str(spec), "--out", str(b), "--no-timing"])
        assert a.read_bytes() == b.read_bytes()

    def test_thread_count_does_not_change_bytes(self, tmp_path, lib_csv, monkeypatch):
        spec = self._spec(tmp_path, lib_csv, trials_per_cell=2, algorithms=["nnd", "omp"])
        a = tmp_path / "serial.csv"
        b = tmp_path / "threaded.csv"
        main(["experiment", "--spec", str(spec), "--out", str(a), "--no-timing"])
        monkeypatch.setenv("SPECPRUNE_THREADS", "3")
        main(["experiment", "--spec", str(spec), "--out", str(b), "--no-timing"])
        assert a.read_bytes() == b.read_bytes()

    def test_row_order_and_seed_assignment(self, tmp_path, lib_csv):
        spec = self._spec(
            tmp_path, lib_csv, n_endmembers=[2, 3], trials_per_cell=2,
            algorithms=["nnd", "omp"],
        )
        out = tmp_path / "order.csv"
        main(["experiment", "--spec", str(spec), "--out", str(out), "--no-timing"])
        data = [r for r in _read_csv(out) if r["row_type"] == "data"]
        assert [r["seed"] for r in data] == [str(50 + i) for i in range(8)]
        keys = [(r["cell"], r["trial"], r["algo"]) for r in data]
        assert keys == sorted(keys)

    def test_detection_and_margin_columns(self, tmp_path, lib_csv):
        spec = self._spec(tmp_path, lib_csv, algorithms=["nnd", "omp"])
        out = tmp_path / "cols.csv"
        main(["experiment", "--spec", str(spec), "--out", str(out), "--no-timing"])
        data = [r for r in _read_csv(out) if r["row_type"] == "data"]
        nnd = next(r for r in data if r["algo"] == "nnd")
        omp = next(r for r in data if r["algo"] == "omp")
        assert nnd["detected"] in {"0", "1"}
        assert float(nnd["delta_margin"]) != 0.0
        assert nnd["detected_alt"] in {"0", "1"}
        assert omp["delta_margin"] == ""
        assert omp["detected_alt"] == ""
        assert float(nnd["asad_rad"]) >= 0.0

    def test_crlf_line_endings(self, tmp_path, lib_csv):
        spec = self._spec(tmp_path, lib_csv)
        out = tmp_path / "crlf.csv"
        main(["experiment", "--spec", str(spec), "--out", str(out), "--no-timing"])
        raw = out.read_bytes()
        assert raw.count(b"\r\n") == raw.count(b"\n")

    def test_malformed_spec_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"n_pixels": [5]}')  # no library key
        code = main(["experiment", "--spec", str(bad), "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_unknown_solver_key_exit_2(self, tmp_path, lib_csv):
        spec = self._spec(tmp_path, lib_csv, solver={"step_size": 1.0})
        code = main(["experiment", "--spec", str(spec), "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_missing_spec_exit_3(self, tmp_path):
        code = main(
            ["experiment", "--spec", str(tmp_path / "ghost.json"),
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 3


class TestUserSuppliedData:
    def test_182_band_cube_and_library(self, tmp_path):
        # a cube/library pair at a real sensor's band count flows through
        # the prune pipeline with no special handling
        lib = generate_smooth_library(20, 182, seed=5)
        lib_path = tmp_path / "lib182.csv"
        save_library(lib, lib_path)
        out = tmp_path / "scene"
        assert main(
            [
                "synth", "--lib", str(lib_path), "--pixels", "60",
                "--endmembers", "4", "--purity", "0.9", "--snr", "35",
                "--seed", "6", "--out", str(out),
            ]
        ) == 0
        report = tmp_path / "report.json"
        assert main(
            [
                "prune", "--cube", str(out / "cube.json"), "--lib", str(lib_path),
                "--p", "4", "--out", str(report),
            ]
        ) == 0
        doc = json.loads(report.read_text())
        truth = json.loads((out / "truth.json").read_text())
        assert len(doc["scores"]) == 20
        assert set(doc["selected_indices"]) == set(truth["indices"])


class TestEntryPoint:
    def test_console_script_version(self):
        out = subprocess.run(
            ["specprune", "--version"], capture_output=True, text=True
        )
        assert out.returncode == 0
        assert "specprune" in out.stdout

    def test_module_main_guard(self):
        out = subprocess.run(
            [sys.executable, "-m", "specprune.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
