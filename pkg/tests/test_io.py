"""File-format contracts: cube pair, library CSV, canonical JSON, reports."""

import json
import math

import numpy as np
import pytest

from specprune import (
    EmptyLibrary,
    EvalReport,
    HeaderParse,
    HsiCube,
    MissingFile,
    NonFiniteData,
    RaggedRows,
    SizeMismatch,
    SpectralLibrary,
    dumps_canonical,
    load_cube,
    load_library,
    save_cube,
    save_library,
    save_report,
    write_json,
)
from specprune.io import CubeHeader
from specprune.pruning import PruneResult
from specprune.core import IndexSet


class TestCubeRoundTrip:
    def test_bitwise_round_trip(self, tmp_path, rng):
        cube = HsiCube(
            rng.normal(size=(12, 5)),
            wavelengths=(400.0, 450.0, 500.0, 550.0, 600.0),
            lines=4,
            samples=3,
        )
        header, payload = save_cube(cube, tmp_path / "cube.json")
        assert header.name == "cube.json"
        assert payload.name == "cube.bin"
        back = load_cube(header)
        assert np.array_equal(back.data, cube.data)
        assert back.wavelengths == cube.wavelengths
        assert (back.lines, back.samples) == (4, 3)

    def test_header_fields(self, tmp_path, rng):
        cube = HsiCube(rng.normal(size=(6, 4)))
        header, _ = save_cube(cube, tmp_path / "c.json")
        doc = json.loads(header.read_text())
        assert doc["dtype"] == "f64le"
        assert doc["interleave"] == "pixel-major"
        assert doc["lines"] * doc["samples"] == 6
        assert doc["bands"] == 4

    def test_payload_is_little_endian_f64(self, tmp_path):
        cube = HsiCube(np.array([[1.0, 2.0], [3.0, 4.0]]))
        _, payload = save_cube(cube, tmp_path / "c.json")
        raw = np.frombuffer(payload.read_bytes(), dtype="<f8")
        assert raw.tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_missing_header(self, tmp_path):
        with pytest.raises(MissingFile):
            load_cube(tmp_path / "nope.json")

    def test_missing_payload(self, tmp_path, rng):
        header, payload = save_cube(HsiCube(rng.normal(size=(3, 3))), tmp_path / "c.json")
        payload.unlink()
        with pytest.raises(MissingFile):
            load_cube(header)

    def test_truncated_payload(self, tmp_path, rng):
        header, payload = save_cube(HsiCube(rng.normal(size=(3, 3))), tmp_path / "c.json")
        payload.write_bytes(payload.read_bytes()[:-8])
        with pytest.raises(SizeMismatch):
            load_cube(header)

    def test_malformed_header_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(HeaderParse):
            load_cube(p)

    def test_wrong_dtype_tag(self, tmp_path, rng):
        header, _ = save_cube(HsiCube(rng.normal(size=(3, 3))), tmp_path / "c.json")
        doc = json.loads(header.read_text())
        doc["dtype"] = "f32le"
        header.write_text(json.dumps(doc))
        with pytest.raises(HeaderParse):
            load_cube(header)

    def test_header_missing_key(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"lines": 2, "samples": 1, "bands": 3}')
        with pytest.raises(HeaderParse, match="missing keys"):
            load_cube(p)

    def test_stem_without_suffix(self, tmp_path, rng):
        cube = HsiCube(rng.normal(size=(3, 3)))
        header, _ = save_cube(cube, tmp_path / "plain")
        assert header.name == "plain.json"
        assert np.array_equal(load_cube(header).data, cube.data)


class TestCubeHeaderType:
    def test_wavelength_count_checked(self):
        with pytest.raises(HeaderParse):
            CubeHeader(lines=2, samples=1, bands=3, wavelengths=(1.0, 2.0))

    def test_bad_dimensions(self):
        with pytest.raises(HeaderParse):
            CubeHeader(lines=0, samples=1, bands=3)

    def test_from_mapping_rejects_non_object(self):
        with pytest.raises(HeaderParse):
            CubeHeader.from_mapping(["not", "a", "dict"])


class TestLibraryCsv:
    def test_exact_round_trip(self, tmp_path, rng):
        lib = SpectralLibrary(
            rng.normal(size=(4, 6)) * 1e-7 + np.pi,
            names=("plain", "with,comma", 'with"quote', "#not_a_comment"),
            wavelengths=tuple(400.0 + 10.0 * i for i in range(6)),
        )
        path = save_library(lib, tmp_path / "lib.csv")
        back = load_library(path)
        assert np.array_equal(back.data, lib.data)
        assert back.names == lib.names
        assert back.wavelengths == lib.wavelengths

    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "lib.csv"
        p.write_text(
            "# a comment\n"
            "\n"
            "alpha,1.0,2.0,3.0\n"
            "# another\n"
            "beta,4.0,5.0,6.0\n"
        )
        lib = load_library(p)
        assert lib.names == ("alpha", "beta")
        assert lib.data.shape == (2, 3)
        assert lib.wavelengths is None

    def test_wavelength_row(self, tmp_path):
        p = tmp_path / "lib.csv"
        p.write_text(
            "wavelength,400,500,600\n"
            "a,1,2,3\n"
            "b,4,5,6\n"
        )
        lib = load_library(p)
        assert lib.wavelengths == (400.0, 500.0, 600.0)

    def test_ragged_rows(self, tmp_path):
        p = tmp_path / "lib.csv"
        p.write_text("a,1,2,3\nb,4,5\n")
        with pytest.raises(RaggedRows):
            load_library(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "lib.csv"
        p.write_text("# only comments\n\n")
        with pytest.raises(EmptyLibrary):
            load_library(p)

    def test_bad_float(self, tmp_path):
        p = tmp_path / "lib.csv"
        p.write_text("a,1,2,zebra\nb,1,2,3\n")
        with pytest.raises(NonFiniteData):
            load_library(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_library(tmp_path / "ghost.csv")


class TestCanonicalJson:
    def test_sorted_keys_and_formats(self):
        text = dumps_canonical({"b": 1, "a": 0.1, "c": True, "d": None})
        assert text == '{"a":0.1,"b":1,"c":true,"d":null}\n'

    def test_nan_and_inf_to_null(self):
        text = dumps_canonical({"x": float("nan"), "y": float("inf")})
        assert text == '{"x":null,"y":null}\n'

    def test_twelve_significant_digits(self):
        text = dumps_canonical({"v": 1.0 / 3.0})
        assert text == '{"v":0.333333333333}\n'

    def test_ndarray_and_ints(self):
        text = dumps_canonical({"a": np.array([1.5, 2.5]), "n": np.int64(7)})
        assert text == '{"a":[1.5,2.5],"n":7}\n'

    def test_nested_and_strings(self):
        text = dumps_canonical({"s": "he said \"hi\"", "inner": {"z": [1, 2]}})
        assert json.loads(text) == {"s": 'he said "hi"', "inner": {"z": [1, 2]}}

    def test_write_json_is_byte_stable(self, tmp_path):
        doc = {"pi": math.pi, "list": [1, 2.5], "flag": False}
        p1 = write_json(doc, tmp_path / "a.json")
        p2 = write_json(doc, tmp_path / "b.json")
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text().endswith("\n")


class TestSaveReport:
    def _nnd_result(self):
        from specprune.solver import SolveDiagnostics

        diags = tuple(SolveDiagnostics(1, 0.0, 0.0, (0.0,), True) for _ in range(3))
        return PruneResult(
            scores=(0.5, -0.25, 0.125),
            selected=IndexSet((0, 2)),
            base_nuclear_norm=2.5,
            per_atom_diagnostics=diags,
            algorithm="nnd",
        )

    def test_required_fields_present(self, tmp_path):
        path = save_report(
            self._nnd_result(),
            tmp_path / "r.json",
            names=("a", "b", "c"),
            config={"p": 2},
            metrics=EvalReport(asad=0.1, sre_db=12.5, detection=1.0),
            seed=42,
        )
        doc = json.loads(path.read_text())
        assert doc["selected_indices"] == [0, 2]
        assert doc["selected_names"] == ["a", "c"]
        assert doc["scores"] == [0.5, -0.25, 0.125]
        assert doc["config"] == {"p": 2}
        assert doc["metrics"] == {"asad": 0.1, "sre": 12.5, "detection": 1.0}
        assert doc["seed"] == 42

    def test_infinite_sre_serialization(self, tmp_path):
        path = save_report(
            self._nnd_result(),
            tmp_path / "r.json",
            names=("a", "b", "c"),
            config={},
            metrics=EvalReport(asad=0.0, sre_db=math.inf, detection=1.0),
        )
        doc = json.loads(path.read_text())
        assert doc["metrics"]["sre"] is None
        assert doc["metrics"]["sre_exact"] is True

    def test_nan_scores_serialize_null(self, tmp_path):
        result = PruneResult(
            scores=(float("nan"), 3.0),
            selected=IndexSet((1,)),
            base_nuclear_norm=float("nan"),
            per_atom_diagnostics=(),
            algorithm="omp",
        )
        path = save_report(
            result, tmp_path / "r.json", names=("a", "b"), config={}
        )
        doc = json.loads(path.read_text())
        assert doc["scores"] == [None, 3.0]
        assert doc["base_nuclear_norm"] is None

    def test_names_length_checked(self, tmp_path):
        with pytest.raises(SizeMismatch):
            save_report(
                self._nnd_result(), tmp_path / "r.json", names=("a",), config={}
            )
