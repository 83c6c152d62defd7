"""Tests for scenario parsing, the run/compare commands and the CSV contract."""

import json
import math

import numpy as np
import pytest

from nmipe.cli import (
    Row,
    compare_report,
    main,
    parse_scenario,
    read_results,
    run_scenario,
    write_results,
)
from nmipe.errors import ConfigError


def base_scenario(**overrides):
    doc = {
        "params": {"cn2": 1e-15, "wavelength": 1e-6, "w0": 0.01},
        "z_grid": [0.0, 50.0, 100.0],
        "eval_points": [{"x": [0.005, 0.001], "a_d": [40.0, 10.0]}],
        "methods": ["perturbative", "oracle"],
    }
    doc.update(overrides)
    return doc


class TestParsing:
    def test_valid(self):
        s = parse_scenario(base_scenario())
        assert s.params.cn2 == 1e-15
        assert len(s.eval_points) == 1

    @pytest.mark.parametrize(
        "patch",
        [
            {"params": {"cn2": 1e-15, "wavelength": 1e-6}},  # missing w0
            {"params": {"cn2": -1.0, "wavelength": 1e-6, "w0": 0.01}},
            {"z_grid": []},
            {"z_grid": [1.0, 1.0]},
            {"z_grid": [-1.0, 2.0]},
            {"methods": []},
            {"methods": ["fancy"]},
            {"eval_points": [{"x": [1.0]}]},
            {"coherence": {"axis_points": [0.0]}},  # missing z
        ],
    )
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            parse_scenario(base_scenario(**patch))

    def test_two_photon_point(self):
        doc = base_scenario(
            eval_points=[
                {"x1": [0.01, 0], "a_d": [10, 0], "x2": [0, 0], "b_d": [0, 0]}
            ]
        )
        s = parse_scenario(doc)
        from nmipe.ipe import TwoPhotonPoint

        assert isinstance(s.eval_points[0], TwoPhotonPoint)


class TestRun:
    def test_zero_turbulence_all_ones(self):
        doc = base_scenario(
            params={"cn2": 0.0, "wavelength": 1e-6, "w0": 0.01},
            methods=["perturbative", "modified", "oracle"],
        )
        rows = run_scenario(parse_scenario(doc))
        kernel_rows = [r for r in rows if r.kind == "kernel"]
        assert kernel_rows
        for r in kernel_rows:
            if r.method == "modified":
                # zeta > 0 holds for this point, so the limit value 1 applies
                assert r.value_re == 1.0
            else:
                assert r.value_re == 1.0

    def test_empty_points_is_success(self):
        rows = run_scenario(parse_scenario(base_scenario(eval_points=[])))
        assert rows == []

    def test_modified_two_photon_is_row_level_domain_error(self):
        doc = base_scenario(
            eval_points=[
                {"x1": [0.01, 0], "a_d": [10, 0], "x2": [0, 0], "b_d": [0, 0]}
            ],
            methods=["modified", "perturbative"],
        )
        rows = run_scenario(parse_scenario(doc))
        mod = [r for r in rows if r.method == "modified" and r.z > 0]
        assert mod and all(r.status.startswith("domain_error") for r in mod)
        pert = [r for r in rows if r.method == "perturbative"]
        assert pert and all(r.status == "ok" for r in pert)

    def test_threads_do_not_change_rows(self):
        s = parse_scenario(base_scenario())
        a = run_scenario(s, threads=1)
        b = run_scenario(s, threads=4)
        assert [r.to_csv() for r in a] == [r.to_csv() for r in b]

    def test_oracle_matches_perturbative_weakly(self):
        # first-order term ~7e-4 here, so the O(g^2) gap is ~<1e-6
        doc = base_scenario(
            params={"cn2": 1e-19, "wavelength": 1e-6, "w0": 0.01},
        )
        rows = run_scenario(parse_scenario(doc))
        by = {}
        for r in rows:
            by.setdefault(r.z, {})[r.method] = r.value_re
        for z, vals in by.items():
            if z > 0:
                assert vals["perturbative"] == pytest.approx(vals["oracle"], rel=1e-5)


class TestCsvRoundTrip:
    def test_round_trip_and_determinism(self, tmp_path):
        doc = base_scenario()
        path = tmp_path / "scn.json"
        path.write_text(json.dumps(doc))
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["run", str(path), "--out", str(out1)]) == 0
        assert main(["run", str(path), "--out", str(out2), "--threads", "3"]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        header, rows = read_results(str(out1))
        assert header["format"] == "nmipe-results"
        assert "normalized" in header and "g" in header["normalized"]
        assert all(r["kind"] == "kernel" for r in rows)
        n_expected = len(doc["z_grid"]) * len(doc["methods"]) * len(doc["eval_points"])
        assert len(rows) == n_expected

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("not a header\n")
        with pytest.raises(ConfigError):
            read_results(str(p))

    def test_config_error_exit_code(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(base_scenario(methods=[])))
        assert main(["run", str(p)]) == 2

    def test_missing_file_exit_code(self):
        assert main(["run", "/nonexistent/scn.json"]) == 2


class TestCompare:
    def _rows(self, table):
        rows = []
        for method, z, v in table:
            rows.append(
                {
                    "kind": "kernel",
                    "method": method,
                    "point_index": "0",
                    "aux_index": "-1",
                    "z": f"{z:.16e}",
                    "t": "0",
                    "value_re": f"{v:.16e}",
                    "value_im": "0",
                    "valid": "1",
                    "status": "ok",
                }
            )
        return rows

    def test_identical_columns_zero_deviation(self):
        rows = self._rows(
            [("perturbative", 1.0, 0.9), ("oracle", 1.0, 0.9), ("perturbative", 2.0, 0.8), ("oracle", 2.0, 0.8)]
        )
        rep = compare_report(rows)
        assert rep["pairs"]["oracle_vs_perturbative"]["max_rel"] == 0.0

    def test_deviation_computed(self):
        rows = self._rows([("perturbative", 1.0, 1.0), ("oracle", 1.0, 0.5)])
        rep = compare_report(rows)
        assert rep["pairs"]["oracle_vs_perturbative"]["max_rel"] == pytest.approx(0.5)

    def test_insufficient_methods(self):
        rows = self._rows([("oracle", 1.0, 1.0)])
        with pytest.raises(ConfigError):
            compare_report(rows)

    def test_cli_end_to_end(self, tmp_path, capsys):
        doc = base_scenario()
        scn = tmp_path / "scn.json"
        scn.write_text(json.dumps(doc))
        out = tmp_path / "r.csv"
        assert main(["run", str(scn), "--out", str(out)]) == 0
        assert main(["compare", str(out)]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert "oracle_vs_perturbative" in rep["pairs"]


class TestCoherenceBlock:
    def test_small_free_space_block(self, tmp_path):
        doc = base_scenario(
            eval_points=[],
            methods=["perturbative"],
            coherence={
                "z": 300.0,
                "axis_points": [-0.005, 0.0, 0.005],
                "kernel": "free",
                "rtol": 1e-7,
            },
        )
        rows = run_scenario(parse_scenario(doc))
        coh = [r for r in rows if r.kind == "coherence"]
        assert len(coh) == 9
        vals = {(r.point_index, r.aux_index): complex(r.value_re, r.value_im) for r in coh}
        # hermiticity of the emitted matrix
        for i in range(3):
            for j in range(3):
                assert vals[(i, j)] == pytest.approx(np.conj(vals[(j, i)]), rel=1e-9)
        # diagonal real positive
        for i in range(3):
            assert vals[(i, i)].real > 0
            assert abs(vals[(i, i)].imag) <= 1e-12 * vals[(i, i)].real


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "PASS" in out
