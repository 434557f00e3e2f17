import json
import math
import subprocess
import sys

import numpy as np
import pytest

import abphase as ab
from abphase.cli import main as cli_main
from abphase.presets import ramp_tree


class TestLoading:
    def test_preset_magnetic_structure(self):
        scn = ab.load_scenario(ab.render_toml(ab.preset_tree("magnetic_static")))
        assert scn.name == "magnetic_static"
        assert len(scn.config.solenoids) == 1
        assert len(scn.config.cages) == 0
        assert scn.q_over_hbar == 1.0

    def test_q_over_hbar_defaults_to_one(self):
        text = """
[run]
name = "bare"

[arm.a]
knots = [[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0]]

[arm.b]
knots = [[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0]]
"""
        scn = ab.load_scenario(text)
        assert scn.q_over_hbar == 1.0
        assert list(scn.strategies) == ["direct"]

    def test_overlapping_cages_reported_with_names(self):
        tree = ab.preset_tree("electric_pulsed")
        tree["cage"]["b"]["center"] = [0.0, 0.9, 0.0]
        with pytest.raises(ab.ScenarioValidationError) as err:
            ab.scenario_from_tree(tree)
        joined = "; ".join(err.value.violations)
        assert "cage.a" in joined and "cage.b" in joined

    def test_parse_error_carries_location(self):
        with pytest.raises(ab.ScenarioValidationError) as err:
            ab.load_scenario("[run\nname = 3")
        assert "parse error" in err.value.violations[0]
        assert "line" in err.value.violations[0]

    def test_waypoints_through_solenoid_rejected(self):
        tree = ramp_tree()
        tree["strategy"]["around"]["waypoints"][2] = [0.0, 0.0001]
        with pytest.raises(ab.ScenarioValidationError) as err:
            ab.scenario_from_tree(tree)
        assert any("strategy.around" in v for v in err.value.violations)

    def test_missing_arm_reported(self):
        tree = ab.preset_tree("magnetic_static")
        del tree["arm"]["b"]
        with pytest.raises(ab.ScenarioValidationError) as err:
            ab.scenario_from_tree(tree)
        assert any("arm.b" in v for v in err.value.violations)

    def test_explicit_gauge_sections(self):
        tree = ab.preset_tree("electric_pulsed")
        tree["gauge"] = {
            "drift": {"kind": "linear_time", "rate": 0.5},
            "poly": {"kind": "monomial", "terms": [[1, 0, 0, 1, 0.2]]},
            "bump": {"kind": "gaussian", "amplitude": 0.3, "center": [0.0, 0.0, 0.0],
                     "width": 1.0, "t_center": 2.0, "t_width": 1.0},
        }
        scn = ab.scenario_from_tree(tree)
        assert [g.label for g in scn.gauge_functions] == ["drift", "poly", "bump"]
        audit = ab.gauge_invariance_audit(scn.interferometer, scn.config,
                                          scn.gauge_functions)
        assert audit.max_deviation <= 1e-8

    def test_unknown_gauge_kind_reported(self):
        tree = ab.preset_tree("electric_pulsed")
        tree["gauge"] = {"odd": {"kind": "mystery"}}
        with pytest.raises(ab.ScenarioValidationError) as err:
            ab.scenario_from_tree(tree)
        assert any("gauge.odd" in v for v in err.value.violations)

    def test_render_round_trip(self):
        tree = ab.preset_tree("electrodynamic_ramp")
        scn_direct = ab.scenario_from_tree(tree)
        scn_text = ab.load_scenario(ab.render_toml(tree))
        assert scn_text.name == scn_direct.name
        assert np.array_equal(scn_text.interferometer.path_a.knots,
                              scn_direct.interferometer.path_a.knots)
        assert scn_text.strategies["around"].waypoints == scn_direct.strategies["around"].waypoints
        assert scn_text.expectations == scn_direct.expectations


class TestRun:
    def test_preset_reports_pass(self):
        for name in ab.preset_names():
            report = ab.run(ab.scenario_from_tree(ab.preset_tree(name)))
            assert report.passed, (name, report.expectations)

    def test_determinism_byte_identical(self):
        tree = ab.preset_tree("electric_pulsed")
        first = ab.run(ab.scenario_from_tree(tree)).to_json()
        second = ab.run(ab.scenario_from_tree(tree)).to_json()
        assert first == second

    def test_structure_failure_is_isolated(self):
        tree = ramp_tree()
        # ramp the flux before the packets reach the cages
        tree["solenoid"]["main"]["flux"] = [[0.0, 0.0], [0.4, 0.0], [0.9, 1.0], [4.0, 1.0]]
        tree["expect"] = []
        report = ab.run(ab.scenario_from_tree(tree))
        assert "skipped" in report.formulas["decomposition"]
        assert "dwell" in report.formulas["decomposition"]["skipped"]
        assert "skipped" in report.formulas["field_line"]
        assert "total" in report.formulas["potentials"]
        assert "total" in report.formulas["surface:direct"]

    def test_failed_expectation_fails_run(self):
        tree = ab.preset_tree("magnetic_static")
        tree["expect"][0]["total"] = 0.5
        report = ab.run(ab.scenario_from_tree(tree))
        assert not report.passed

    def test_requested_formulas_appear_exactly_once(self):
        tree = ab.preset_tree("electrodynamic_ramp")
        tree["expect"] = []
        report = ab.run(ab.scenario_from_tree(tree))
        keys = list(report.formulas)
        assert keys == ["potentials", "surface:direct", "surface:around",
                        "decomposition", "field_line"]

    def test_formula_subset(self):
        tree = ab.preset_tree("magnetic_static")
        tree["run"]["formulas"] = ["potentials"]
        tree["expect"] = [e for e in tree["expect"] if e["formula"] == "potentials"]
        report = ab.run(ab.scenario_from_tree(tree))
        assert list(report.formulas) == ["potentials"]
        assert report.passed


class TestDump:
    def test_fields_grid_row_count(self):
        scn = ab.scenario_from_tree(ab.preset_tree("magnetic_static"))
        text = ab.dump(scn, "fields", sampling="x=-2:2:10;y=-2:2:10;z=0;t=1.0")
        lines = text.strip().splitlines()
        assert lines[0] == "x,y,z,t,Ex,Ey,Ez,Bx,By,Bz,A_mag,V"
        assert len(lines) == 1 + 100

    def test_fields_axis_row_is_nan(self):
        scn = ab.scenario_from_tree(ab.preset_tree("magnetic_static"))
        text = ab.dump(scn, "fields", sampling="x=0.1;y=0.0;z=0;t=1.0")
        row = text.strip().splitlines()[1].split(",")
        assert row[10] == "nan"

    def test_mesh_dump_of_degenerate_mesh(self):
        knots = [[0, 0, 0, 0], [1, 1, 0, 1], [2, 0, 0, 2]]
        tree = {
            "run": {"name": "degenerate", "grid_n": 4, "grid_m": 3},
            "arm": {"a": {"knots": knots}, "b": {"knots": knots}},
        }
        scn = ab.scenario_from_tree(tree)
        text = ab.dump(scn, "mesh")
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        by_time = {}
        for t, s, x, y, z in rows:
            by_time.setdefault(t, set()).add((x, y, z))
        # every curve is a single point: the shared arm position
        assert all(len(points) == 1 for points in by_time.values())

    def test_worldlines_dump_echoes_knots(self):
        scn = ab.scenario_from_tree(ab.preset_tree("electric_pulsed"))
        text = ab.dump(scn, "worldlines")
        lines = text.strip().splitlines()
        n_knots = len(scn.interferometer.path_a.knots) + len(scn.interferometer.path_b.knots)
        assert len(lines) == 1 + n_knots
        first = lines[1].split(",")
        assert first[0] == "a"
        assert [float(v) for v in first[1:]] == list(scn.interferometer.path_a.knots[0])

    def test_bad_sampling_votes_error(self):
        scn = ab.scenario_from_tree(ab.preset_tree("magnetic_static"))
        with pytest.raises(ValueError):
            ab.dump(scn, "fields", sampling="x=1:2")
        with pytest.raises(ValueError):
            ab.dump(scn, "orbitals")


class TestCli:
    def test_presets_list_and_show(self, capsys):
        assert cli_main(["presets", "list"]) == 0
        out = capsys.readouterr().out
        assert "electrodynamic_ramp" in out and "magnetic_static" in out
        assert cli_main(["presets", "show", "magnetic_static"]) == 0
        shown = capsys.readouterr().out
        assert "[solenoid.main]" in shown
        assert cli_main(["presets", "show", "nope"]) == 1

    def test_run_preset_writes_report(self, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = cli_main(["run", "preset:magnetic_static", "--report", str(report_path)])
        assert code == 0
        payload = json.loads(report_path.read_text())
        assert payload["passed"] is True
        assert payload["scenario"] == "magnetic_static"
        capsys.readouterr()

    def test_run_config_file_with_overrides(self, tmp_path, capsys):
        config = tmp_path / "scn.toml"
        config.write_text(ab.render_toml(ab.preset_tree("magnetic_static")))
        code = cli_main(["run", str(config), "--grid", "24,65", "--q-over-hbar", "2.0"])
        out = capsys.readouterr().out
        payload = json.loads(out)
        # doubling q/hbar doubles the phase, so the declared expectation fails
        assert code == 1
        assert payload["grid"] == {"n_time": 24, "m_nodes": 65}
        assert math.isclose(payload["formulas"]["potentials"]["total"], 4 * math.pi,
                            rel_tol=1e-9)

    def test_run_invalid_config_exit_code(self, tmp_path, capsys):
        config = tmp_path / "bad.toml"
        config.write_text("[run]\nname = \"x\"\n")
        assert cli_main(["run", str(config)]) == 1
        assert "arm.a" in capsys.readouterr().err

    def test_dump_cli(self, tmp_path, capsys):
        out_csv = tmp_path / "fields.csv"
        code = cli_main(["dump", "preset:magnetic_static", "--what", "fields",
                         "--out", str(out_csv), "--sampling", "x=-1:1:5;y=-1:1:5;z=0;t=0.5"])
        assert code == 0
        assert len(out_csv.read_text().strip().splitlines()) == 26
        capsys.readouterr()

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "abphase", "presets", "list"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0
        assert "electric_pulsed" in proc.stdout
