"""Scenario runner, report emission, builtin families, CLI."""

import json
import math
import os

import numpy as np
import pytest

from bergmanlab.cli import main as cli_main
from bergmanlab.experiments import (ConfigError, ExperimentConfig,
                                    builtin_family, emit_report,
                                    fit_growth_exponent, report_csv,
                                    report_from_json, run_scenario)
from bergmanlab.geometry import BallPoint, ball_volume
from bergmanlab.measures import (AtomicMeasure, GridDensityMeasure,
                                 RadialPowerMeasure, ball_average,
                                 measure_to_json)
from bergmanlab.quadrature import QuadratureScheme

FAST_SCHEME = QuadratureScheme(panels=16, nodes_per_panel=10, angular=128)


def tiny_config(**overrides):
    base = dict(scenario="toeplitz-summing",
                measures=(AtomicMeasure.single(0j),),
                degrees=(32,), deltas=(0.5,), quadrature=FAST_SCHEME)
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_scenario_validation(self):
        with pytest.raises(ConfigError):
            tiny_config(scenario="nope").validate()
        with pytest.raises(ConfigError):
            tiny_config(p=1.0).validate()
        with pytest.raises(ConfigError):
            tiny_config(scenario="carleson-summing", q=3.0).validate()
        with pytest.raises(ConfigError):
            tiny_config(deltas=(0.0,)).validate()

    def test_json_round_trip_with_family_expansion(self):
        obj = {
            "scenario": "toeplitz-summing",
            "measures": [{"family": "radial-powers", "params": {"ts": [1, 2]}},
                         {"type": "atomic",
                          "atoms": [{"z": [0.3, 0.0], "mass": 1.0}]}],
            "p": 2.0, "r": 2.0, "deltas": [0.5], "degrees": [16],
            "quadrature": {"panels": 8, "nodes": 6, "angular": 32},
            "seed": 5,
        }
        cfg = ExperimentConfig.from_json(obj)
        assert len(cfg.measures) == 3
        back = ExperimentConfig.from_json(cfg.to_json())
        assert back == cfg

    def test_bad_json_raises_config_error(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json({"scenario": "toeplitz-summing",
                                        "measures": [{"type": "what"}]})


class TestBuiltinFamilies:
    def test_radial_powers(self):
        fam = builtin_family("radial-powers", {"ts": [1, 2, 3]})
        assert [m.t for m in fam] == [1.0, 2.0, 3.0]

    def test_single_atoms_zero_radius(self):
        fam = builtin_family("single-atoms", {"radii": [0]})
        assert fam == [AtomicMeasure.single(0j)]

    def test_annuli(self):
        fam = builtin_family("annuli", {"bounds": [(0.2, 0.4)], "height": 2.0})
        assert fam[0].density(np.asarray([0.3 + 0j]))[0] == 2.0

    def test_unknown_family(self):
        with pytest.raises(ConfigError):
            builtin_family("mystery")

    def test_lattice_atoms_average_oracle(self):
        # with masses w_k on a separated lattice and an averaging radius
        # below half the separation, each ball sees only its own atom, so
        # the averaged density at a_k is exactly w_k over the ball volume
        fam = builtin_family("lattice-atoms",
                             {"delta": 1.0, "region": 1.5,
                              "weight_exponent": 2.0})
        mu = fam[0]
        for pt, mass in mu.atoms[:6]:
            got = ball_average(mu, 0.4, pt)
            assert got * ball_volume(pt, 0.4) == pytest.approx(mass,
                                                               rel=1e-9)


class TestScenarios:
    def test_toeplitz_atom_cell_closed_forms(self):
        rep = run_scenario(tiny_config())
        cell = rep.cells[0]
        assert cell.lhs_lower == pytest.approx(1.0, rel=1e-12)
        assert cell.rhs == pytest.approx(1 / math.sqrt(3.0), rel=1e-6)
        assert cell.ratio_low == pytest.approx(math.sqrt(3.0), rel=1e-6)
        assert "lower:exact-hilbert" in cell.flags

    def test_toeplitz_divergent_measure_agrees(self):
        rep = run_scenario(tiny_config(
            measures=(RadialPowerMeasure(0.0),)))
        cell = rep.cells[0]
        assert math.isinf(cell.rhs) and math.isinf(cell.lhs_upper)
        assert "agree-infinite" in cell.flags
        assert rep.summary["divergence_mismatches"] == 0

    def test_empty_measures_valid_summary(self):
        rep = run_scenario(tiny_config(measures=()))
        assert rep.cells == ()
        assert rep.summary["cells"] == 0

    def test_carleson_cell(self):
        cfg = tiny_config(scenario="carleson-summing",
                          measures=(AtomicMeasure.single(0j),))
        rep = run_scenario(cfg)
        cell = rep.cells[0]
        assert cell.lhs_lower == pytest.approx(1.0)   # embedding of delta_0
        assert math.isfinite(cell.rhs) and cell.rhs > 0
        assert cell.exponent == 1.0                   # s(2,2)

    def test_lemma24_cell_shape(self, lattice_one_r4):
        cfg = tiny_config(scenario="lemma24-equivalence",
                          measures=(RadialPowerMeasure(1.0),),
                          deltas=(1.0,), region_radius=4.0,
                          quadrature=QuadratureScheme())
        rep = run_scenario(cfg)
        cell = rep.cells[0]
        assert cell.ratio_low is not None and cell.ratio_high is not None
        assert cell.ratio_low <= 1.0 <= cell.ratio_high
        assert "lattice-size" in cell.flags

    def test_berezin_identity_scenario(self):
        mu = AtomicMeasure(((BallPoint.of(0.4), 1.0),
                            (BallPoint.of(-0.2 + 0.5j), 0.5)))
        cfg = tiny_config(scenario="berezin-identity", measures=(mu,))
        rep = run_scenario(cfg)
        assert rep.cells[0].lhs_lower < 1e-9
        assert rep.cells[0].flags == "ok"

    def test_forelli_rudin_scenario_cells(self):
        cfg = tiny_config(scenario="forelli-rudin-asymptotics", measures=())
        rep = run_scenario(cfg, threads=2)
        assert len(rep.cells) == 3
        labels = {c.measure for c in rep.cells}
        assert labels == {"S(0,4)", "S(1,4)", "S(0,3)"}

    def test_per_cell_error_recorded_not_raised(self):
        bad = AtomicMeasure(((BallPoint.of([0.1, 0.1]), 1.0),))  # n = 2
        rep = run_scenario(tiny_config(measures=(bad,)))
        assert rep.summary["errors"] == 1
        assert rep.cells[0].flags.startswith("error:")

    def test_threaded_matches_serial(self):
        cfg = tiny_config(measures=(AtomicMeasure.single(0j),
                                    RadialPowerMeasure(1.0),
                                    RadialPowerMeasure(2.0)))
        serial = run_scenario(cfg, threads=1)
        threaded = run_scenario(cfg, threads=3)
        assert report_csv(serial) == report_csv(threaded)


class TestFitGrowthExponent:
    def test_exact_power_law(self):
        radii = (0.9, 0.99, 0.999)
        vals = [(1 - r * r) ** -2.5 for r in radii]
        assert fit_growth_exponent(vals, radii) == pytest.approx(2.5,
                                                                 rel=1e-12)


class TestEmission:
    def test_empty_report_has_header_only(self, tmp_path):
        rep = run_scenario(tiny_config(measures=()))
        paths = emit_report(rep, str(tmp_path), ("json", "csv", "plotdata"))
        csv_path = [p for p in paths if p.endswith(".csv")][0]
        lines = open(csv_path).read().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("scenario,measure,p,q,r,exponent,D,delta")

    def test_one_cell_one_row(self, tmp_path):
        rep = run_scenario(tiny_config())
        emit_report(rep, str(tmp_path), ("csv",))
        lines = open(tmp_path / "report.csv").read().splitlines()
        assert len(lines) == 2

    def test_json_round_trip_record_for_record(self, tmp_path):
        rep = run_scenario(tiny_config(measures=(AtomicMeasure.single(0j),
                                                 RadialPowerMeasure(0.0))))
        emit_report(rep, str(tmp_path), ("json",))
        blob = json.loads(open(tmp_path / "report.json").read())
        back = report_from_json(blob)
        assert back.cells == rep.cells
        assert back.summary == rep.summary
        assert back.config == rep.config

    def test_determinism_byte_identical(self, tmp_path):
        cfg = tiny_config(measures=(AtomicMeasure.single(0j),
                                    RadialPowerMeasure(1.0)), seed=9)
        a, b = tmp_path / "a", tmp_path / "b"
        emit_report(run_scenario(cfg), str(a), ("json", "csv"))
        emit_report(run_scenario(cfg), str(b), ("json", "csv"))
        assert open(a / "report.csv", "rb").read() \
            == open(b / "report.csv", "rb").read()
        assert open(a / "report.json", "rb").read() \
            == open(b / "report.json", "rb").read()

    def test_plotdata_series(self, tmp_path):
        cfg = tiny_config(measures=(RadialPowerMeasure(1.0),
                                    RadialPowerMeasure(2.0)),
                          degrees=(16, 32))
        paths = emit_report(run_scenario(cfg), str(tmp_path), ("plotdata",))
        dat = [p for p in paths if p.endswith(".dat")]
        assert dat
        for p in dat:
            for line in open(p).read().splitlines():
                assert len(line.split()) == 2


class TestCli:
    def test_lattice_subcommand(self, tmp_path):
        rc = cli_main(["--out", str(tmp_path), "lattice", "--delta", "1.0",
                       "--region", "1.0"])
        assert rc == 0
        blob = json.loads(open(tmp_path / "lattice.json").read())
        assert blob["separation"] == 0.5
        assert blob["points"]

    def test_family_subcommand(self, capsys):
        rc = cli_main(["family", "--name", "radial-powers", "--ts", "1,2"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out) == 2

    def test_verify_runs_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "scenario": "toeplitz-summing",
            "measures": [measure_to_json(AtomicMeasure.single(0j))],
            "degrees": [16], "deltas": [0.5],
            "quadrature": {"panels": 8, "nodes": 6, "angular": 32},
        }))
        rc = cli_main(["--out", str(tmp_path / "out"), "verify",
                       "--config", str(cfg_path)])
        assert rc == 0
        assert (tmp_path / "out" / "report.csv").exists()

    def test_verify_bad_config_exits_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"scenario": "bogus", "measures": []}))
        rc = cli_main(["verify", "--config", str(cfg_path)])
        assert rc == 2
        assert "configuration error" in capsys.readouterr().err

    def test_verify_missing_file_exits_2(self, tmp_path):
        assert cli_main(["verify", "--config",
                         str(tmp_path / "nope.json")]) == 2

    def test_strict_propagates_cell_errors(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "scenario": "toeplitz-summing",
            "measures": [{"type": "atomic",
                          "atoms": [{"z": [0.1, 0.0, 0.1, 0.0],
                                     "mass": 1.0}]}],
            "degrees": [8], "deltas": [0.5],
            "quadrature": {"panels": 8, "nodes": 6, "angular": 32},
        }))
        rc = cli_main(["--strict", "--out", str(tmp_path / "o1"), "verify",
                       "--config", str(cfg_path)])
        assert rc == 3
        rc = cli_main(["--out", str(tmp_path / "o2"), "verify",
                       "--config", str(cfg_path)])
        assert rc == 0

    def test_toeplitz_dump_matrix(self, tmp_path):
        rc = cli_main(["--out", str(tmp_path), "toeplitz", "--degrees", "8",
                       "--deltas", "0.5", "--family", "single-atoms",
                       "--dump-matrix", str(tmp_path / "mats")])
        assert rc == 0
        files = sorted(os.listdir(tmp_path / "mats"))
        assert files and files[0].endswith(".npz")
        data = np.load(tmp_path / "mats" / files[0])
        assert data["matrix"].shape == (9, 9)
