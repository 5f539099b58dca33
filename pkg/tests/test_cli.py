"""Tests for the command-line interface."""

import json

import pytest

from olasim.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRings:
    def test_csv_to_stdout(self, capsys):
        code, out, _ = run_cli(
            ["rings", "--decode-threshold", "0.5", "--relay-power-density", "1",
             "--source-power", "1", "--epsilon", "0.6", "--levels", "3"],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "level,r_b,r_d"
        assert len(lines) == 4
        assert lines[1].startswith("1,")

    def test_death_appends_footer_row(self, capsys):
        code, out, _ = run_cli(
            ["rings", "--decode-threshold", "1", "--relay-power-density", "1",
             "--source-power", "3", "--epsilon", "0.3", "--levels", "200"],
            capsys,
        )
        assert code == EXIT_OK
        last = out.strip().splitlines()[-1]
        assert last.startswith("died_at,")
        level = int(last.split(",")[1])
        assert level > 2

    def test_unbounded_offset_spelled_inf(self, capsys):
        code, out, _ = run_cli(
            ["rings", "--decode-threshold", "0.5", "--relay-power-density", "1",
             "--source-power", "1", "--epsilon", "inf", "--levels", "2"],
            capsys,
        )
        assert code == EXIT_OK
        assert out.splitlines()[1].split(",")[1] == "0.0"


class TestOutputsAndManifest:
    def test_out_writes_file_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        code, stdout, _ = run_cli(
            ["--out", str(out), "mrtt", "--dr-grid", "0.5,1.0"], capsys
        )
        assert code == EXIT_OK
        assert stdout == ""
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "dr,mrtt_db"
        assert len(lines) == 3
        manifest = json.loads((tmp_path / "curve.csv.manifest.json").read_text())
        assert manifest["subcommand"] == "mrtt"
        assert manifest["request"]["dr_grid"] == [0.5, 1.0]
        assert manifest["outputs"] == [str(out)]
        assert "threads" not in json.dumps(manifest)

    def test_manifest_replays_identically(self, tmp_path, capsys):
        first = tmp_path / "a.json"
        args = ["--seed", "5", "optimize", "--kind", "type2", "--levels", "4",
                "--network-radius", "5", "--decode-threshold", "0.9",
                "--relay-power-density", "1", "--source-power", "4.31",
                "--generations", "15", "--population-size", "12"]
        code, _, _ = run_cli(args + ["--out", str(first)], capsys)
        assert code == EXIT_OK
        second = tmp_path / "b.json"
        code, _, _ = run_cli(
            ["--config", str(first) + ".manifest.json", "--seed", "5",
             "optimize", "--out", str(second)],
            capsys,
        )
        assert code == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_global_flags_accepted_after_subcommand(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        code, _, _ = run_cli(["mrtt", "--dr-grid", "1.0", "--out", str(out)], capsys)
        assert code == EXIT_OK
        assert out.exists()


class TestConfigHandling:
    def test_config_file_supplies_fields(self, tmp_path, capsys):
        cfg = tmp_path / "req.json"
        cfg.write_text(json.dumps({"dr_grid": [0.5, 0.9]}))
        code, out, _ = run_cli(["--config", str(cfg), "mrtt"], capsys)
        assert code == EXIT_OK
        assert len(out.strip().splitlines()) == 3

    def test_flag_overrides_config(self, tmp_path, capsys):
        cfg = tmp_path / "req.json"
        cfg.write_text(json.dumps({"dr_grid": [0.5, 0.9]}))
        code, out, _ = run_cli(
            ["--config", str(cfg), "mrtt", "--dr-grid", "1.0"], capsys
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("1.0,")

    def test_malformed_json_is_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        with pytest.raises(SystemExit):
            main(["--config", str(cfg), "mrtt", "--dr-grid", "1.0"])

    def test_bad_field_value_is_config_error(self, capsys):
        code, _, err = run_cli(
            ["rings", "--decode-threshold", "-2", "--levels", "3"], capsys
        )
        assert code == EXIT_CONFIG
        assert "config error" in err

    def test_bad_grid_spec_is_config_error(self, capsys):
        code, _, err = run_cli(["mrtt", "--dr-grid", "0.1:0.9"], capsys)
        assert code == EXIT_CONFIG
        assert "config error" in err


class TestExitCodes:
    def test_infeasible_is_exit_3(self, capsys):
        code, _, err = run_cli(
            ["--seed", "1", "optimize", "--kind", "type1", "--levels", "4",
             "--decode-threshold", "2.3", "--relay-power-density", "1",
             "--source-power", "3", "--generations", "3", "--population-size", "8"],
            capsys,
        )
        assert code == EXIT_INFEASIBLE
        assert "infeasible" in err

    def test_unwritable_output_is_exit_4(self, capsys):
        code, _, err = run_cli(
            ["--out", "/nonexistent-dir/x.csv", "mrtt", "--dr-grid", "1.0"], capsys
        )
        assert code == EXIT_IO
        assert "i/o error" in err


class TestSweepCommands:
    def test_fes_csv(self, capsys):
        code, out, _ = run_cli(
            ["fes", "--dr-grid", "0.5", "--level-counts", "50,100",
             "--epsilon", "min"],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "dr,levels,fes"
        assert len(lines) == 3
        fes_100 = float(lines[2].split(",")[2])
        assert fes_100 == pytest.approx(0.2492574200940545, abs=1e-9)

    def test_units_csv_matches_bundled_rows(self, capsys):
        code, out, _ = run_cli(["units"], capsys)
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "example,pt_dbm,density_per_m2,sens_dbm,d_nn_m,dr"
        assert len(lines) == 6
        dr1 = float(lines[1].split(",")[5])
        assert dr1 == pytest.approx(1.5, abs=5e-3)

    def test_units_custom_row_requires_all_flags(self, capsys):
        code, _, err = run_cli(["units", "--pt-dbm", "-56"], capsys)
        assert code == EXIT_CONFIG
        assert "--sens-dbm" in err

    def test_units_custom_row(self, capsys):
        code, out, _ = run_cli(
            ["units", "--pt-dbm", "-56", "--sens-dbm", "-90",
             "--density-per-m2", "2.65"],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("custom,")

    def test_psb_csv_and_seed_column(self, tmp_path, capsys):
        out = tmp_path / "psb.csv"
        code, _, _ = run_cli(
            ["--seed", "9", "--threads", "2", "--out", str(out),
             "psb", "--density", "2", "--area-radius", "5",
             "--rtt-grid-db", "2.0", "--variants", "2", "--trials", "8"],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "rtt_db,variant,psb,halfwidth,trials,seed"
        assert lines[1].split(",")[4:] == ["8", "9"]

    def test_psb_threads_do_not_change_bytes(self, tmp_path, capsys):
        outs = []
        for threads, name in [("1", "t1.csv"), ("8", "t8.csv")]:
            out = tmp_path / name
            code, _, _ = run_cli(
                ["--seed", "3", "--threads", threads, "--out", str(out),
                 "psb", "--density", "2", "--area-radius", "5",
                 "--rtt-grid-db", "1.0,3.0", "--variants", "2", "--trials", "10"],
                capsys,
            )
            assert code == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_optimize_json_document(self, tmp_path, capsys):
        out = tmp_path / "opt.json"
        code, _, _ = run_cli(
            ["--seed", "2", "--out", str(out), "optimize", "--kind", "type2",
             "--levels", "4", "--network-radius", "5", "--decode-threshold", "0.9",
             "--relay-power-density", "1", "--source-power", "4.31",
             "--generations", "10", "--population-size", "12"],
            capsys,
        )
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert set(doc) == {"schedule", "energy", "rings", "fes_profile", "trace"}
        assert len(doc["schedule"]) == 4
        manifest = json.loads((tmp_path / "opt.json.manifest.json").read_text())
        assert manifest["seed"] == 2
        assert manifest["request"]["optimizer"]["rng_seed"] == 2
