"""Contract tests for the command-line front end.

The CLI is bookkeeping over library calls that have their own oracle
tests, so the checks here are about the interface: exit codes, config
resolution and rejection, artifact layout under out/<run_id>/, record
traceability, byte-level determinism, and the additive figure path.
"""

import json
import subprocess
import sys

import pytest

from radwave.cli import DEFAULTS, main, resolve_config
from radwave.experiments import load_record


def run_cli(args, out_dir, capsys=None):
    code = main(list(args) + ["--out", str(out_dir)])
    if capsys is None:
        return code, None, None
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def only_run_dir(out_dir):
    entries = [p for p in out_dir.iterdir() if p.is_dir()]
    assert len(entries) == 1
    return entries[0]


class TestUsage:
    def test_help_exits_zero(self, capsys):
        assert main(["lifespan", "--help"]) == 0
        assert "--config" in capsys.readouterr().out

    def test_top_level_help(self, capsys):
        assert main(["--help"]) == 0
        out = capsys.readouterr().out
        for name in ("solve", "lifespan", "sweep-kss"):
            assert name in out

    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["lifespan", "--bogus"]) == 2
        assert "usage:" in capsys.readouterr().err

    def test_unknown_command_is_usage_error(self, capsys):
        assert main(["transmogrify"]) == 2

    def test_missing_command_is_usage_error(self, capsys):
        assert main([]) == 2


class TestConfigResolution:
    def test_defaults_cover_every_command(self):
        for command in DEFAULTS:
            config = resolve_config(command, None, [])
            assert config == DEFAULTS[command]
            assert config is not DEFAULTS[command]

    def test_set_overrides_one_entry(self):
        config = resolve_config("norms", None, ["norms.mu=0.7"])
        assert config["norms"]["mu"] == "0.7"
        assert DEFAULTS["norms"]["norms"]["mu"] == "0.5"

    def test_unknown_section_rejected(self):
        with pytest.raises(ValueError, match="unknown config entry"):
            resolve_config("norms", None, ["nope.mu=0.7"])

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config entry"):
            resolve_config("norms", None, ["norms.nope=0.7"])

    def test_malformed_set_rejected(self):
        with pytest.raises(ValueError, match="SECTION.KEY=VALUE"):
            resolve_config("norms", None, ["norms.mu"])

    def test_config_file_feeds_values(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[norms]\nmu = 0.35\n")
        config = resolve_config("norms", str(ini), [])
        assert config["norms"]["mu"] == "0.35"

    def test_set_wins_over_config_file(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[norms]\nmu = 0.35\n")
        config = resolve_config("norms", str(ini), ["norms.mu=0.6"])
        assert config["norms"]["mu"] == "0.6"

    def test_missing_config_file_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="cannot read config file"):
            resolve_config("norms", str(tmp_path / "absent.ini"), [])

    def test_config_file_with_unknown_key_exits_2(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[norms]\nwibble = 1\n")
        code = main(["norms", "--config", str(ini), "--out", str(tmp_path / "out")])
        assert code == 2
        assert "unknown config entry" in capsys.readouterr().err


class TestValidationExits:
    def test_mu_outside_window_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(["norms", "--set", "norms.mu=1.5"],
                               tmp_path, capsys)
        assert code == 2
        assert "(0, 1)" in err

    def test_non_numeric_value_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(["norms", "--set", "norms.mu=huge"],
                               tmp_path, capsys)
        assert code == 2
        assert "must be a number" in err

    def test_unknown_model_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(["lifespan", "--set", "model.name=cubic"],
                               tmp_path, capsys)
        assert code == 2
        assert "utt-square or quasilinear" in err

    def test_inadmissible_case_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(
            ["verify-inequality", "--set", "case.id=trace", "--set", "case.s=0.4"],
            tmp_path, capsys)
        assert code == 2
        assert "admissible window" in err


class TestArtifacts:
    def test_norms_run_layout(self, tmp_path):
        code, _, _ = run_cli(["norms", "--set", "grid.points=256"], tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        for name in ("record.json", "norms.json", "norms.csv"):
            assert (run_dir / name).exists()
        record = load_record(str(run_dir / "record.json"))
        assert record.run_id == run_dir.name
        kinds = {kind for kind, _ in record.outputs}
        assert all(key.split(".")[0] in kinds for key in record.metrics)

    def test_solve_run_layout(self, tmp_path):
        code, _, _ = run_cli(
            ["solve", "--set", "grid.points=256", "--set", "solve.T=1.0"],
            tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        for name in ("final_profile.csv", "energy.csv", "norms.json"):
            assert (run_dir / name).exists()
        record = load_record(str(run_dir / "record.json"))
        assert record.metrics["energy.scheme_drift"] < 1e-6

    def test_iterate_run_layout(self, tmp_path):
        code, _, _ = run_cli(
            ["iterate", "--set", "grid.points=256", "--set", "iterate.K=5",
             "--set", "iterate.T=0.5"],
            tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        for name in ("stages.csv", "differences.csv", "report.json"):
            assert (run_dir / name).exists()
        doc = json.loads((run_dir / "report.json").read_text())
        assert doc["convergent"] is True

    def test_verify_identity_run_layout(self, tmp_path):
        code, _, _ = run_cli(
            ["verify-identity", "--set", "ladder.points=64,128",
             "--set", "ladder.steps=16,32"],
            tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        assert (run_dir / "residuals.csv").exists()
        signs = json.loads((run_dir / "signs.json").read_text())
        assert signs["all_passed"] is True
        record = load_record(str(run_dir / "record.json"))
        assert record.metrics["residuals.order"] > 1.0

    def test_verify_inequality_run_layout(self, tmp_path):
        code, _, _ = run_cli(
            ["verify-inequality", "--set", "family.count=6",
             "--set", "grid.points=512", "--set", "sweep.lambdas=1.0,2.0,4.0"],
            tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        for name in ("ratios.csv", "constant.json", "sweep.csv"):
            assert (run_dir / name).exists()
        doc = json.loads((run_dir / "constant.json").read_text())
        assert doc["value"] > 0.0

    def test_sweep_kss_run_layout(self, tmp_path):
        code, _, _ = run_cli(
            ["sweep-kss", "--set", "family.count=2", "--set", "grid.points=128",
             "--set", "kss.horizons=0.25,0.5"],
            tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        assert (run_dir / "kss.csv").exists()
        doc = json.loads((run_dir / "summary.json").read_text())
        assert doc["excluded_zero"] == 0
        assert doc["skipped"] == []

    def test_lifespan_blowup_exits_4_with_record(self, tmp_path):
        code, _, _ = run_cli(
            ["lifespan", "--set", "grid.ladder=256,512",
             "--set", "lifespan.eps=1.3", "--set", "lifespan.t_cap=6.0"],
            tmp_path)
        assert code == 4
        run_dir = only_run_dir(tmp_path)
        for name in ("record.json", "measurements.csv", "ladder.csv"):
            assert (run_dir / name).exists()
        lines = (run_dir / "measurements.csv").read_text().splitlines()
        assert lines[0] == "eps,t_star,confirmed,refinement_gap,status,notes"
        assert ",amplitude," in lines[1]

    def test_lifespan_all_censored_exits_0(self, tmp_path):
        code, _, _ = run_cli(
            ["lifespan", "--set", "grid.ladder=256,512",
             "--set", "lifespan.eps=0.2", "--set", "lifespan.t_cap=2.0"],
            tmp_path)
        assert code == 0
        run_dir = only_run_dir(tmp_path)
        assert "censored" in (run_dir / "measurements.csv").read_text()


class TestDeterminism:
    def test_identical_configs_reproduce_bytes(self, tmp_path):
        args = ["lifespan", "--set", "grid.ladder=256,512",
                "--set", "lifespan.eps=1.3", "--set", "lifespan.t_cap=6.0"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(args, out1)[0] == run_cli(args, out2)[0]
        dir1, dir2 = only_run_dir(out1), only_run_dir(out2)
        assert dir1.name == dir2.name
        for name in ("measurements.csv", "ladder.csv"):
            assert (dir1 / name).read_bytes() == (dir2 / name).read_bytes()
        rec1 = load_record(str(dir1 / "record.json"))
        rec2 = load_record(str(dir2 / "record.json"))
        assert rec1.run_id == rec2.run_id
        assert rec1.metrics == rec2.metrics

    def test_different_configs_get_different_run_ids(self, tmp_path):
        base = ["norms", "--set", "grid.points=128"]
        run_cli(base, tmp_path / "a")
        run_cli(base + ["--set", "norms.mu=0.7"], tmp_path / "b")
        assert only_run_dir(tmp_path / "a").name != only_run_dir(tmp_path / "b").name


class TestFigures:
    def test_figures_are_additive(self, tmp_path):
        args = ["norms", "--set", "grid.points=128"]
        run_cli(args, tmp_path / "plain")
        run_cli(args + ["--figures"], tmp_path / "figs")
        plain, figs = only_run_dir(tmp_path / "plain"), only_run_dir(tmp_path / "figs")
        assert plain.name == figs.name
        assert not (plain / "norms.png").exists()
        assert (figs / "norms.png").exists()
        assert (plain / "norms.csv").read_bytes() == (figs / "norms.csv").read_bytes()
        record = load_record(str(figs / "record.json"))
        assert ("figure", "norms.png") in record.outputs


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "radwave.cli", "norms",
             "--set", "grid.points=128", "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert (tmp_path / proc.stdout.strip().split("/")[-1] / "record.json").exists()
