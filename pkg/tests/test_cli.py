import json
from pathlib import Path

import pytest

from liouville_lab.cli import main


def read(outdir):
    return (
        json.loads((outdir / "results.json").read_text()),
        (outdir / "results.csv").read_bytes(),
        json.loads((outdir / "manifest.json").read_text()),
    )


class TestCli:
    def test_null_liouville_passes(self, tmp_path):
        out = tmp_path / "null"
        rc = main(["verify-liouville", "--count", "10000", "--seed", "7",
                   "--nonlinearity", "none", "--out", str(out)])
        assert rc == 0
        results, _, manifest = read(out)
        names = {v["name"]: v for v in results["verdicts"]}
        assert names["max_abs_z"]["status"] == "pass"
        assert names["max_abs_z"]["measured"] <= names["max_abs_z"]["tolerance"]
        assert "timestamp" in manifest and "config_hash" in manifest

    def test_bit_identical_reruns(self, tmp_path):
        args = ["counterexample", "--count", "4000", "--seed", "9", "--t-end", "10"]
        rc1 = main(args + ["--out", str(tmp_path / "a")])
        rc2 = main(args + ["--out", str(tmp_path / "b")])
        assert rc1 == rc2 == 0
        _, csv_a, _ = read(tmp_path / "a")
        _, csv_b, _ = read(tmp_path / "b")
        assert csv_a == csv_b
        ra = (tmp_path / "a" / "results.json").read_bytes()
        rb = (tmp_path / "b" / "results.json").read_bytes()
        assert ra == rb

    def test_thread_flag_does_not_change_results(self, tmp_path):
        base = ["global-fraction", "--flow", "counterexample", "--count", "3000",
                "--seed", "11", "--t-end", "10"]
        main(base + ["--threads", "1", "--out", str(tmp_path / "t1")])
        main(base + ["--threads", "4", "--out", str(tmp_path / "t4")])
        assert (tmp_path / "t1" / "results.csv").read_bytes() == \
               (tmp_path / "t4" / "results.csv").read_bytes()

    def test_invalid_config_exit_2(self, tmp_path):
        cfgfile = tmp_path / "bad.toml"
        cfgfile.write_text("[model]\ndimension = 7\n")
        rc = main(["sample", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_config_parse_error_exit_2(self, tmp_path, capsys):
        cfgfile = tmp_path / "broken.toml"
        cfgfile.write_text("count = [unterminated\n")
        rc = main(["sample", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "line" in err  # parser reports the offending position

    def test_toml_config_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "cfg.toml"
        cfgfile.write_text(
            "experiment = 'sample'\n[model]\ncutoff = 4\n[ensemble]\ncount = 500\nseed = 3\n"
        )
        out = tmp_path / "s"
        rc = main(["sample", "--config", str(cfgfile), "--count", "800", "--out", str(out)])
        assert rc == 0
        _, _, manifest = read(out)
        assert manifest["config"]["count"] == 800  # flag wins over file
        assert manifest["config"]["cutoff"] == 4
        assert (out / "ensemble" / "weights.csv").exists()

    def test_json_config_mirror(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"experiment": "sample", "cutoff": 3, "count": 400}))
        rc = main(["sample", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
        assert rc == 0

    def test_counterexample_statistics(self, tmp_path):
        out = tmp_path / "ce"
        rc = main(["counterexample", "--count", "20000", "--seed", "5",
                   "--t-end", "10", "--out", str(out)])
        assert rc == 0
        results, csv_bytes, _ = read(out)
        names = {v["name"]: v for v in results["verdicts"]}
        assert names["fraction_abs_error"]["status"] == "pass"
        assert names["bracket_width"]["status"] == "pass"
        assert b"blowup_fraction" in csv_bytes

    def test_evolve_strang_mass_verdict(self, tmp_path):
        out = tmp_path / "ev"
        rc = main(["evolve", "--flow", "strang", "--nonlinearity", "nls_power",
                   "--cutoff", "8", "--t-end", "1.0", "--dt", "0.001",
                   "--seed", "2", "--out", str(out)])
        assert rc == 0
        results, _, _ = read(out)
        names = {v["name"]: v for v in results["verdicts"]}
        assert names["l2_mass_relative_drift"]["status"] == "pass"
        assert (out / "trajectory.csv").exists()

    def test_mollify_runs(self, tmp_path):
        rc = main(["mollify", "--count", "2000", "--seed", "3",
                   "--out", str(tmp_path / "m")])
        assert rc == 0

    def test_verdict_failure_gives_nonzero_exit(self, tmp_path):
        # an impossible tolerance must make the run fail loudly
        cfgfile = tmp_path / "cfg.toml"
        cfgfile.write_text(
            "experiment = 'verify-liouville'\ncount = 2000\nz_max = 1e-9\n"
        )
        rc = main(["verify-liouville", "--config", str(cfgfile),
                   "--out", str(tmp_path / "f")])
        assert rc == 1
