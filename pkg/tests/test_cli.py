import filecmp
import subprocess
import sys

import pytest

from postrate import cli, report
from postrate.errors import ConfigError, RegistryMiss


def run_cli(*argv):
    return cli.main(list(argv))


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors


class TestExitCodes:
    def test_identity_suite_ok(self, tmp_path):
        assert run_cli("identity-suite", "--out", str(tmp_path)) == 0
        recs = report.read_jsonl(tmp_path / "identities.jsonl")
        assert len(recs) >= 40 and all(r["verdict"] == "pass" for r in recs)
        assert (tmp_path / "summary.txt").read_text().startswith("checks:")

    def test_precondition_is_config_error(self, tmp_path, capsys):
        assert run_cli("verify", "--check", "prop2", "--delta", "0.5", "--out", str(tmp_path)) == 2
        assert "delta must lie in (0, 1/2)" in capsys.readouterr().err

    def test_failing_check_exits_one(self, tmp_path, capsys):
        # a zero slope tolerance cannot be met by a fitted slope
        code = run_cli("contract", "--family", "gauss-seq", "--n-grid", "64,256", "--replicates", "2",
                       "--slope-tol", "0", "--out", str(tmp_path))
        assert code == 1
        assert "failing records" in capsys.readouterr().err

    def test_unknown_experiment(self, tmp_path):
        assert run_cli("verify", "--check", "prop2", "--experiment", "nope", "--out", str(tmp_path)) == 2

    def test_bad_grid(self, tmp_path):
        assert run_cli("contract", "--n-grid", "64,32", "--out", str(tmp_path)) == 2

    def test_r_sweep_record(self, tmp_path):
        code = run_cli("contract", "--family", "gauss-seq", "--n-grid", "64,512,4096", "--replicates", "3",
                       "--r-sweep", "2,4,8", "--out", str(tmp_path))
        sweep = [r for r in report.read_jsonl(tmp_path / "rate_checks.jsonl") if "r_passes" in r]
        assert len(sweep) == 1 and sweep[0]["rs"] == [2.0, 4.0, 8.0]
        assert sweep[0]["smallest_r"] == 2.0
        assert code == 0 and run_cli("report", "--out", str(tmp_path)) == 0

    def test_bad_r_sweep(self, tmp_path):
        assert run_cli("contract", "--r-sweep", "2,x", "--out", str(tmp_path)) == 2

    def test_report_missing_dir(self, tmp_path):
        assert run_cli("report", "--out", str(tmp_path / "absent")) == 2

    def test_console_script(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "postrate.cli", "entropy", "--out", str(tmp_path)],
                             capture_output=True, text=True)
        assert res.returncode == 0 and "pass" in res.stdout


class TestConfig:
    def write(self, tmp_path, text):
        path = tmp_path / "run.ini"
        path.write_text(text)
        return str(path)

    def test_sections(self, tmp_path):
        path = self.write(tmp_path, "[run]\nseed = 7\nmc_budget = 500\ncheck = prop3\n"
                                    "[constants]\neps = 0.25\nbeta = 0.3\n[grid]\nn_grid = 10, 20\n")
        args = cli._parser().parse_args(["verify", "--config", path])
        cfg = cli.build_config(args)
        assert (cfg.seed, cfg.mc_budget, cfg.check) == (7, 500, "prop3")
        assert cfg.constants == {"eps": 0.25, "beta": 0.3} and cfg.n_grid == [10, 20]

    def test_flags_win(self, tmp_path):
        path = self.write(tmp_path, "[run]\nseed = 7\n[constants]\neps = 0.25\n")
        args = cli._parser().parse_args(["verify", "--config", path, "--seed", "3", "--eps", "0.1"])
        cfg = cli.build_config(args)
        assert cfg.seed == 3 and cfg.constants["eps"] == 0.1

    def test_unknown_section_and_key(self, tmp_path):
        for text in ("[extra]\na = 1\n", "[run]\ncolour = red\n"):
            args = cli._parser().parse_args(["verify", "--config", self.write(tmp_path, text)])
            with pytest.raises(ConfigError):
                cli.build_config(args)

    def test_jobs_environment(self, tmp_path, monkeypatch):
        path = self.write(tmp_path, "[run]\njobs = 2\n")
        monkeypatch.setenv("POSTRATE_JOBS", "3")
        assert cli.build_config(cli._parser().parse_args(["verify", "--config", path])).jobs == 3
        args = cli._parser().parse_args(["verify", "--config", path, "--jobs", "5"])
        assert cli.build_config(args).jobs == 5
        monkeypatch.setenv("POSTRATE_JOBS", "many")
        with pytest.raises(ConfigError):
            cli.build_config(cli._parser().parse_args(["verify"]))

    def test_run_config_validation(self):
        with pytest.raises(ConfigError):
            cli.RunConfig("verify", jobs=0)
        with pytest.raises(RegistryMiss):
            cli.RunConfig("contract", family="nope")


class TestDeterminism:
    def test_jobs_do_not_change_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("verify", "--mc-budget", "1000", "--jobs", "1", "--out", str(a)) == 0
        assert run_cli("verify", "--mc-budget", "1000", "--jobs", "4", "--out", str(b)) == 0
        assert same_tree(a, b)

    def test_contract_and_report(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        # on a fixed five-point grid the tail mass at r = 1 is not monotone in n, so the trend record fails
        argv = ("contract", "--family", "bernoulli-grid", "--replicates", "3", "--r", "1")
        assert run_cli(*argv, "--out", str(a)) == 1
        assert run_cli(*argv, "--out", str(b)) == 1
        assert same_tree(a, b)
        assert (a / "rate_bernoulli-grid-b1.svg").exists()
        assert run_cli("report", "--out", str(a)) == 1
        assert len(report.read_curves_csv(a / "curves.csv")) == 1
