"""Command-line interface: artifacts, overrides, resume, report, exit codes."""

import csv
import sys
import textwrap

import pytest

from hygopt.cli import main

FAST_TOML = """
[problem]
name = "sphere"
bits = 8

[run]
seed = 3
init_size = 20
n_explor = 20
n_exploit = 6
max_generations = 3
max_evaluations = 400

[harness]
k = 2
label = "demo"
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(FAST_TOML)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRunCommand:
    def test_artifacts_written(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", "--config", config_file,
                     "--out", str(out)]) == 0
        rows = read_csv(out / "demo_log.csv")
        assert rows[0] == ["eval_index", "generation", "stage", "origin",
                           "flagged", "cost", "p0", "p1"]
        assert rows[1][0] == "0"
        series = read_csv(out / "demo_best_series.csv")
        assert series[0] == ["generation", "best_cost"]
        result_txt = (out / "demo_result.txt").read_text()
        assert "termination:" in result_txt
        assert "best_phenotype:" in result_txt
        assert (out / "demo_effective_config.toml").exists()
        assert "demo:" in capsys.readouterr().out

    def test_two_runs_identical(self, config_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", config_file, "--out", str(a)])
        main(["run", "--config", config_file, "--out", str(b)])
        for name in ("demo_log.csv", "demo_best_series.csv",
                     "demo_result.txt", "demo_effective_config.toml"):
            assert (a / name).read_text() == (b / name).read_text()

    def test_seed_flag_changes_run(self, config_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", config_file, "--out", str(a)])
        main(["run", "--config", config_file, "--out", str(b),
              "--seed", "77"])
        assert (a / "demo_log.csv").read_text() != \
               (b / "demo_log.csv").read_text()
        assert 'seed = 77' in (b / "demo_effective_config.toml").read_text()

    def test_override_applied_to_effective_config(self, config_file,
                                                  tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", config_file, "--out", str(out),
                     "--override", "ga.tournament_size=3",
                     "--override", "run.init_method=lhs"]) == 0
        text = (out / "demo_effective_config.toml").read_text()
        assert "tournament_size = 3" in text
        assert 'init_method = "lhs"' in text

    def test_bad_override_exits_2(self, config_file, tmp_path, capsys):
        assert main(["run", "--config", config_file,
                     "--out", str(tmp_path),
                     "--override", "run.bogus=1"]) == 2
        assert "run.bogus" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "no.toml"),
                     "--out", str(tmp_path)]) == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_jobs_env_var(self, config_file, tmp_path, monkeypatch):
        monkeypatch.setenv("HYGO_OPT_JOBS", "1")
        out = tmp_path / "out"
        assert main(["run", "--config", config_file,
                     "--out", str(out)]) == 0
        assert "jobs = 1" in (out / "demo_effective_config.toml").read_text()

    def test_bad_jobs_env_var_exits_2(self, config_file, tmp_path,
                                      monkeypatch, capsys):
        monkeypatch.setenv("HYGO_OPT_JOBS", "many")
        assert main(["run", "--config", config_file,
                     "--out", str(tmp_path)]) == 2
        assert "HYGO_OPT_JOBS" in capsys.readouterr().err

    def test_failed_evaluator_exits_1_with_resume_hint(self, tmp_path,
                                                       capsys):
        stub = tmp_path / "dead.py"
        stub.write_text("import sys; sys.exit(1)\n")
        cfg = tmp_path / "ext.toml"
        cfg.write_text(textwrap.dedent(f"""
            [problem]
            name = "external"
            command = [{sys.executable!r}, {str(stub)!r}]
            lows = [0.0, 0.0]
            highs = [1.0, 1.0]
            timeout = 2.0
            retries = 0

            [run]
            init_size = 6
            n_explor = 6
            n_exploit = 3
            max_generations = 2
        """))
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path),
                     "--checkpoint-dir", str(tmp_path / "ck")])
        assert code == 1
        err = capsys.readouterr().err
        assert "error:" in err
        assert "hygopt resume" in err
        assert (tmp_path / "ck" / "run.ckpt").exists()


class TestKfoldCommand:
    def test_artifacts(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["kfold", "--config", config_file, "--out", str(out),
                     "--k", "3"]) == 0
        folds = read_csv(out / "demo_folds.csv")
        assert folds[0][0] == "fold"
        assert len(folds) == 4
        summary = read_csv(out / "demo_summary.csv")
        record = dict(zip(summary[0], summary[1]))
        assert record["label"] == "demo"
        assert record["k"] == "3"
        assert (out / "demo_summary.txt").exists()
        assert "convergence_pct" in capsys.readouterr().out

    def test_k_defaults_to_harness_section(self, config_file, tmp_path):
        out = tmp_path / "out"
        main(["kfold", "--config", config_file, "--out", str(out)])
        assert len(read_csv(out / "demo_folds.csv")) == 3   # header + k=2

    def test_invalid_k(self, config_file, tmp_path, capsys):
        assert main(["kfold", "--config", config_file,
                     "--out", str(tmp_path), "--k", "0"]) == 2
        assert "k must be" in capsys.readouterr().err


class TestResumeCommand:
    def test_resume_finished_run_is_noop(self, config_file, tmp_path,
                                         capsys):
        out = tmp_path / "out"
        ck = tmp_path / "ck"
        main(["run", "--config", config_file, "--out", str(out),
              "--checkpoint-dir", str(ck)])
        capsys.readouterr()
        assert main(["resume", str(ck / "demo.ckpt"),
                     "--out", str(out)]) == 0
        assert "already terminated" in capsys.readouterr().out

    def test_resume_missing_checkpoint_exits_1(self, tmp_path, capsys):
        assert main(["resume", str(tmp_path / "no.ckpt")]) == 1
        assert "cannot read checkpoint" in capsys.readouterr().err

    def test_resume_garbage_checkpoint_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"scrambled")
        assert main(["resume", str(bad)]) == 1
        assert "not a checkpoint" in capsys.readouterr().err


class TestReportCommand:
    def make_log(self, config_file, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", config_file, "--out", str(out)])
        return out / "demo_log.csv", out

    def test_series_and_scatter(self, config_file, tmp_path):
        log, out = self.make_log(config_file, tmp_path)
        rep = tmp_path / "rep"
        assert main(["report", str(log), "--out", str(rep)]) == 0
        series = read_csv(rep / "demo_log_series.csv")
        assert series[0] == ["generation", "best_cost"]
        costs = [float(r[1]) for r in series[1:]]
        assert costs == sorted(costs, reverse=True) or \
            all(b <= a for a, b in zip(costs, costs[1:]))
        scatter = read_csv(rep / "demo_log_scatter.csv")
        assert scatter[0] == ["eval_index", "cost", "origin"]
        assert len(scatter) == len(read_csv(log))

    def test_multi_log_comparison(self, config_file, tmp_path, capsys):
        log, out = self.make_log(config_file, tmp_path)
        out2 = tmp_path / "out2"
        main(["run", "--config", config_file, "--out", str(out2),
              "--seed", "9"])
        rep = tmp_path / "rep"
        assert main(["report", str(log), str(out2 / "demo_log.csv"),
                     "--out", str(rep)]) == 0
        rows = read_csv(rep / "comparison.csv")
        assert rows[0] == ["generation", "demo_log", "demo_log-2"]
        assert "comparison table" in capsys.readouterr().out

    def test_bad_log_names_file_and_line(self, config_file, tmp_path,
                                         capsys):
        log, _ = self.make_log(config_file, tmp_path)
        lines = log.read_text().splitlines()
        lines[2] = lines[2].replace(lines[2].split(",")[5], "not-a-number")
        broken = tmp_path / "broken_log.csv"
        broken.write_text("\n".join(lines) + "\n")
        assert main(["report", str(broken), "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "broken_log.csv:3" in err

    def test_not_a_log(self, tmp_path, capsys):
        junk = tmp_path / "junk.csv"
        junk.write_text("a,b\n1,2\n")
        assert main(["report", str(junk), "--out", str(tmp_path)]) == 2
        assert "not a run log" in capsys.readouterr().err
