import csv
import io
import math

import numpy as np
import pytest

from sbmlss import __version__
from sbmlss.cli import EXIT_CONFIG, EXIT_OK, main
from sbmlss.errors import ConfigError
from sbmlss.harness import (
    SEED_ENV_VAR,
    ExperimentConfig,
    ResultRow,
    config_hash,
    default_seed,
    identity_checks,
    load_config,
    parse_config_text,
    run_calibrate,
    run_identities,
    run_oracle_compare,
    run_power_curve,
    simulate_traces,
    write_csv,
)
from sbmlss.graph_models import ModelParams, read_edgelist
from sbmlss.statistics import optimal_power


def small_config(**kw):
    base = dict(experiment="calibrate", n=80, p_av=0.2, reps=12, seed=3, k_n=5, t_grid=(0.6,), threads=1)
    base.update(kw)
    return ExperimentConfig(**base)


def csv_text(rows, config, columns=None):
    buf = io.StringIO()
    write_csv(rows, buf, config, columns)
    return buf.getvalue()


class TestConfig:
    def test_parse(self):
        d = parse_config_text("n = 100  # nodes\nt_grid = 0.2, 0.4\nk_n = auto\n\nassortative = false\n")
        assert d == {"n": 100, "t_grid": (0.2, 0.4), "k_n": None, "assortative": False}

    @pytest.mark.parametrize("text", ["n 100", "bogus = 1", "n = ten", "assortative = maybe"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    @pytest.mark.parametrize(
        "kw",
        [{"reps": 0}, {"p_av": 1.0}, {"experiment": "nope"}, {"statistics": ("Lx",)}, {"experiment": "power", "kappa": 1}, {"centering": "x"}],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            small_config(**kw)

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("n = 100\nreps = 7\n")
        cfg = load_config(path, {"reps": "9", "alpha": None})
        assert (cfg.n, cfg.reps, cfg.alpha) == (100, 9, 0.05)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")

    def test_seed_env(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "41")
        assert default_seed() == 41
        assert load_config().seed == 41
        monkeypatch.setenv(SEED_ENV_VAR, "x")
        with pytest.raises(ConfigError):
            default_seed()
        monkeypatch.delenv(SEED_ENV_VAR)
        assert default_seed() == 0

    def test_hash_ignores_output_and_threads(self):
        a = small_config()
        assert config_hash(a) == config_hash(small_config(threads=2, output_path="x.csv"))
        assert config_hash(a) != config_hash(small_config(seed=4))


class TestSimulation:
    def test_threads_do_not_change_traces(self):
        params = ModelParams(n=60, kappa=2, p=0.3, q=0.1)
        a = simulate_traces(params, 10, 5, 6, threads=1)
        b = simulate_traces(params, 10, 5, 6, threads=2)
        assert np.array_equal(a.traces, b.traces) and np.array_equal(a.p_hat, b.p_hat)

    def test_degenerate_rows_are_nan(self):
        batch = simulate_traces(ModelParams(n=3, kappa=1, p=0.05), 30, 0, 4)
        assert (~batch.valid).any()
        assert np.isnan(batch.traces[~batch.valid]).all()

    def test_calibrate_csv_bit_identical(self):
        a = csv_text(run_calibrate(small_config(threads=1)), small_config(threads=1))
        b = csv_text(run_calibrate(small_config(threads=2)), small_config(threads=2))
        assert a == b

    def test_calibrate_rows(self):
        cfg = small_config()
        rows = run_calibrate(cfg)
        assert [r.statistic for r in rows] == list(cfg.statistics)
        for r in rows:
            assert r.reps_used == cfg.reps and r.theoretical_power == cfg.alpha
            assert r.mc_stderr == pytest.approx(math.sqrt(r.empirical_power * (1 - r.empirical_power) / r.reps_used))

    def test_calibrate_refuses_t_zero(self):
        with pytest.raises(ConfigError):
            run_calibrate(small_config(statistics=("La",), t_grid=(0.0,)))

    def test_power_marks_rows(self):
        cfg = small_config(experiment="power", statistics=("Lo", "adaptive_odd"), t_grid=(0.5, 1.2, 5.0), reps=6)
        rows = run_power_curve(cfg)
        status = {(r.t, r.statistic): r.status for r in rows}
        assert status[(0.5, "Lo")] == "ok"
        assert status[(1.2, "Lo")] == "t_out_of_domain"
        assert status[(1.2, "adaptive_odd")] == "ok"
        assert status[(5.0, "Lo")] == "infeasible"
        ok = [r for r in rows if r.t == 0.5 and r.statistic == "Lo"][0]
        assert ok.theoretical_power == pytest.approx(optimal_power(0.05, 0.5, odd_only=True))

    def test_stderr_example(self):
        row = ResultRow("calibrate", "Lo", 0.8, 0.05, 0.05, math.sqrt(0.05 * 0.95 / 2000), 2000)
        assert row.mc_stderr == pytest.approx(0.0049, abs=1e-4)


class TestOracle:
    def test_k3_exact(self):
        res = run_oracle_compare(small_config(experiment="oracle", n=15, reps=5, oracle_ks=(3,), centering="known"))
        assert max(abs(r["diff"]) for r in res.rows) < 1e-9
        assert res.summary[0]["reps"] == 5

    def test_degenerate_skipped(self):
        res = run_oracle_compare(small_config(experiment="oracle", n=4, p_av=0.02, reps=5, oracle_ks=(3,)))
        assert res.skipped and all("degenerate" in reason for _, reason in res.skipped)

    def test_guard(self):
        with pytest.raises(ConfigError):
            run_oracle_compare(small_config(experiment="oracle", n=200, oracle_ks=(5,)))

    @pytest.mark.slow
    def test_k5_correlation(self):
        res = run_oracle_compare(small_config(experiment="oracle", n=25, p_av=0.6, reps=100, oracle_ks=(5,), centering="known"))
        assert res.summary[0]["correlation"] > 0.9


class TestIdentities:
    def test_all_pass(self):
        assert all(ok for _, ok, _ in identity_checks())

    def test_printout(self):
        buf = io.StringIO()
        assert run_identities(buf) == 0
        out = buf.getvalue()
        assert "alpha1(3) = 4" in out and "value 4" in out
        assert "FAIL" not in out


class TestCsv:
    def test_provenance_columns(self):
        cfg = small_config()
        rows = list(csv.reader(io.StringIO(csv_text(run_calibrate(cfg), cfg))))
        header = rows[0]
        assert header[-3:] == ["config_hash", "seed", "version"]
        assert "wall_time_seconds" not in header
        for r in rows[1:]:
            assert r[-3:] == [config_hash(cfg), "3", __version__]

    def test_wall_time_opt_in(self):
        cfg = small_config(record_wall_time=True, statistics=("Lo",))
        header = csv_text(run_calibrate(cfg), cfg).splitlines()[0]
        assert "wall_time_seconds" in header


class TestCli:
    def test_generate_and_test(self, tmp_path, capsys):
        graph = tmp_path / "g.txt"
        labels = tmp_path / "l.txt"
        assert main(["generate", "--n", "120", "--t", "0.8", "--p-av", "0.2", "--kappa", "2", "--seed", "1", "--out", str(graph), "--labels-out", str(labels)]) == EXIT_OK
        assert read_edgelist(graph).n == 120
        assert len(labels.read_text().split()) == 120
        spec_path = tmp_path / "spec.csv"
        assert main(["test", str(graph), "--stat", "Lo", "--t", "0.8", "--k", "5", "--dump-spectrum", str(spec_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert '"kind": "Lo"' in out
        assert len(spec_path.read_text().splitlines()) == 121
        assert main(["test", str(graph), "--csv", "--k", "5"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("kind,n,p_hat")

    def test_identities(self, capsys):
        assert main(["identities"]) == EXIT_OK
        assert "PASS" in capsys.readouterr().out

    def test_calibrate_to_file(self, tmp_path, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "12")
        out = tmp_path / "cal.csv"
        args = ["calibrate", "--n", "60", "--p-av", "0.2", "--reps", "5", "--k", "5", "--t-grid", "0.5", "--threads", "1", "--out", str(out)]
        assert main(args) == EXIT_OK
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 4 and rows[0]["seed"] == "12"

    def test_power_plot(self, tmp_path):
        pytest.importorskip("matplotlib")
        svg = tmp_path / "p.svg"
        args = ["power", "--n", "60", "--p-av", "0.2", "--reps", "4", "--k", "5", "--t-grid", "0.3,0.6", "--stats", "Lo", "--threads", "1", "--out", str(tmp_path / "p.csv"), "--plot", str(svg)]
        assert main(args) == EXIT_OK
        assert svg.read_text().lstrip().startswith("<?xml")

    def test_oracle(self, capsys):
        assert main(["oracle", "--n", "12", "--reps", "3", "--centering", "known", "--threads", "1"]) == EXIT_OK
        captured = capsys.readouterr()
        assert captured.out.startswith("rep,k,cycle_bruteforce,cycle_from_lss,diff")
        assert "k=3:" in captured.err

    @pytest.mark.parametrize(
        "argv",
        [
            ["calibrate", "--reps", "0"],
            ["calibrate", "--config", "/nonexistent/file.cfg"],
            ["test", "/nonexistent/graph.txt"],
            ["generate", "--n", "10", "--out", "/tmp/x.txt"],
            ["calibrate", "--stats", "La", "--t-grid", "0"],
        ],
    )
    def test_config_errors(self, argv, capsys):
        assert main(argv) == EXIT_CONFIG
        assert "error" in capsys.readouterr().err
