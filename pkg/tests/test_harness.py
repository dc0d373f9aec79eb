import numpy as np
import pytest

from papradmm.cli import main
from papradmm.config import ConfigError, ExperimentConfig
from papradmm import experiments


class TestConfig:
    def test_defaults_validate(self):
        cfg = ExperimentConfig().validate()
        assert cfg.n_data + cfg.n_free == cfg.n_carriers

    def test_per_solver_penalty_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.resolved_penalties("direct") == (100.0, None)
        assert cfg.resolved_penalties("relax") == (300.0, 100.0)
        explicit = cfg.with_overrides(rho=500.0, rho_tilde=50.0)
        assert explicit.resolved_penalties("relax") == (500.0, 50.0)

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment line\n"
            "n_symbols = 100\n"
            "beta = 0.3\n"
            "ebn0_db = 6, 8, 10\n"
            "solver = relax\n"
            "pa_enabled = off\n"
        )
        cfg = ExperimentConfig.from_file(str(path))
        assert cfg.n_symbols == 100
        assert cfg.beta == 0.3
        assert cfg.ebn0_db == (6.0, 8.0, 10.0)
        assert cfg.solver == "relax"
        assert cfg.pa_enabled is False

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("no_such_knob = 1\n")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(str(path))

    def test_inconsistent_counts_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(n_data=50)

    def test_relax_penalty_hypothesis_checked(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(solver="relax", rho=120.0, rho_tilde=100.0)

    def test_bad_value_types_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(n_symbols="many")


class TestDeterminism:
    def test_fixed_seed_reruns_identical(self):
        cfg = ExperimentConfig().with_overrides(n_symbols=50, iterations=3)
        rows1 = experiments.run_table2(cfg)
        rows2 = experiments.run_table2(cfg)
        assert rows1 == rows2

    def test_worker_count_does_not_change_results(self):
        base = ExperimentConfig().with_overrides(n_symbols=64, iterations=3)
        threaded = base.with_overrides(workers=4)
        assert experiments.run_table2(base) == experiments.run_table2(threaded)

    def test_different_seed_changes_results(self):
        cfg1 = ExperimentConfig().with_overrides(n_symbols=50, iterations=3)
        cfg2 = cfg1.with_overrides(seed=99)
        assert experiments.run_table2(cfg1) != experiments.run_table2(cfg2)


class TestCli:
    def test_table2_writes_csv(self, tmp_path, capsys):
        code = main(
            ["table2", "--symbols", "40", "--iters", "2", "--out", str(tmp_path)]
        )
        assert code == 0
        text = (tmp_path / "table2.csv").read_text()
        assert text.splitlines()[0] == "solver,beta,evm_db"
        assert len(text.splitlines()) == 7
        assert "EVM" in capsys.readouterr().out

    def test_csv_byte_identical_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["ccdf", "--symbols", "30", "--out", str(a)]) == 0
        assert main(["ccdf", "--symbols", "30", "--out", str(b)]) == 0
        assert (a / "ccdf.csv").read_bytes() == (b / "ccdf.csv").read_bytes()

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("solver = sorcery\n")
        code = main(["table2", "--config", str(bad), "--out", str(tmp_path)])
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_numerical_failure_exit_code(self, tmp_path, capsys, monkeypatch):
        from papradmm.subproblems import BisectionError
        from papradmm import cli

        def explode(cfg):
            raise BisectionError("bracketing lost")

        monkeypatch.setattr(cli.experiments, "run_table2", explode)
        code = main(["table2", "--out", str(tmp_path)])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_cli_override_beats_config_file(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("n_symbols = 10000\n")
        code = main(
            [
                "ber",
                "--config", str(cfg_file),
                "--symbols", "20",
                "--iters", "2",
                "--out", str(tmp_path),
            ]
        )
        assert code == 0
        lines = (tmp_path / "ber.csv").read_text().splitlines()
        # 4 solvers x default ebn0 grid, plus header; 20 symbols per point
        assert lines[1].endswith(",4160")


@pytest.fixture(scope="module")
def curves():
    cfg = ExperimentConfig().with_overrides(n_symbols=400, seed=11)
    rows = experiments.run_ccdf(cfg)
    out = {}
    for solver, t, p in rows[1:]:
        out.setdefault(solver, {})[t] = p
    return out


class TestCcdfCurves:
    def test_unprocessed_papr_tail(self, curves):
        # raw 64-carrier symbols exceed 8 dB with probability in the
        # percent range; every one of them exceeds the 4 dB target
        assert 0.01 < curves["original"][8.0] < 0.5
        assert curves["original"][4.0] == 1.0

    def test_original_dominates_processed_curves(self, curves):
        thresholds = sorted(curves["original"])
        for solver in ("direct", "relax", "rcf"):
            for t in thresholds:
                assert curves["original"][t] >= curves[solver][t] - 1e-12

    def test_rcf_curve_sits_between(self, curves):
        # slower cut-off than the engines, far sharper than no processing
        assert curves["rcf"][4.2] > curves["direct"][4.2]
        assert curves["rcf"][4.2] > curves["relax"][4.2]
        assert curves["rcf"][5.0] < 0.01 < curves["original"][5.0]

    def test_engines_cut_off_at_target(self, curves):
        assert curves["direct"][4.05] == 0.0
        assert curves["relax"][4.05] == 0.0


class TestBerDriver:
    def test_ideal_qpsk_matches_closed_form(self):
        from scipy import special

        cfg = ExperimentConfig().with_overrides(
            n_symbols=400, constellation="qpsk", pa_enabled=False,
            ebn0_db="4,6", seed=5,
        )
        rows = experiments.run_ber(cfg, solvers=("none",))
        for _, _, ebn0, value, bits in rows[1:]:
            p = 0.5 * special.erfc(np.sqrt(10 ** (ebn0 / 10.0)))
            sigma = np.sqrt(p * (1 - p) / bits)
            assert abs(value - p) < 3.0 * sigma

    def test_multipath_degrades_every_solver(self):
        cfg = ExperimentConfig().with_overrides(n_symbols=200, ebn0_db="8", seed=6)
        awgn_ber = {r[0]: r[3] for r in experiments.run_ber(cfg)[1:]}
        multi = cfg.with_overrides(channel="multipath")
        multi_ber = {r[0]: r[3] for r in experiments.run_ber(multi)[1:]}
        for solver in ("none", "direct", "relax", "rcf"):
            assert multi_ber[solver] > awgn_ber[solver]


class TestBench:
    def test_loglog_fit_on_synthetic_data(self):
        sizes = np.array([256.0, 1024.0, 4096.0])
        times = 3e-9 * sizes * np.log2(sizes)
        r_sq, slope = experiments.loglog_fit(sizes, times)
        assert r_sq == pytest.approx(1.0)
        assert slope == pytest.approx(1.0)
