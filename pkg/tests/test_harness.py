import numpy as np
import pytest

from rr2d.beamformers import Method
from rr2d.errors import ConfigError, DomainError
from rr2d.harness import (CSV_HEADER, ExperimentConfig, aggregate, collect_trials, draw_scenario,
                          input_sinr_db, load_config, mvdr_phase_objective, records_to_csv,
                          run_hessian_experiment, run_sweep, run_trial, trial_seed, worker_count)
from rr2d.manifold import hessian_spectrum_at
from rr2d.plotting import emit_plot_data

SMALL = dict(n_elements=8, n_digital=2, k_s=4, snr_db_start=-10, snr_db_stop=10,
             snr_db_step=10, n_trials=3)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        grid = cfg.snr_grid()
        assert len(grid) == 31 and grid[0] == -30 and grid[-1] == 30
        assert cfg.dbf_samples() == cfg.hybrid_samples_per_element() == 64

    @pytest.mark.parametrize("kw", [
        {"snr_db_step": 0}, {"snr_db_stop": -40}, {"n_trials": 0}, {"n_digital": 3},
        {"k_s": 3}, {"inr_mode": "x"}, {"digital_rule": "x"}, {"methods": ()},
        {"readout": "nope"},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)

    def test_from_mapping(self):
        cfg = ExperimentConfig.from_mapping({"n_elements": 8, "k_s": 4, "soi_angle_deg": 3.0,
                                             "snr_db_range": {"start": -4, "stop": 4, "step": 4},
                                             "methods": ["D_MVDR"]})
        assert cfg.snr_grid() == [-4, 0, 4]
        assert cfg.methods == (Method.D_MVDR,)

    @pytest.mark.parametrize("mapping", [{"bogus": 1}, {"methods": ["NOPE"]},
                                         {"snr_db_range": [1, 2]}])
    def test_from_mapping_errors(self, mapping):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping(mapping)

    def test_load_yaml_and_errors(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("n_elements: 8\nk_s: 4\n")
        assert load_config(p) == {"n_elements": 8, "k_s": 4}
        p.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(p)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.yaml")


def test_worker_count_env_cap(monkeypatch):
    monkeypatch.setenv("RR2D_THREADS", "1")
    assert worker_count(8) == 1
    monkeypatch.setenv("RR2D_THREADS", "x")
    with pytest.raises(ConfigError):
        worker_count(2)


class TestInputBaseline:
    def test_per_interferer(self):
        cfg = ExperimentConfig(inr_mode="per_interferer")
        assert input_sinr_db(cfg, 0.0) == pytest.approx(10 * np.log10(1 / 201), abs=1e-12)
        assert input_sinr_db(cfg, 0.0) == pytest.approx(-23.03, abs=0.005)

    def test_aggregate(self):
        assert input_sinr_db(ExperimentConfig(), 0.0) == pytest.approx(10 * np.log10(1 / 101))


def test_draw_scenario_respects_separation():
    cfg = ExperimentConfig(min_separation_deg=30.0, n_interferers=3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        scen = draw_scenario(cfg, 0.0, rng)
        assert all(abs(s.angle - scen.soi.angle) >= 30.0 for s in scen.interferers)
        assert sum(s.power for s in scen.interferers) == pytest.approx(100.0)


class TestTrials:
    def test_deterministic(self):
        cfg = small()
        for m in Method:
            a = run_trial(cfg, 0.0, m, trial_seed(7, 0, 1))
            b = run_trial(cfg, 0.0, m, trial_seed(7, 0, 1))
            assert a == b

    def test_full_covariance_methods_beat_input(self):
        # A single element is feasible for both, so neither can do worse.
        cfg = small()
        for t in range(10):
            for m in (Method.D_MVDR, Method.PDBF_MVDR):
                assert run_trial(cfg, 0.0, m, trial_seed(1, 0, t)) >= input_sinr_db(cfg, 0.0) - 1e-9

    def test_mean_of_every_method_beats_input(self):
        cfg = small(snr_db_start=-10, snr_db_stop=-10, n_trials=30)
        table = collect_trials(cfg, workers=1)
        for m in Method:
            assert table[(0, m.value)].mean() > input_sinr_db(cfg, -10.0)

    def test_oracle_bounds_every_method(self):
        cfg = small()
        for t in range(5):
            ss = trial_seed(3, 0, t)
            best = run_trial(cfg, 0.0, Method.D_MVDR, ss)
            for m in Method:
                assert run_trial(cfg, 0.0, m, ss) <= best + 1e-9

    def test_collect_shapes(self):
        cfg = small(methods=("D_MVDR", "PDBF_MVDR"))
        table = collect_trials(cfg, workers=1)
        assert set(table) == {(i, m) for i in range(3) for m in ("D_MVDR", "PDBF_MVDR")}
        assert all(v.shape == (3,) for v in table.values())


class TestSweepOutput:
    def test_csv_byte_stable_across_workers(self, tmp_path, monkeypatch):
        monkeypatch.delenv("RR2D_THREADS", raising=False)
        cfg = small()
        run_sweep(cfg, tmp_path / "a", workers=1)
        run_sweep(cfg, tmp_path / "b", workers=2)
        a = (tmp_path / "a" / "sinr.csv").read_bytes()
        assert a == (tmp_path / "b" / "sinr.csv").read_bytes()
        lines = a.decode().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 1 + 3 * 7

    def test_records_include_input(self):
        cfg = small(methods=("D_MVDR",))
        recs = aggregate(cfg, collect_trials(cfg, workers=1))
        assert [r.method for r in recs[:2]] == ["INPUT", "D_MVDR"]
        assert recs[0].mean_sinr_db == pytest.approx(input_sinr_db(cfg, -10))
        assert records_to_csv(recs).count("\n") == 7


class TestPlotting:
    def test_empty_raises_and_writes_nothing(self, tmp_path):
        with pytest.raises(DomainError):
            emit_plot_data([], tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_single_method_two_points(self, tmp_path):
        cfg = small(snr_db_stop=0, methods=("D_MVDR",))
        recs = aggregate(cfg, collect_trials(cfg, workers=1))
        svg, table = emit_plot_data(recs, tmp_path)
        text = svg.read_text()
        line = [ln for ln in text.splitlines() if 'id="series-D_MVDR"' in ln][0]
        assert len(line.split('points="')[1].split('"')[0].split()) == 2
        assert 'id="series-INPUT"' in text and 'stroke-dasharray' in text
        assert table.read_text().startswith("  snr_db")

    def test_all_methods_have_series(self, tmp_path):
        cfg = small(snr_db_start=0, snr_db_stop=0, n_trials=1)
        svg, _ = emit_plot_data(aggregate(cfg, collect_trials(cfg, workers=1)), tmp_path)
        text = svg.read_text()
        for m in Method:
            assert text.count(f'id="series-{m.value}"') == 1


class TestHessian:
    def test_convex_control(self):
        res = run_hessian_experiment(small(), 2, 2, objective=lambda scen, part: lambda p: float(p @ p))
        assert res.fraction_negative == 0.0 and res.fraction_positive == 1.0
        assert res.eigenvalues.size == 2 * 2 * 8

    def test_halved_step_is_stable(self):
        cfg = small()
        scen = draw_scenario(cfg, 0.0, np.random.default_rng(4))
        f = mvdr_phase_objective(scen, cfg.partition)
        phi = np.random.default_rng(5).uniform(0, 2 * np.pi, 8)
        l1 = hessian_spectrum_at(f, phi, 1e-4)
        l2 = hessian_spectrum_at(f, phi, 5e-5)
        assert np.linalg.norm(l1 - l2) <= 0.01 * np.linalg.norm(l1)

    def test_files(self, tmp_path):
        res = run_hessian_experiment(small(), 2, 1, out_dir=tmp_path, objective="mse")
        assert (tmp_path / "hessian_eigenvalues.txt").read_text().count("\n") == res.eigenvalues.size
        assert (tmp_path / "hessian_histogram.csv").exists()
        assert "fraction_negative" in (tmp_path / "hessian_summary.txt").read_text()
