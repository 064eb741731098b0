import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rr2d.array_model import (ArrayGeometry, Scenario, SnapshotBlock, Source, SourceKind,
                              analytical_covariance, generate_snapshots, sample_covariance,
                              signal_covariance, steering_vector)
from rr2d.errors import ConfigError, DomainError
from rr2d.matrix import is_hermitian, is_psd


def make_scenario(n=8, soi=10.0, snr_db=0.0, interferers=((-40.0, 20.0), (35.0, 20.0)), seed=3):
    geo = ArrayGeometry(n)
    s = Source(soi, 10 ** (snr_db / 10), SourceKind.SOI)
    ints = tuple(Source(t, 10 ** (p / 10)) for t, p in interferers)
    return Scenario(geo, s, ints, 1.0, seed)


class TestSteeringVector:
    def test_broadside_is_all_ones(self):
        np.testing.assert_allclose(steering_vector(ArrayGeometry(4, 0.5), 0.0), np.ones(4))

    def test_endfire_two_elements(self):
        np.testing.assert_allclose(steering_vector(ArrayGeometry(2, 0.5), 90.0), [1, -1], atol=1e-12)

    def test_thirty_degrees_quarter_turns(self):
        np.testing.assert_allclose(steering_vector(ArrayGeometry(3, 0.5), 30.0),
                                   [1, 1j, -1], atol=1e-12)

    @pytest.mark.parametrize("angle", [-90.0001, 91.0, np.nan])
    def test_out_of_range(self, angle):
        with pytest.raises(DomainError):
            steering_vector(ArrayGeometry(4), angle)

    @given(st.integers(1, 64), st.floats(0.05, 2.0), st.floats(-90, 90))
    def test_unit_modulus(self, n, d, theta):
        a = steering_vector(ArrayGeometry(n, d), theta)
        assert a.shape == (n,)
        assert np.max(np.abs(np.abs(a) - 1.0)) < 1e-15


class TestAnalyticalCovariance:
    def test_noise_only_is_identity(self):
        scen = Scenario(ArrayGeometry(5), Source(12.0, 1.0, SourceKind.SOI))
        np.testing.assert_allclose(analytical_covariance(scen, include_soi=False), np.eye(5))

    def test_broadside_interferer(self):
        scen = Scenario(ArrayGeometry(2), Source(40.0, 1.0, SourceKind.SOI), (Source(0.0, 1.0),))
        np.testing.assert_allclose(analytical_covariance(scen), np.eye(2) + np.ones((2, 2)))

    def test_trace(self):
        scen = make_scenario()
        p = sum(s.power for s in scen.interferers)
        assert np.trace(analytical_covariance(scen)).real == pytest.approx(8 * (1 + p))
        assert np.trace(analytical_covariance(scen, True)).real == pytest.approx(
            8 * (1 + p + scen.soi.power))

    def test_soi_difference_is_rank_one(self):
        scen = make_scenario(snr_db=7.0)
        diff = analytical_covariance(scen, True) - analytical_covariance(scen, False)
        assert np.max(np.abs(diff - signal_covariance(scen))) < 1e-12

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_hermitian_psd(self, seed):
        r = np.random.default_rng(seed)
        scen = make_scenario(n=int(r.integers(2, 20)), soi=r.uniform(-90, 90),
                             interferers=[(r.uniform(-90, 90), r.uniform(-10, 30))
                                          for _ in range(r.integers(0, 4))])
        for inc in (True, False):
            R = analytical_covariance(scen, inc)
            assert is_hermitian(R)
            assert is_psd(R)


class TestSnapshots:
    def test_noise_only_variance(self):
        scen = Scenario(ArrayGeometry(4), Source(0.0, 1.0, SourceKind.SOI))
        X = generate_snapshots(scen, 50_000, False, np.random.default_rng(0)).samples
        assert X.shape == (4, 50_000)
        np.testing.assert_allclose(np.mean(np.abs(X) ** 2, axis=1), 1.0, atol=0.03)
        assert abs(np.mean(X)) < 0.02

    def test_law_of_large_numbers(self):
        scen = make_scenario()
        for inc in (False, True):
            S = sample_covariance(generate_snapshots(scen, 100_000, inc, np.random.default_rng(1)))
            R = analytical_covariance(scen, inc)
            assert np.linalg.norm(S - R) / np.linalg.norm(R) < 0.05

    def test_deterministic_given_seed(self):
        scen = make_scenario()
        a = generate_snapshots(scen, 17, True, np.random.default_rng(9))
        b = generate_snapshots(scen, 17, True, np.random.default_rng(9))
        assert a.samples.tobytes() == b.samples.tobytes()
        assert a.includes_soi and a.n_snapshots == 17

    def test_zero_snapshots_rejected(self):
        with pytest.raises(DomainError):
            generate_snapshots(make_scenario(), 0)


class TestSampleCovariance:
    def test_single_column(self, rng):
        x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        np.testing.assert_allclose(sample_covariance(SnapshotBlock(x[:, None])), np.outer(x, x.conj()))

    def test_identity_columns(self):
        np.testing.assert_allclose(sample_covariance(SnapshotBlock(np.eye(6, dtype=complex))),
                                   np.eye(6) / 6)

    def test_concatenation_is_weighted_average(self, rng):
        X1 = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        X2 = rng.standard_normal((4, 7)) + 1j * rng.standard_normal((4, 7))
        whole = sample_covariance(SnapshotBlock(np.hstack([X1, X2])))
        parts = (3 * sample_covariance(SnapshotBlock(X1)) + 7 * sample_covariance(SnapshotBlock(X2))) / 10
        np.testing.assert_allclose(whole, parts, atol=1e-12)


class TestScenarioConfig:
    def test_round_trip(self):
        cfg = {"n_elements": 16, "spacing": 0.5, "soi_angle_deg": 12.5, "snr_db": -3.0,
               "interferer_angles_deg": [-20.0, 44.0], "inr_db": 20.0, "seed": 7}
        scen = Scenario.from_config(cfg)
        assert [s.power for s in scen.interferers] == pytest.approx([50.0, 50.0])
        again = Scenario.from_config(scen.to_config())
        assert again == scen

    def test_per_interferer_inr(self):
        scen = Scenario.from_config({"n_elements": 4, "soi_angle_deg": 0.0, "inr_db": 20.0,
                                     "interferer_angles_deg": [10, 20], "inr_mode": "per_interferer"})
        assert [s.power for s in scen.interferers] == pytest.approx([100.0, 100.0])

    @pytest.mark.parametrize("bad", [
        {"soi_angle_deg": 0.0},
        {"n_elements": 0, "soi_angle_deg": 0.0},
        {"n_elements": 4, "soi_angle_deg": 0.0, "spacing": -1},
        {"n_elements": 4, "soi_angle_deg": 0.0, "inr_mode": "bogus", "interferer_angles_deg": [1]},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            Scenario.from_config(bad)

    def test_angle_out_of_range(self):
        with pytest.raises(ConfigError):
            Scenario.from_config({"n_elements": 4, "soi_angle_deg": 120.0})
