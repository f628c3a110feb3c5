import numpy as np
import pytest

from blimpsim.wind import FanConfig, WindField, mean_wind, preset, preset_names

REF_HEAD = np.array([4.0, 0.0, 1.5])  # 2 m in front of the headwind fan
REF_CROSS = np.array([3.0, 0.0, 1.5])  # 2 m in front of the crosswind fan


class TestMeanField:
    def test_fan_mouth(self):
        fan = preset("headwind_strong")
        v = mean_wind(fan, np.array(fan.position))
        assert np.allclose(v, fan.core_speed * np.array(fan.axis), atol=1e-15)

    def test_upstream_is_calm(self):
        fan = preset("headwind_strong")
        assert np.allclose(mean_wind(fan, np.array([7.0, 0.0, 1.5])), 0.0)

    def test_reference_point_calibration(self):
        # The scenario intensities at the 2 m reference point.
        assert np.linalg.norm(mean_wind(preset("none"), REF_HEAD)) == 0.0
        assert np.linalg.norm(mean_wind(preset("headwind_light"), REF_HEAD)) \
            == pytest.approx(0.5, abs=1e-12)
        assert np.linalg.norm(mean_wind(preset("headwind_strong"), REF_HEAD)) \
            == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(mean_wind(preset("crosswind_light"), REF_CROSS)) \
            == pytest.approx(0.5, abs=1e-12)
        assert np.linalg.norm(mean_wind(preset("crosswind_strong"), REF_CROSS)) \
            == pytest.approx(1.0, abs=1e-12)

    def test_monotone_decay_downstream_and_radially(self):
        fan = preset("headwind_strong")
        speeds = [np.linalg.norm(mean_wind(fan, [6.0 - s, 0.0, 1.5]))
                  for s in np.linspace(0, 5, 30)]
        assert all(a >= b - 1e-12 for a, b in zip(speeds, speeds[1:]))
        radial = [np.linalg.norm(mean_wind(fan, [4.0, r, 1.5]))
                  for r in np.linspace(0, 2, 20)]
        assert all(a >= b - 1e-12 for a, b in zip(radial, radial[1:]))


class TestSampling:
    def test_zero_intensity_equals_mean(self):
        fan = preset("headwind_strong", turbulence_intensity=0.0)
        wf = WindField(fan, seed=3)
        p = REF_HEAD
        for k in range(20):
            assert np.array_equal(wf.sample(p, 0.025 * k), mean_wind(fan, p))

    def test_long_run_average(self):
        fan = preset("headwind_strong")
        wf = WindField(fan, seed=9)
        p = REF_HEAD
        dt = 0.025
        T = 60.0
        samples = np.array([wf.sample(p, k * dt) for k in range(int(T / dt))])
        sigma = fan.turbulence_intensity * 1.0  # full ramp at the ref point
        stderr = sigma * np.sqrt(2.0 * fan.noise_correlation_time / T)
        err = np.abs(samples.mean(axis=0) - mean_wind(fan, p))
        assert np.max(err) < 3.0 * stderr

    def test_seed_determinism(self):
        fan = preset("crosswind_strong")
        a = WindField(fan, seed=11)
        b = WindField(fan, seed=11)
        p = np.array([3.0, -0.5, 1.5])
        sa = [a.sample(p, 0.025 * k) for k in range(50)]
        sb = [b.sample(p, 0.025 * k) for k in range(50)]
        assert all(np.array_equal(x, y) for x, y in zip(sa, sb))

    def test_monotone_time_required(self):
        wf = WindField(preset("headwind_strong"), seed=1)
        wf.sample(REF_HEAD, 1.0)
        with pytest.raises(ValueError):
            wf.sample(REF_HEAD, 0.5)

    def test_calm_preset_samples_zero(self):
        wf = WindField(preset("none"), seed=5)
        assert np.array_equal(wf.sample(np.zeros(3), 0.0), np.zeros(3))


class TestPresets:
    def test_names(self):
        assert preset_names() == ["crosswind_light", "crosswind_strong",
                                  "headwind_light", "headwind_strong", "none"]

    def test_unknown_rejected(self):
        with pytest.raises(KeyError):
            preset("sidewind")

    def test_override(self):
        fan = preset("headwind_strong", core_speed=2.0)
        assert fan.core_speed == 2.0

    def test_fan_validation(self):
        with pytest.raises(ValueError):
            FanConfig(position=(0, 0, 0), axis=(1, 1, 0), core_speed=1.0,
                      decay_length=1.0, half_width=0.3)
        with pytest.raises(ValueError):
            FanConfig(position=(0, 0, 0), axis=(1, 0, 0), core_speed=-1.0,
                      decay_length=1.0, half_width=0.3)
