import math

import numpy as np
import pytest

from aselcap.channel import (ChannelInstance, FadingParams, LargeScale, SystemConfig,
                             compose_channel, draw_channel, draw_fading,
                             path_loss_linear, point_in_hexagon, sample_positions,
                             trial_rng)
from aselcap.errors import DomainError

# Mean distance to the center of a uniform point in a unit-circumradius
# flat-top hexagon, from a 4000 x 4000 midpoint grid over the bounding box.
HEX_MEAN_DISTANCE = 0.6079863969201557
# 10^(-(92.5 + 20 log10 4) / 10)
BETA_1KM_4GHZ = 3.51463328243968e-11


class TestSystemConfig:
    def test_rho(self):
        cfg = SystemConfig(pu_dbm=10.0, sigma2_dbm=-100.0)
        assert cfg.rho == pytest.approx(1e11)

    @pytest.mark.parametrize('kw', [dict(k=5, l=4), dict(l=200, n=128), dict(n=0),
                                    dict(seed=-1), dict(seed=2 ** 64),
                                    dict(min_distance_m=1000.0)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            SystemConfig(**kw)

    def test_fading_params(self):
        assert FadingParams.broadcast(2, 3).m == (2.0, 2.0, 2.0)
        with pytest.raises(DomainError):
            FadingParams((1.0, 0.4))
        with pytest.raises(DomainError):
            FadingParams.broadcast([1, 2], 3)


class TestHexagon:
    def test_examples(self):
        assert point_in_hexagon((0, 0), 1000)
        assert not point_in_hexagon((1000, 1000), 1000)
        assert point_in_hexagon((999, 0), 1000)
        assert not point_in_hexagon((0, 900), 1000)   # flat top edge at y = 866
        assert point_in_hexagon((0, 866), 1000)

    def test_sampling_deterministic(self):
        a = sample_positions(4, 1000.0, 0.0, trial_rng(5, 0))
        b = sample_positions(4, 1000.0, 0.0, trial_rng(5, 0))
        np.testing.assert_array_equal(a, b)

    def test_containment(self):
        d = sample_positions(5000, 1000.0, 50.0, trial_rng(1, 1))
        assert d.shape == (5000,)
        assert np.all((d >= 50.0) & (d <= 1000.0))

    def test_mean_distance_matches_grid_oracle(self):
        d = sample_positions(100_000, 1000.0, 0.0, trial_rng(3, 3))
        se = d.std() / math.sqrt(d.size)
        assert abs(d.mean() - 1000.0 * HEX_MEAN_DISTANCE) < 4 * se


class TestPathLoss:
    def test_examples(self):
        assert path_loss_linear(1.0, 4.0) == pytest.approx(BETA_1KM_4GHZ, rel=1e-12)
        assert path_loss_linear(0.5, 4.0) / path_loss_linear(1.0, 4.0) == pytest.approx(4.0, rel=1e-12)
        assert path_loss_linear(0.1, 4.0) / path_loss_linear(1.0, 4.0) == pytest.approx(100.0, rel=1e-12)

    def test_monotone(self):
        b = path_loss_linear(np.linspace(0.01, 2, 50), 4.0)
        assert np.all(np.diff(b) < 0)
        assert path_loss_linear(1.0, 2.0) > path_loss_linear(1.0, 4.0)

    @pytest.mark.parametrize('d, f0', [(0.0, 4.0), (-1.0, 4.0), (1.0, 0.0)])
    def test_domain(self, d, f0):
        with pytest.raises(DomainError):
            path_loss_linear(d, f0)

    def test_large_scale_record(self):
        ls = LargeScale(np.array([1000.0, 500.0]), 4.0)
        np.testing.assert_allclose(ls.beta, [BETA_1KM_4GHZ, 4 * BETA_1KM_4GHZ], rtol=1e-12)


class TestFading:
    def test_deterministic(self):
        a = draw_fading(8, 3, [0.5, 1, 2], trial_rng(9, 1))
        b = draw_fading(8, 3, [0.5, 1, 2], trial_rng(9, 1))
        assert a.tobytes() == b.tobytes()

    def test_rayleigh_moments(self):
        h = draw_fading(100_000, 1, 1.0, trial_rng(11, 0))
        p = np.abs(h[:, 0]) ** 2
        assert 0.99 <= p.mean() <= 1.01
        assert 0.97 <= p.var() <= 1.03

    def test_m4_variance(self):
        h = draw_fading(100_000, 1, 4.0, trial_rng(12, 0))
        assert np.var(np.abs(h) ** 2) == pytest.approx(0.25, rel=0.05)

    @pytest.mark.parametrize('m', [0.5, 1.0, 2.0, 4.0])
    def test_unit_second_moment(self, m):
        p = np.abs(draw_fading(100_000, 1, m, trial_rng(13, int(4 * m)))) ** 2
        se = math.sqrt(1.0 / m / p.size)
        assert abs(p.mean() - 1.0) < 4 * se

    def test_phase_uniform(self):
        h = draw_fading(50_000, 2, [0.5, 3.0], trial_rng(14, 0))
        phasor = h / np.abs(h)
        assert np.all(np.abs(phasor.mean(axis=0)) < 4 / math.sqrt(h.shape[0]))

    def test_columns_follow_their_shape(self):
        h = draw_fading(100_000, 2, [0.5, 4.0], trial_rng(15, 0))
        var = np.var(np.abs(h) ** 2, axis=0)
        np.testing.assert_allclose(var, [2.0, 0.25], rtol=0.05)

    def test_invalid_shape(self):
        with pytest.raises(DomainError):
            draw_fading(4, 2, [1.0, 0.3], trial_rng(0, 0))


class TestCompose:
    def test_examples(self):
        h = draw_fading(5, 2, 1.0, trial_rng(1, 0))
        np.testing.assert_array_equal(compose_channel(h, np.ones(2)), h)
        assert compose_channel(np.array([[1 + 0j]]), np.array([4.0]))[0, 0] == 2 + 0j
        assert not np.any(compose_channel(np.zeros((3, 2), complex), np.array([1.0, 2.0])))

    def test_exact_inverse(self):
        h = draw_fading(16, 4, 1.0, trial_rng(2, 0))
        beta = np.array([1e-11, 3e-10, 2.5, 7.0])
        g = compose_channel(h, beta)
        np.testing.assert_allclose(g / np.sqrt(beta), h, rtol=1e-15, atol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            compose_channel(np.ones((3, 2)), np.ones(3))

    def test_draw_channel(self):
        cfg = SystemConfig(n=16, k=3, l=4)
        inst = draw_channel(cfg, 1.0, trial_rng(4, 0))
        assert isinstance(inst, ChannelInstance)
        assert inst.h.shape == (16, 3) and inst.beta.shape == (3,)
        np.testing.assert_array_equal(inst.g, inst.h * np.sqrt(inst.beta))

    def test_substreams_differ(self):
        a = trial_rng(1, 0).random(4)
        b = trial_rng(1, 1).random(4)
        assert not np.array_equal(a, b)
