from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from gfra.traffic import TrafficConfig, arrival_slots, beta_arrivals, poisson_arrivals, uniform_arrivals


def test_poisson_zero_load():
    assert not poisson_arrivals(0.0, 100, np.random.default_rng(0)).any()


def test_poisson_moments():
    c = poisson_arrivals(1.0, 100_000, np.random.default_rng(1))
    assert c.mean() == pytest.approx(1.0, abs=0.01)
    assert c.var() == pytest.approx(1.0, abs=0.05)


def test_poisson_users_per_frame():
    c = poisson_arrivals(0.5, 50 * 1000, np.random.default_rng(2)).reshape(1000, 50).sum(axis=1)
    assert c.mean() == pytest.approx(25, abs=1)


def test_poisson_lag1_autocorrelation():
    c = poisson_arrivals(1.0, 100_000, np.random.default_rng(3)).astype(float)
    r = np.corrcoef(c[:-1], c[1:])[0, 1]
    assert abs(r) < 0.01


def test_poisson_rejects_negative_load():
    with pytest.raises(ValueError):
        poisson_arrivals(-0.1, 10, np.random.default_rng(0))


def test_beta_empty():
    assert not beta_arrivals(0, 10, 3, 4, None, 1.0, np.random.default_rng(0)).any()


def test_beta_mode_near_four_tenths_of_window():
    c = beta_arrivals(10_000, 10, 3, 4, None, 1.0, np.random.default_rng(4))
    assert len(c) == 10_000 and c.sum() == 10_000
    per_second = c.reshape(10, 1000).sum(axis=1)
    mode_centre_s = np.argmax(per_second) + 0.5
    assert abs(mode_centre_s - 4.0) <= 0.5


@pytest.mark.parametrize("M", [1, 17, 1000, 30_000])
def test_conservation(M):
    rng = np.random.default_rng(M)
    assert beta_arrivals(M, 10, 3, 4, None, 1.0, rng).sum() == M
    assert uniform_arrivals(M, 60, None, 1.0, rng).sum() == M


def test_truncated_horizon_keeps_prefix():
    full = beta_arrivals(5000, 10, 3, 4, None, 1.0, np.random.default_rng(5))
    short = beta_arrivals(5000, 10, 3, 4, 2000, 1.0, np.random.default_rng(5))
    assert np.array_equal(short, full[:2000])


def test_uniform_per_slot_mean():
    c = uniform_arrivals(60_000, 60, None, 1.0, np.random.default_rng(6))
    assert len(c) == 60_000
    assert c.mean() == pytest.approx(1.0, abs=0.05)


def test_uniform_single_device():
    c = uniform_arrivals(1, 60, None, 1.0, np.random.default_rng(7))
    assert np.count_nonzero(c) == 1


def test_uniform_chi_squared():
    # 1 s window of 1 ms slots: 100 expected arrivals per slot
    c = uniform_arrivals(100_000, 1, None, 1.0, np.random.default_rng(8))
    assert stats.chisquare(c).pvalue > 0.001


def test_reproducible():
    a = beta_arrivals(500, 10, 3, 4, None, 1.0, np.random.default_rng(9))
    b = beta_arrivals(500, 10, 3, 4, None, 1.0, np.random.default_rng(9))
    assert np.array_equal(a, b)
    assert np.array_equal(
        poisson_arrivals(0.3, 1000, np.random.default_rng(9)), poisson_arrivals(0.3, 1000, np.random.default_rng(9))
    )


def test_arrival_slots_expands_counts():
    assert arrival_slots(np.array([0, 2, 0, 1])).tolist() == [1, 1, 3]


def test_traffic_config_defaults_and_validation():
    assert TrafficConfig().window_s == 10
    assert TrafficConfig(model="uniform").window_s == 60
    assert TrafficConfig(model="beta").packet_size_bytes == 200
    for bad in ({"model": "pareto"}, {"total_devices": -1}, {"beta_alpha": 0}, {"packet_size_bytes": 0}):
        with pytest.raises(ValueError):
            TrafficConfig(**bad)
