import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from craft.wireless import mean_interference, site_bitrates, sinr, wireless_bitrate

P, H = 0.1, 1e-5


def test_interference_above_one_user_per_access_point():
    assert mean_interference(10, 5, P, H) == pytest.approx(1e-6, rel=1e-12)
    assert mean_interference(5, 1, P, H) == pytest.approx(4e-6, rel=1e-12)


def test_interference_zero_when_access_points_suffice():
    assert mean_interference(3, 5, P, H) == 0.0
    assert mean_interference(5, 5, P, H) == 0.0
    assert mean_interference(0, 1, P, H) == 0.0


def test_interference_ratio_is_real_valued():
    # 7/2 = 3.5, not 3
    assert mean_interference(7, 2, P, H) == pytest.approx(2.5 * P * H)


def test_interference_rejects_zero_access_points():
    with pytest.raises(ValueError):
        mean_interference(3, 0, P, H)


def test_sinr_examples():
    assert sinr(P, H, 1e-13, 0.0) == pytest.approx(1e7, rel=1e-12)
    assert sinr(P, H, 1e-20, P * H) == pytest.approx(1.0, rel=1e-6)
    assert sinr(2 * P, H, 1e-13, 0.0) == pytest.approx(2 * sinr(P, H, 1e-13, 0.0))


def test_bitrate_examples():
    assert wireless_bitrate(1e7, 1.0) == 1e7
    assert wireless_bitrate(1e7, 3.0) == 2e7
    assert wireless_bitrate(1e7, 0.0) == 0.0


def test_bitrate_units_scale_with_bandwidth_only():
    # bit/s per Hz depends on SINR alone
    for s in (0.5, 3.0, 1e4):
        assert wireless_bitrate(2e6, s) / 2e6 == pytest.approx(wireless_bitrate(7e6, s) / 7e6)


@given(st.floats(0, 1e6), st.floats(1e-3, 1e3))
def test_bitrate_strictly_increasing_in_sinr(s, ds):
    assert wireless_bitrate(1e7, s + ds) > wireless_bitrate(1e7, s)


@given(st.integers(0, 500), st.integers(1, 20))
def test_interference_monotone(n, ac):
    assert mean_interference(n + 1, ac, P, H) >= mean_interference(n, ac, P, H)
    assert mean_interference(n, ac + 1, P, H) <= mean_interference(n, ac, P, H)


@given(st.integers(0, 200))
def test_enough_access_points_remove_interference(n):
    assert mean_interference(n, max(n, 1), P, H) == 0.0


@given(st.lists(st.tuples(st.integers(0, 150), st.integers(1, 5)), min_size=1, max_size=20))
def test_vectorized_rates_match_scalar_chain(pairs):
    n = np.array([p[0] for p in pairs])
    ac = np.array([p[1] for p in pairs])
    got = site_bitrates(n, ac, P, H, 1e-13, 1e7)
    for (ni, ai), g in zip(pairs, got):
        want = wireless_bitrate(1e7, sinr(P, H, 1e-13, mean_interference(ni, ai, P, H)))
        assert math.isclose(g, want, rel_tol=1e-12)
