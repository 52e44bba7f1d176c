import math

import numpy as np
import pytest

import nexcp


def test_weights_and_quantile():
    w = nexcp.normalize_weights([1.0, 1.0, 1.0])
    assert w.normalized == pytest.approx([0.25] * 4)
    assert len(w) == 3
    assert nexcp.normalize_weights([0.0, 0.0]).test_mass == 1.0
    assert nexcp.exponential_weights(2, 0.99).raw == pytest.approx([0.9801, 0.99])
    assert nexcp.weighted_quantile([1, 2, 3], [1 / 3] * 3, 2 / 3) == 2.0
    masses = [0.1] * 10
    assert nexcp.weighted_quantile(list(range(1, 10)) + [math.inf], masses, 0.9) == 9.0
    with pytest.raises(ValueError):
        nexcp.normalize_weights([1.5])


def test_split_conformal():
    region = nexcp.split_conformal(list(range(1, 10)), 0.0, alpha=0.1)
    assert (region.lower, region.upper) == (-9.0, 9.0)
    assert 8.5 in region
    assert not region.contains(9.5)
    wide = nexcp.split_conformal([1.0, 2.0], 0.0, weights=[0.0, 0.0])
    assert math.isinf(wide.width)
    with pytest.raises(ValueError):
        nexcp.split_conformal([1.0], 0.0, alpha=1.5)


def test_full_conformal_paths_agree():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    y = x @ np.array([1.0, -1.0, 0.5]) + rng.normal(size=40)
    tags = 0.95 ** np.arange(40, 0, -1)
    weights = list(tags)
    test_x = rng.normal(size=3)
    fast = nexcp.full_conformal(x, y, test_x, tags=tags, weights=weights, alpha=0.2, algorithm="wls", seed=3)
    grid = nexcp.full_conformal(x, y, test_x, tags=tags, weights=weights, alpha=0.2, algorithm="wls", seed=3,
                                fast_linear_path=False, grid_size=2000)
    assert fast.lower == pytest.approx(grid.lower, abs=0.05)
    assert fast.upper == pytest.approx(grid.upper, abs=0.05)
    mid = 0.5 * (fast.lower + fast.upper)
    assert fast.contains(mid) == grid.contains(mid)
    jack = nexcp.jackknife_plus(x, y, test_x, tags=tags, weights=weights, alpha=0.2, algorithm="wls", seed=3)
    assert jack.lower < jack.upper


def test_bounds():
    assert nexcp.drift_gap_bound(0.0, 0.9, 100) == (0.0, 0.0)
    exact, closed = nexcp.changepoint_gap_bound(0.9, 10, 100)
    assert exact <= closed == pytest.approx(0.9 ** 10)
    assert nexcp.huber_bound(0.05, 0.1) == pytest.approx(0.05 / 0.9)
    assert nexcp.tv_distance([0.7, 0.3], [0.3, 0.7]) == pytest.approx(0.4)
    assert nexcp.dmix_distance([0.3, 0.7], [0.5, 0.5]) == pytest.approx(0.4)


def test_simulate_small():
    a = nexcp.simulate(setting=2, trials=2, seed=5, N=200)
    b = nexcp.simulate(setting=2, trials=2, seed=5, N=200, threads=2)
    assert a == b
    assert set(a) == {"CP+LS", "nex-CP+LS", "nex-CP+WLS"}
    for coverage, width in a.values():
        assert 0.0 <= coverage <= 1.0
        assert width > 0.0
