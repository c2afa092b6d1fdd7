import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bitscreen import Hyperparams, StopRule, bits_screen, center_response, standardize
from bitscreen.exceptions import ConfigError, DimensionError
from bitscreen.stopping import ebic_decide, ebic_values, fixed_size_decide, ols_path_rss, pp_decide, pp_largest_drop_decide


def test_fixed_size():
    path = list(range(7))
    assert fixed_size_decide(path, 0) == 0
    assert fixed_size_decide(path, 3) == 3
    assert fixed_size_decide(path, 50) == 7
    with pytest.raises(ConfigError):
        fixed_size_decide(path, -1)


def test_pp_increasing_trace_keeps_everything():
    assert pp_decide(np.arange(10.0), -1.0) == 10
    assert pp_decide(np.arange(10.0), -1.0, cap=6) == 6


def test_pp_first_step_below_null():
    assert pp_decide([-7.0, -6.0], null_log_posterior=-5.0) == 0


def test_pp_first_drop():
    assert pp_decide([-5.0, -4.0, -4.5], null_log_posterior=-10.0) == 2


def test_pp_ties_are_not_drops():
    assert pp_decide([-3.0, -3.0, -4.0], null_log_posterior=-3.0) == 2


def test_largest_drop_examples():
    assert pp_largest_drop_decide([0.0, 5.0, 1.0, 2.0]) == 2
    # all increments positive: the smallest rise counts as the largest drop
    assert pp_largest_drop_decide([0.0, 3.0, 4.0, 9.0]) == 2
    assert pp_largest_drop_decide([0.0, 5.0, 1.0, 2.0, -20.0], cap=4) == 2
    with pytest.raises(DimensionError):
        pp_largest_drop_decide([1.0])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40))
def test_largest_drop_matches_brute_force(trace):
    drops = [trace[m - 1] - trace[m] for m in range(1, len(trace))]
    best = max(drops)
    assert pp_largest_drop_decide(trace) == drops.index(best) + 1


def test_stop_rule_validation():
    with pytest.raises(ConfigError, match="unknown stop rule"):
        StopRule("bic")
    with pytest.raises(ConfigError):
        StopRule("fixed", size=-2)


def brute_force_ebic(X, yt, path, K):
    n, p = X.shape
    out = []
    for k in range(K + 1):
        if k == 0:
            rss = yt @ yt
        else:
            A = X[:, path[:k]]
            coef, *_ = np.linalg.lstsq(A, yt, rcond=None)
            rss = float(np.sum((yt - A @ coef) ** 2))
        out.append(math.log(rss / n) + k * (math.log(n) + 2 * math.log(p)) / n)
    return np.array(out)


def strong_then_noise(seed, n=100, p=1000):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, p))
    y = 3 * Z[:, 0] + rng.normal(size=n)
    path = [0] + rng.choice(np.arange(1, p), 9, replace=False).tolist()
    return standardize(Z), center_response(y), path


def test_ebic_one_strong_variable():
    d, r, path = strong_then_noise(0)
    assert ebic_decide(d, r, path, 10) == 1


@pytest.mark.parametrize("seed", range(3))
def test_ebic_matches_per_k_refit(seed):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(60, 200))
    y = rng.normal(size=60)  # no signal
    d, r = standardize(Z), center_response(y)
    path = rng.choice(200, 25, replace=False).tolist()
    X = d.x_cols(range(200))
    brute = brute_force_ebic(X, r.y_tilde, path, 25)
    np.testing.assert_allclose(ebic_values(d, r, path, 25), brute, atol=1e-9)
    k = ebic_decide(d, r, path, 25)
    assert k == int(np.argmin(brute[1:])) + 1
    assert k <= 3


def test_ebic_duplicate_entry_is_skipped():
    rng = np.random.default_rng(1)
    Z = rng.normal(size=(50, 30))
    Z[:, 9] = Z[:, 3]
    y = Z[:, 3] + Z[:, 5] + rng.normal(size=50)
    d, r = standardize(Z), center_response(y)
    path = [3, 5, 9, 12]
    rss, skipped = ols_path_rss(d, r, path)
    assert skipped == [2]
    assert rss[3] == rss[2]
    vals = ebic_values(d, r, path)
    pen = (math.log(50) + 2 * math.log(30)) / 50
    assert vals[3] == pytest.approx(vals[2] + pen)


def test_ebic_include_null_and_bounds():
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(40, 400))
    y = rng.normal(size=40)
    d, r = standardize(Z), center_response(y)
    path = list(range(10))
    assert ebic_decide(d, r, path, 10, include_null=True) == 0
    assert ebic_decide(d, r, path, 0) == 0
    with pytest.raises(DimensionError):
        ebic_decide(d, r, list(range(45)), 40)


def test_bits_screen_with_each_rule():
    d, r, _ = strong_then_noise(3, n=80, p=300)
    h = Hyperparams(300 / 80, 0.1)
    for kind, reason in [("pp", "pp-drop"), ("pp-largest-drop", "largest-drop"), ("ebic", "ebic-minimum")]:
        res = bits_screen(d, r, h, StopRule(kind))
        assert res.path[0] == 0
        assert res.selected == res.path[: len(res.selected)]
        assert res.stop_reason.value == reason
    assert bits_screen(d, r, h, StopRule("ebic")).selected == [0]


def test_pp_cap_limits_path():
    d, r, _ = strong_then_noise(4, n=60, p=200)
    res = bits_screen(d, r, Hyperparams(1e-6, 0.999), StopRule("pp", cap=4))
    assert len(res.path) <= 4


def test_ebic_default_cap():
    from bitscreen.stopping import ebic_default_cap

    assert ebic_default_cap(200) == 37
    assert ebic_default_cap(2) == 1
    assert ebic_default_cap(10) == 4


def test_ebic_default_scan_avoids_saturated_end():
    rng = np.random.default_rng(9)
    Z = rng.normal(size=(60, 600))
    y = 2 * Z[:, 0] + rng.normal(size=60)
    d, r = standardize(Z), center_response(y)
    from bitscreen import fr_screen

    path = fr_screen(d, r).ranking
    assert 1 <= ebic_decide(d, r, path) <= 14
