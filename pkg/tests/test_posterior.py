import math

import numpy as np
import pytest

from bitscreen import (
    Hyperparams,
    center_response,
    log_posterior_exact,
    log_posterior_ratio_via_partials,
    oracle_greedy_path,
    posterior_ratio_via_partials,
    ridge_partials,
    standardize,
)
from bitscreen.exceptions import ConfigError
from bitscreen.posterior import ridge_rss

from conftest import gaussian_instance


def qr_log_posterior(X, yt, gamma, lam, w):
    """Independent route: QR of the augmented ridge system."""
    n = X.shape[0]
    k = len(gamma)
    if k == 0:
        return -0.5 * (n - 1) * math.log(yt @ yt)
    A = np.vstack([X[:, gamma], math.sqrt(lam) * np.eye(k)])
    b = np.concatenate([yt, np.zeros(k)])
    _, R = np.linalg.qr(A)
    beta, *_ = np.linalg.lstsq(A, b, rcond=None)
    rss = float(np.sum((b - A @ beta) ** 2))
    logdet = 2 * np.log(np.abs(np.diag(R))).sum()
    return 0.5 * k * math.log(lam) - 0.5 * logdet - 0.5 * (n - 1) * math.log(rss) + k * math.log(w / (1 - w))


def test_hyperparams_validation():
    with pytest.raises(ConfigError):
        Hyperparams(0.0, 0.1)
    with pytest.raises(ConfigError):
        Hyperparams(1.0, 1.0)


def test_null_model_value(small_problem):
    d, r = small_problem
    h = Hyperparams(1.0, 0.2)
    assert log_posterior_exact(d, r, [], h) == pytest.approx(-0.5 * (d.n - 1) * math.log(r.sq_norm))


def test_orthogonal_column_with_zero_correlation():
    n = 8
    X = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]] * 2, dtype=float)
    y = np.array([1, 1, -1, -1, 2, 2, -2, -2], dtype=float)  # orthogonal to column 1
    d, r = standardize(X), center_response(y)
    assert abs(d.x_col_dot(1, r.y_tilde)) < 1e-12
    lam, w = 2.5, 0.3
    h = Hyperparams(lam, w)
    expected = log_posterior_exact(d, r, [], h) + 0.5 * math.log(lam) - 0.5 * math.log(n + lam) + math.log(w / (1 - w))
    assert log_posterior_exact(d, r, [1], h) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_log_posterior_matches_qr_oracle(seed):
    Z, y = gaussian_instance(seed, n=30, p=6)
    d, r = standardize(Z), center_response(y)
    X = d.x_cols(range(6))
    rng = np.random.default_rng(seed)
    gamma = sorted(rng.choice(6, 3, replace=False).tolist())
    for lam in (0.05, 1.0, 40.0):
        h = Hyperparams(lam, 0.1)
        assert log_posterior_exact(d, r, gamma, h) == pytest.approx(qr_log_posterior(X, r.y_tilde, gamma, lam, 0.1), abs=1e-9)


def test_partials_empty_model(small_problem):
    d, r = small_problem
    h = Hyperparams(3.0, 0.1)
    rp = ridge_partials(d, r, [], 4, h)
    assert rp.v_i_given_gamma == pytest.approx(1 + 3.0 / d.n)
    assert rp.v_iy_given_gamma == pytest.approx(d.x_col_dot(4, r.y_tilde) / d.n)


def test_partials_orthogonal_design():
    from conftest import orthogonal_instance

    X, y, t = orthogonal_instance(3, n=32, p=20)
    d, r = standardize(X), center_response(y)
    lam = 1.7
    h = Hyperparams(lam, 0.1)
    gamma = [int(t[0]), int(t[1])]
    rss = ridge_rss(d, r, gamma, lam)
    for i in (int(t[2]), 0 if 0 not in gamma else 1):
        rp = ridge_partials(d, r, gamma, i, h)
        expected = d.x_col_dot(i, r.y_tilde) ** 2 / ((d.n + lam) * rss)
        assert rp.r**2 == pytest.approx(expected, rel=1e-10)


def residualize(A, v):
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return v - A @ coef


@pytest.mark.parametrize("seed", range(4))
def test_small_lambda_recovers_classical_partial_correlation(seed):
    Z, y = gaussian_instance(seed, n=40, p=8)
    d, r = standardize(Z), center_response(y)
    X = d.x_cols(range(8))
    gamma, i = [0, 2, 5], 6
    ey = residualize(X[:, gamma], r.y_tilde)
    ex = residualize(X[:, gamma], X[:, i])
    classical = ey @ ex / math.sqrt((ey @ ey) * (ex @ ex))
    rp = ridge_partials(d, r, gamma, i, Hyperparams(1e-9, 0.1))
    assert abs(rp.r) == pytest.approx(abs(classical), abs=1e-6)
    assert rp.r == pytest.approx(-classical, abs=1e-6)


def test_ratio_examples(small_problem):
    d, r = small_problem
    gamma = [1, 3]
    for w in (0.5, 0.05):
        h = Hyperparams(2.0, w)
        rp = ridge_partials(d, r, gamma, 7, h)
        direct = log_posterior_exact(d, r, gamma + [7], h) - log_posterior_exact(d, r, gamma, h)
        assert log_posterior_ratio_via_partials(d, r, gamma, 7, h) == pytest.approx(direct, abs=1e-10)
        assert posterior_ratio_via_partials(d, r, gamma, 7, h) == pytest.approx(math.exp(direct), rel=1e-8)
        if w == 0.5:
            manual = 0.5 * math.log(2.0 / d.n) - 0.5 * math.log(rp.v_i_given_gamma) - 0.5 * (d.n - 1) * math.log(1 - rp.r**2)
            assert direct == pytest.approx(manual, abs=1e-10)


def test_ratio_zero_correlation_candidate():
    X = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]] * 2, dtype=float)
    y = np.array([1, 1, -1, -1, 2, 2, -2, -2], dtype=float)
    d, r = standardize(X), center_response(y)
    h = Hyperparams(0.8, 0.2)
    rp = ridge_partials(d, r, [], 1, h)
    assert abs(rp.r) < 1e-12
    expected = h.w * math.sqrt(0.8 / 8) / ((1 - h.w) * math.sqrt(rp.v_i_given_gamma))
    assert posterior_ratio_via_partials(d, r, [], 1, h) == pytest.approx(expected, rel=1e-12)


def test_rss_identity_monotone_shrinkage_and_bounds():
    Z, y = gaussian_instance(11, n=40, p=10)
    d, r = standardize(Z), center_response(y)
    X = d.x_cols(range(10))
    gamma = [0, 4, 7, 9]
    ols = float(residualize(X[:, gamma], r.y_tilde) @ residualize(X[:, gamma], r.y_tilde))
    prev = -np.inf
    for lam in np.geomspace(1e-4, 1e4, 25):
        rss = ridge_rss(d, r, gamma, lam)
        rp = ridge_partials(d, r, gamma, 2, Hyperparams(lam, 0.1))
        assert d.n * rp.v_y_given_gamma == pytest.approx(rss, rel=1e-10)
        assert rss >= prev - 1e-12
        assert ols - 1e-9 <= rss <= r.sq_norm + 1e-12
        prev = rss


def test_oracle_examples():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(30, 2))
    Z[:, 1] -= Z[:, 0] * (Z[:, 0] @ Z[:, 1]) / (Z[:, 0] @ Z[:, 0])
    y = 2 * Z[:, 0] + 1e-3 * rng.normal(size=30)
    d, r = standardize(Z), center_response(y)
    h = Hyperparams(1.0, 0.1)
    assert oracle_greedy_path(d, r, h, 1).path == [0]
    empty = oracle_greedy_path(d, r, h, 0)
    assert empty.path == [] and empty.trace == [pytest.approx(-0.5 * 29 * math.log(r.sq_norm))]


def test_oracle_guard():
    d = standardize(np.random.default_rng(0).normal(size=(10, 30)))
    r = center_response(np.random.default_rng(1).normal(size=10))
    with pytest.raises(ConfigError, match="refuses"):
        oracle_greedy_path(d, r, Hyperparams(1.0, 0.1), 2, max_p=20)


def test_oracle_path_w_invariant():
    Z, y = gaussian_instance(5, n=40, p=10)
    d, r = standardize(Z), center_response(y)
    a = oracle_greedy_path(d, r, Hyperparams(1.0, 0.01), 5)
    b = oracle_greedy_path(d, r, Hyperparams(1.0, 0.6), 5)
    assert a.path == b.path
    shift = math.log(0.6 / 0.4) - math.log(0.01 / 0.99)
    np.testing.assert_allclose(np.array(b.trace) - np.array(a.trace), shift * np.arange(6), atol=1e-9)
