"""Exact marginal posterior of the inclusion indicator and its oracle path.

Everything here refactorizes from scratch; nothing is shared with the
incremental engine in :mod:`bitscreen.engine`, so these functions can
certify it.

Log posteriors drop the normalizing constant: the empty model scores
``-(n-1)/2 * log ||y_tilde||^2`` and every other model is measured on the
same scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .design import CenteredResponse, StandardizedDesign
from .exceptions import ConfigError, DimensionError, InputError, NumericalBreakdown

ORACLE_MAX_P = 5000


@dataclass(frozen=True)
class Hyperparams:
    """Ridge precision ``lam`` and prior inclusion probability ``w``."""

    lam: float
    w: float = 0.1

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lambda must be positive, got {self.lam!r}")
        if not 0.0 < self.w < 1.0:
            raise ConfigError(f"w must lie in (0, 1), got {self.w!r}")

    @property
    def log_prior_odds(self) -> float:
        return math.log(self.w / (1.0 - self.w))


@dataclass(frozen=True)
class RidgePartials:
    """Ridge partial variances and correlation of a candidate given a model.

    ``r`` carries the leading minus sign of its textbook definition,
    ``r = -v_iy / sqrt(v_i * v_y)``; only ``r**2`` enters the posterior.
    """

    v_i_given_gamma: float
    v_iy_given_gamma: float
    v_y_given_gamma: float
    r: float


def _gamma_array(design: StandardizedDesign, gamma) -> np.ndarray:
    gamma = np.asarray(sorted(set(int(g) for g in gamma)), dtype=np.intp)
    if gamma.size >= design.n:
        raise DimensionError(f"model size {gamma.size} must be below n={design.n}")
    for g in gamma:
        if not design.admissible[g]:
            raise InputError(f"column {g} is not admissible")
    return gamma


def _ridge_system(design, response, gamma, lam):
    """Cholesky factor of ``X_g^T X_g + lam I`` and the ridge RSS."""
    yt = response.y_tilde
    if gamma.size == 0:
        return None, 0.0, float(yt @ yt), None
    Xg = design.x_cols(gamma)
    gram = Xg.T @ Xg + lam * np.eye(gamma.size)
    try:
        L = scipy.linalg.cholesky(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(str(exc)) from exc
    logdet = 2.0 * float(np.log(np.diag(L)).sum())
    z = scipy.linalg.solve_triangular(L, Xg.T @ yt, lower=True)
    rss = float(yt @ yt - z @ z)
    return L, logdet, rss, Xg


def log_posterior_exact(design: StandardizedDesign, response: CenteredResponse, gamma, hyper: Hyperparams) -> float:
    """Log marginal posterior of model ``gamma`` up to the shared constant.

    ``|g|/2 log lam - 1/2 log|X_g^T X_g + lam I| - (n-1)/2 log RSS_lam(g)
    + |g| log(w / (1 - w))``.
    """
    gamma = _gamma_array(design, gamma)
    _, logdet, rss, _ = _ridge_system(design, response, gamma, hyper.lam)
    if not rss > 0.0:
        raise NumericalBreakdown(f"ridge residual sum of squares is {rss!r}")
    k = gamma.size
    n = design.n
    return 0.5 * k * math.log(hyper.lam) - 0.5 * logdet - 0.5 * (n - 1) * math.log(rss) + k * hyper.log_prior_odds


def ridge_rss(design: StandardizedDesign, response: CenteredResponse, gamma, lam: float) -> float:
    """``y~^T y~ - y~^T X_g (X_g^T X_g + lam I)^{-1} X_g^T y~``."""
    gamma = _gamma_array(design, gamma)
    return _ridge_system(design, response, gamma, lam)[2]


def ridge_partials(design: StandardizedDesign, response: CenteredResponse, gamma, i: int, hyper: Hyperparams) -> RidgePartials:
    gamma = _gamma_array(design, gamma)
    i = int(i)
    if i in set(gamma.tolist()):
        raise InputError(f"candidate {i} is already in the model")
    n = design.n
    lam = hyper.lam
    yt = response.y_tilde
    xi = design.x_col(i)
    L, _, rss, Xg = _ridge_system(design, response, gamma, lam)
    if gamma.size:
        zi = scipy.linalg.solve_triangular(L, Xg.T @ xi, lower=True)
        zy = scipy.linalg.solve_triangular(L, Xg.T @ yt, lower=True)
        ii, iy = float(zi @ zi), float(zi @ zy)
    else:
        ii = iy = 0.0
    v_i = (xi @ xi + lam - ii) / n
    v_iy = (yt @ xi - iy) / n
    v_y = rss / n
    if not (v_i > 0 and v_y > 0):
        raise NumericalBreakdown("non-positive ridge partial variance")
    r = -v_iy / math.sqrt(v_i * v_y)
    return RidgePartials(v_i_given_gamma=float(v_i), v_iy_given_gamma=float(v_iy), v_y_given_gamma=float(v_y), r=float(r))


def log_posterior_ratio_via_partials(design, response, gamma, i, hyper: Hyperparams) -> float:
    """``log f(g + e_i | y) - log f(g | y)`` from the ridge partials.

    The ratio is ``w (lam/n)^{1/2} / ((1-w) v_i^{1/2} (1 - R^2)^{(n-1)/2})``.
    """
    rp = ridge_partials(design, response, gamma, i, hyper)
    one_minus_r2 = 1.0 - rp.r**2
    if not one_minus_r2 > 0.0:
        raise NumericalBreakdown("squared ridge partial correlation reached 1")
    n = design.n
    return (
        hyper.log_prior_odds
        + 0.5 * math.log(hyper.lam / n)
        - 0.5 * math.log(rp.v_i_given_gamma)
        - 0.5 * (n - 1) * math.log1p(-rp.r**2)
    )


def posterior_ratio_via_partials(design, response, gamma, i, hyper: Hyperparams) -> float:
    return math.exp(log_posterior_ratio_via_partials(design, response, gamma, i, hyper))


@dataclass(frozen=True)
class OraclePath:
    """Greedy path from exhaustive per-candidate evaluation.

    ``trace[0]`` is the empty model; ``trace[k]`` belongs to ``path[:k]``.
    """

    path: list[int]
    trace: list[float]


def oracle_greedy_path(
    design: StandardizedDesign,
    response: CenteredResponse,
    hyper: Hyperparams,
    steps: int,
    *,
    max_p: int = ORACLE_MAX_P,
) -> OraclePath:
    """Greedy maximization of the exact log posterior, one candidate at a time.

    Costs ``O(steps * p * k^3)``; refuses designs wider than ``max_p``.
    Ties go to the smallest column index.
    """
    if design.p > max_p:
        raise ConfigError(f"oracle refuses p={design.p} > {max_p}; use a smaller design or raise max_p")
    steps = int(steps)
    if steps < 0 or steps >= design.n:
        raise DimensionError(f"steps must lie in [0, n-1], got {steps}")
    path: list[int] = []
    trace = [log_posterior_exact(design, response, [], hyper)]
    for _ in range(steps):
        chosen = set(path)
        best, best_val = -1, -np.inf
        for j in range(design.p):
            if j in chosen or not design.admissible[j]:
                continue
            val = log_posterior_exact(design, response, path + [j], hyper)
            if val > best_val:
                best, best_val = j, val
        if best < 0:
            break
        path.append(best)
        trace.append(best_val)
    return OraclePath(path=path, trace=trace)
