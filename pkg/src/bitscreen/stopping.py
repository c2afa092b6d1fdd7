"""Rules that pick a model size along a screening path."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import CenteredResponse, StandardizedDesign
from .exceptions import ConfigError, DimensionError

RULES = ("fixed", "pp", "pp-largest-drop", "ebic")

# Pivot threshold (relative to n) for treating a path column as collinear
# in the unpenalized refit.
EBIC_COLLINEAR_RTOL = 1e-10
_RSS_FLOOR = 1e-300


@dataclass(frozen=True)
class StopRule:
    """Which stopping rule to apply and its parameters.

    ``size`` is the model size for ``fixed``; ``cap`` bounds the path length
    examined by the PP variants and EBIC.  ``include_null`` lets EBIC return
    the empty model.
    ``cap`` also replaces the default EBIC scan length.
    """

    kind: str = "fixed"
    size: int | None = None
    cap: int | None = None
    include_null: bool = False

    def __post_init__(self):
        if self.kind not in RULES:
            raise ConfigError(f"unknown stop rule {self.kind!r}; valid rules: {', '.join(RULES)}")
        if self.size is not None and self.size < 0:
            raise ConfigError("fixed size must be non-negative")
        if self.cap is not None and self.cap < 0:
            raise ConfigError("cap must be non-negative")


def fixed_size_decide(path, m: int) -> int:
    if m < 0:
        raise ConfigError("fixed size must be non-negative")
    return min(int(m), len(path))


def pp_decide(pi_trace, null_log_posterior: float, cap: int | None = None) -> int:
    """Size of the model before the first strict drop in log posterior.

    ``pi_trace[k-1]`` is the log posterior of the first ``k`` path entries;
    the first entry is compared against ``null_log_posterior``.  Without a
    drop the whole (capped) trace is kept.
    """
    trace = list(pi_trace)
    if cap is not None:
        trace = trace[:cap]
    prev = null_log_posterior
    for k, pi in enumerate(trace):
        if pi < prev:
            return k
        prev = pi
    return len(trace)


def pp_largest_drop_decide(pi_trace, cap: int | None = None) -> int:
    """``argmax_{1 <= m < cap} (pi_m - pi_{m+1})``, first maximizer on ties."""
    trace = np.asarray(pi_trace, dtype=float)
    if cap is not None:
        trace = trace[:cap]
    if trace.size < 2:
        raise DimensionError("largest-drop rule needs a trace of length >= 2")
    drops = trace[:-1] - trace[1:]
    return int(np.argmax(drops)) + 1


def ols_path_rss(design: StandardizedDesign, response: CenteredResponse, path, max_k: int | None = None):
    """Unpenalized RSS after each prefix of ``path``.

    Columns are orthogonalized in path order (Gram-Schmidt with one
    re-orthogonalization pass).  A column whose residual norm squared falls
    below ``1e-10 * n`` adds nothing and is reported in ``skipped``.

    Returns
    -------
    rss : ndarray, shape (K + 1,)
        ``rss[0]`` is ``||y~||^2``.
    skipped : list of int
        Path positions (0-based) treated as collinear.
    """
    path = list(path)
    if max_k is not None:
        path = path[:max_k]
    n = design.n
    resid = response.y_tilde.copy()
    rss = [float(resid @ resid)]
    Q = np.empty((n, 0))
    skipped = []
    for pos, j in enumerate(path):
        x = design.x_col(j)
        for _ in range(2):
            if Q.shape[1]:
                x = x - Q @ (Q.T @ x)
        nrm2 = float(x @ x)
        if nrm2 < EBIC_COLLINEAR_RTOL * n:
            skipped.append(pos)
            rss.append(rss[-1])
            continue
        q = x / math.sqrt(nrm2)
        Q = np.column_stack([Q, q])
        resid = resid - q * (q @ resid)
        rss.append(float(resid @ resid))
    return np.asarray(rss), skipped


def ebic_values(design: StandardizedDesign, response: CenteredResponse, path, max_k: int | None = None) -> np.ndarray:
    """``EBIC(k) = log(RSS_k / n) + k (log n + 2 log p) / n`` for k = 0..K."""
    rss, _ = ols_path_rss(design, response, path, max_k)
    n, p = design.n, design.p
    k = np.arange(rss.size)
    floor = max(_RSS_FLOOR, 1e-12 * rss[0])
    return np.log(np.maximum(rss, floor) / n) + k * (math.log(n) + 2.0 * math.log(p)) / n


def ebic_default_cap(n: int) -> int:
    """Default EBIC scan length ``floor(n / log n)``, at most ``n - 1``.

    Greedy paths over many candidates drive the OLS RSS to zero
    geometrically as ``k`` approaches ``n``, so an unrestricted scan ends up
    at the saturated end of the path.
    """
    if n < 3:
        return max(n - 1, 0)
    return max(1, min(n - 1, int(n / math.log(n))))


def ebic_decide(design: StandardizedDesign, response: CenteredResponse, path, max_k: int | None = None, *, include_null: bool = False) -> int:
    """Path prefix length minimizing EBIC over ``1 <= k <= max_k``.

    ``max_k`` defaults to ``min(len(path), ebic_default_cap(n))``.
    """
    if max_k is None:
        max_k = min(len(path), ebic_default_cap(design.n))
    if max_k >= design.n:
        raise DimensionError(f"EBIC needs max_k < n={design.n}, got {max_k}")
    vals = ebic_values(design, response, path, max_k)
    if vals.size == 1:
        return 0
    if include_null:
        return int(np.argmin(vals))
    return int(np.argmin(vals[1:])) + 1
