"""Fast greedy screening with one-step delayed Cholesky updates.

After ``k`` selections the state holds

* the factor ``R`` of ``X_path^T X_path + lam I`` for the first ``k - 1``
  path entries, plus the pending diagonal ``b_k`` of the ``k``-th;
* ``v``: ``R_k^{-T} X_path^T y~``, so ``RSS_lam(path) = ||y~||^2 - ||v||^2``;
* per-column vectors ``zeta`` (squared projections onto the first ``k - 1``
  path directions), ``omega = sqrt(n + lam - zeta)`` and
  ``u = (r - S^T v) / omega``.

The off-diagonal column of the ``k``-th path entry is only needed once the
``(k + 1)``-th step updates ``zeta``, so it is computed one step late.  Each
step then costs one ``X^T h`` pass plus ``O(k^2 + kn)`` triangular work.

With ``lam = 0`` and an RSS-reduction score the same recursions give
forward regression; see :func:`bitscreen.baselines.fr_screen`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .design import CenteredResponse, StandardizedDesign, TriangularFactor
from .exceptions import ConfigError, NumericalBreakdown
from .posterior import Hyperparams

# omega^2 floor relative to lam; residual floor relative to ||y~||^2.
OMEGA_FLOOR = 1e-12
RESIDUAL_FLOOR = 1e-12
# Candidates whose partial variance falls below this fraction of n are
# treated as collinear when lam == 0.
COLLINEAR_RTOL = 1e-10


class StopReason(str, Enum):
    FIXED_SIZE = "fixed-size"
    PP_DROP = "pp-drop"
    LARGEST_DROP = "largest-drop"
    EBIC_MINIMUM = "ebic-minimum"
    PERFECT_FIT = "perfect-fit"
    EXHAUSTED = "exhausted"
    MAX_STEPS = "max-steps"


@dataclass
class ScreeningState:
    """Mutable state of one greedy run; see the module docstring."""

    factor: TriangularFactor
    path: list[int]
    v: list[float]
    r: np.ndarray
    u: np.ndarray
    zeta: np.ndarray
    omega: np.ndarray
    pending_b: float
    pi_trace: list[float]
    selected_mask: np.ndarray
    candidate_mask: np.ndarray
    lam: float
    y_sq_norm: float
    path_cols: np.ndarray = field(repr=False)
    perfect_fit: bool = False

    @property
    def k(self) -> int:
        return len(self.path)

    @property
    def v_sq_norm(self) -> float:
        return float(np.dot(self.v, self.v))

    @property
    def rss(self) -> float:
        """Ridge RSS of the current path, ``||y~||^2 - ||v||^2``."""
        return self.y_sq_norm - self.v_sq_norm

    @property
    def log_det(self) -> float:
        """``log det R_k`` including the pending diagonal."""
        if not self.path:
            return 0.0
        return self.factor.log_det + math.log(self.pending_b)

    def full_factor(self, design: StandardizedDesign) -> np.ndarray:
        """Completed ``k x k`` factor (computes the delayed column)."""
        k = self.k
        R = np.zeros((k, k))
        if k == 0:
            return R
        m = self.factor.order
        R[:m, :m] = self.factor.R
        if m < k:
            x_new = design.x_col(self.path[m])
            R[:m, m] = self.factor.solve_lower(self.path_cols.T @ x_new)
            R[m, m] = self.pending_b
        return R


def _floored_omega(zeta, n, lam):
    floor = (lam if lam > 0 else n) * OMEGA_FLOOR
    return np.sqrt(np.maximum(n + lam - zeta, floor))


def init_state(design: StandardizedDesign, response: CenteredResponse, lam: float) -> ScreeningState:
    """State before any selection: ``u_0 = r / sqrt(n + lam)``."""
    if response.n != design.n:
        raise ConfigError(f"response length {response.n} does not match n={design.n}")
    n, p = design.n, design.p
    r = design.xt_v(response.y_tilde)
    zeta = np.zeros(p)
    omega = _floored_omega(zeta, n, lam)
    return ScreeningState(
        factor=TriangularFactor(capacity=32),
        path=[],
        v=[],
        r=r,
        u=r / omega,
        zeta=zeta,
        omega=omega,
        pending_b=float("nan"),
        pi_trace=[],
        selected_mask=np.zeros(p, dtype=bool),
        candidate_mask=design.admissible.copy(),
        lam=float(lam),
        y_sq_norm=response.sq_norm,
        path_cols=np.empty((n, 0)),
    )


def bits_scores(state: ScreeningState, n: int) -> np.ndarray:
    """Posterior increment (up to constants) of adding each candidate.

    ``-log omega_i - (n-1)/2 log(RSS - u_i^2)``; masked entries are -inf.
    """
    floor = RESIDUAL_FLOOR * state.y_sq_norm
    score = np.square(state.u)
    np.subtract(state.rss, score, out=score)
    np.maximum(score, floor, out=score)
    np.log(score, out=score)
    score *= -0.5 * (n - 1)
    score -= np.log(state.omega)
    score[~state.candidate_mask] = -np.inf
    return score


def fr_scores(state: ScreeningState, n: int) -> np.ndarray:
    """RSS reduction ``u_i^2``; near-collinear candidates are masked out."""
    ok = state.candidate_mask & (state.omega**2 > COLLINEAR_RTOL * n)
    return np.where(ok, state.u**2, -np.inf)


def _select(state: ScreeningState, scores: np.ndarray, hyper: Hyperparams | None, n: int) -> int | None:
    if not np.isfinite(scores).any():
        return None
    i = int(np.argmax(scores))
    b = float(state.omega[i])
    state.path.append(i)
    state.v.append(float(state.u[i]))
    state.pending_b = b
    state.selected_mask[i] = True
    state.candidate_mask[i] = False
    if state.rss <= RESIDUAL_FLOOR * state.y_sq_norm:
        state.perfect_fit = True
    if hyper is not None:
        k = state.k
        rss = max(state.rss, RESIDUAL_FLOOR * state.y_sq_norm)
        pi = 0.5 * k * math.log(hyper.lam) - state.log_det - 0.5 * (n - 1) * math.log(rss) + k * hyper.log_prior_odds
        state.pi_trace.append(pi)
    return i


def _absorb_last(state: ScreeningState, design: StandardizedDesign) -> None:
    """Complete the delayed factor column for the newest path entry and
    project every candidate onto the new direction."""
    n = design.n
    m = state.factor.order  # == k - 1
    i_last = state.path[m]
    x_last = design.x_col(i_last)
    b = state.pending_b
    if m:
        prev = state.path_cols
        alpha = state.factor.solve_lower(prev.T @ x_last)
        h = x_last - prev @ state.factor.solve_upper(alpha)
    else:
        alpha = np.empty(0)
        h = x_last
    state.factor.append(alpha, b, i_last)
    state.path_cols = np.column_stack([state.path_cols, x_last])
    eta = design.xt_v(h)
    eta /= b
    # u <- (u * omega_old - v_last * eta) / omega_new, all in place
    u = state.u
    u *= state.omega
    u -= state.v[m] * eta
    eta *= eta
    state.zeta += eta
    floor = (state.lam if state.lam > 0 else n) * OMEGA_FLOOR
    omega = state.omega
    np.subtract(n + state.lam, state.zeta, out=omega)
    np.maximum(omega, floor, out=omega)
    np.sqrt(omega, out=omega)
    u /= omega


def bits_first_step(design: StandardizedDesign, response: CenteredResponse, hyper: Hyperparams) -> ScreeningState:
    """Select the column with the largest squared marginal correlation."""
    state = init_state(design, response, hyper.lam)
    if _select(state, bits_scores(state, design.n), hyper, design.n) is None:
        raise ConfigError("design has no admissible columns")
    return state


def bits_iterate(state: ScreeningState, design: StandardizedDesign, response: CenteredResponse, hyper: Hyperparams) -> ScreeningState:
    """Absorb the pending path entry into the factor and select the next one.

    Returns the state unchanged in length when no candidate is left.
    """
    if state.perfect_fit:
        raise NumericalBreakdown("residual vanished; the path cannot be extended")
    _absorb_last(state, design)
    _select(state, bits_scores(state, design.n), hyper, design.n)
    return state


def bits_second_step(state: ScreeningState, design: StandardizedDesign, response: CenteredResponse, hyper: Hyperparams) -> ScreeningState:
    if state.k != 1:
        raise ConfigError(f"second step expects a state of order 1, got {state.k}")
    return bits_iterate(state, design, response, hyper)


def greedy_path(
    design: StandardizedDesign,
    response: CenteredResponse,
    hyper: Hyperparams | None,
    max_steps: int,
    *,
    lam: float | None = None,
    stop_on_drop: bool = False,
    null_log_posterior: float | None = None,
    timings: list[float] | None = None,
) -> tuple[ScreeningState, StopReason]:
    """Run the recursions for up to ``max_steps`` selections.

    ``hyper`` selects the posterior score; ``hyper=None`` with ``lam`` runs
    forward regression (RSS-reduction score).  With ``stop_on_drop`` the run
    ends right after the first step whose log posterior decreases.
    """
    if hyper is not None:
        lam = hyper.lam
    elif lam is None:
        raise ConfigError("either hyper or lam is required")
    score = fr_scores if hyper is None else bits_scores
    n = design.n
    state = init_state(design, response, lam)
    if timings is None:
        timings = []
    while state.k < max_steps:
        t0 = time.perf_counter()
        if state.perfect_fit:
            return state, StopReason.PERFECT_FIT
        if state.k:
            _absorb_last(state, design)
        chosen = _select(state, score(state, n), hyper, n)
        timings.append(time.perf_counter() - t0)
        if chosen is None:
            return state, StopReason.EXHAUSTED
        if stop_on_drop and hyper is not None:
            prev = null_log_posterior if state.k == 1 else state.pi_trace[-2]
            if prev is not None and state.pi_trace[-1] < prev:
                return state, StopReason.PP_DROP
    if state.perfect_fit:
        return state, StopReason.PERFECT_FIT
    if not state.candidate_mask.any():
        return state, StopReason.EXHAUSTED
    return state, StopReason.MAX_STEPS


@dataclass
class ScreeningResult:
    """Outcome of :func:`bits_screen`.

    ``selected`` is always a prefix of ``path``; ``pi_trace[k-1]`` is the log
    posterior of ``path[:k]`` on the same scale as
    :func:`bitscreen.posterior.log_posterior_exact`.
    """

    path: list[int]
    pi_trace: list[float]
    stop_reason: StopReason
    selected: list[int]
    timings: list[float]
    null_log_posterior: float

    def to_dict(self) -> dict:
        return {
            "path": list(map(int, self.path)),
            "pi_trace": list(map(float, self.pi_trace)),
            "selected": list(map(int, self.selected)),
            "stop_reason": self.stop_reason.value,
            "null_log_posterior": float(self.null_log_posterior),
            "timings": list(map(float, self.timings)),
        }


def default_max_steps(design: StandardizedDesign) -> int:
    return min(design.n - 1, design.n_admissible)


def bits_screen(
    design: StandardizedDesign,
    response: CenteredResponse,
    hyper: Hyperparams,
    stop_rule=None,
    max_steps: int | None = None,
) -> ScreeningResult:
    """Screen with the posterior-greedy path and apply a stopping rule.

    The path is extended only as far as the rule needs: ``fixed`` stops at
    its size, ``pp`` at the first drop, the others at the cap (for ``ebic``
    the default cap is ``floor(n / log n)``).
    """
    from .stopping import StopRule, ebic_decide, ebic_default_cap, pp_decide, pp_largest_drop_decide

    if stop_rule is None:
        stop_rule = StopRule("fixed", size=design.n)
    limit = default_max_steps(design)
    if max_steps is None:
        max_steps = limit
    if max_steps < 0:
        raise ConfigError("max_steps must be non-negative")
    max_steps = min(int(max_steps), limit)
    if stop_rule.cap is not None:
        max_steps = min(max_steps, stop_rule.cap)
    elif stop_rule.kind == "ebic":
        max_steps = min(max_steps, ebic_default_cap(design.n))
    null = -0.5 * (design.n - 1) * math.log(response.sq_norm)
    timings: list[float] = []
    kind = stop_rule.kind

    if kind == "fixed":
        size = design.n if stop_rule.size is None else stop_rule.size
        state, reason = greedy_path(design, response, hyper, min(size, max_steps), timings=timings)
        if state.k >= size:
            reason = StopReason.FIXED_SIZE
        selected = state.path[: min(size, state.k)]
    elif kind == "pp":
        state, reason = greedy_path(design, response, hyper, max_steps, stop_on_drop=True, null_log_posterior=null, timings=timings)
        size = pp_decide(state.pi_trace, null)
        selected = state.path[:size]
    elif kind == "pp-largest-drop":
        state, reason = greedy_path(design, response, hyper, max_steps, timings=timings)
        if state.k >= 2:
            selected = state.path[: pp_largest_drop_decide(state.pi_trace)]
            reason = StopReason.LARGEST_DROP
        else:
            selected = list(state.path)
    else:
        state, reason = greedy_path(design, response, hyper, max_steps, timings=timings)
        if state.k:
            size = ebic_decide(design, response, state.path, state.k, include_null=stop_rule.include_null)
            reason = StopReason.EBIC_MINIMUM
        else:
            size = 0
        selected = state.path[:size]
    return ScreeningResult(
        path=list(state.path),
        pi_trace=list(state.pi_trace),
        stop_reason=reason,
        selected=list(selected),
        timings=timings,
        null_log_posterior=null,
    )
