"""Classical screening baselines: SIS, HOLP and forward regression."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .design import CenteredResponse, StandardizedDesign
from .engine import StopReason, default_max_steps, greedy_path


@dataclass
class BaselineResult:
    """Ranking (SIS, HOLP) or greedy path (FR) with matching scores.

    ``scores[k]`` belongs to ``ranking[k]``: absolute marginal correlation
    for SIS, absolute coefficient for HOLP, RSS after step ``k + 1`` for FR.
    """

    method: str
    ranking: np.ndarray
    scores: np.ndarray
    info: dict = field(default_factory=dict)


def _rank_admissible(design: StandardizedDesign, score: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(design.admissible)
    order = np.argsort(-score[idx], kind="stable")
    return idx[order]


def sis_rank(design: StandardizedDesign, response: CenteredResponse) -> BaselineResult:
    """Rank admissible columns by ``|X_j^T y~|``, ties to the lower index."""
    corr = np.abs(design.xt_v(response.y_tilde)) / design.n
    ranking = _rank_admissible(design, corr)
    return BaselineResult("sis", ranking, corr[ranking])


def holp_coefficients(design: StandardizedDesign, response: CenteredResponse, *, jitter: float = 1e-8):
    """Minimum-norm interpolant ``X^T (X X^T)^+ y~``.

    Centering leaves ``1`` in the null space of ``X X^T``; since ``y~`` is
    orthogonal to it, solving with ``X X^T + 1 1^T`` gives the same
    coefficients while keeping the system positive definite.

    Returns the coefficients and whether a ridge jitter had to be added.
    """
    n = design.n
    gram = design.row_gram()
    gram += 1.0
    jittered = False
    try:
        c, lower = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
        d = np.abs(np.diag(c))
        if d.min() ** 2 < 1e-12 * d.max() ** 2:
            raise np.linalg.LinAlgError("ill-conditioned row Gram")
    except np.linalg.LinAlgError:
        jittered = True
        warnings.warn("X X^T is singular; HOLP adds a ridge jitter", RuntimeWarning, stacklevel=2)
        gram[np.diag_indices(n)] += jitter * np.trace(gram) / n
        c, lower = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    alpha = scipy.linalg.cho_solve((c, lower), response.y_tilde, check_finite=False)
    return design.xt_v(alpha), jittered


def holp_rank(design: StandardizedDesign, response: CenteredResponse) -> BaselineResult:
    beta, jittered = holp_coefficients(design, response)
    ranking = _rank_admissible(design, np.abs(beta))
    return BaselineResult("holp", ranking, np.abs(beta)[ranking], {"jittered": jittered, "beta": beta})


def fr_screen(design: StandardizedDesign, response: CenteredResponse, max_steps: int | None = None) -> BaselineResult:
    """Forward regression: add the candidate with the largest RSS reduction.

    Runs the delayed-update recursions at ``lam = 0``; candidates whose
    partial variance drops below ``1e-10 * n`` are skipped.
    """
    limit = default_max_steps(design)
    max_steps = limit if max_steps is None else min(int(max_steps), limit)
    state, reason = greedy_path(design, response, None, max_steps, lam=0.0)
    path = np.asarray(state.path, dtype=np.intp)
    v2 = np.asarray(state.v) ** 2
    rss = state.y_sq_norm - np.cumsum(v2)
    return BaselineResult("fr", path, rss, {"stop_reason": reason})


__all__ = ["BaselineResult", "StopReason", "fr_screen", "holp_coefficients", "holp_rank", "sis_rank"]
