"""scikit-learn compatible screeners.

Each screener is a feature selector: ``fit`` learns which columns survive,
``transform`` keeps them, and the estimators compose with ``Pipeline`` and
``clone`` like any other sklearn selector.

>>> from bitscreen import BITSScreener
>>> sel = BITSScreener(lam="p/n", stop="pp").fit(X, y)   # doctest: +SKIP
>>> sel.path_[:5], sel.get_support(indices=True)          # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from .baselines import fr_screen, holp_rank, sis_rank
from .design import center_response, standardize
from .engine import bits_screen, default_max_steps
from .exceptions import ConfigError
from .simulation import resolve_lambda
from .stopping import StopRule, ebic_decide


class _BaseScreener(SelectorMixin, BaseEstimator):
    def _validate(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csc", dtype=np.float64, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        design = standardize(X)
        response = center_response(y)
        return design, response

    def _set_support(self, design, selected):
        mask = np.zeros(design.p, dtype=bool)
        mask[np.asarray(selected, dtype=np.intp)] = True
        self.support_ = mask
        self.selected_ = np.asarray(selected, dtype=np.intp)

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_


class BITSScreener(_BaseScreener):
    """Bayesian iterative screening as a feature selector.

    Parameters
    ----------
    lam : float or {"p/n", "nlogn/p", "n/p"}, default="p/n"
        Ridge prior precision; presets are resolved against the training
        shape.
    w : float, default=0.1
        Prior inclusion probability. Changes the PP stopping point, never
        the path.
    stop : {"fixed", "pp", "pp-largest-drop", "ebic"}, default="fixed"
    size : int, optional
        Model size for ``stop="fixed"``; defaults to ``n``.
    max_steps : int, optional
        Path length cap; defaults to ``min(n - 1, #non-constant columns)``.

    Attributes
    ----------
    path_ : ndarray of int
        Full screening order.
    pi_trace_ : ndarray
        Log posterior after each path step.
    selected_ : ndarray of int
        Path prefix kept by the stopping rule.
    stop_reason_ : str
    lambda_ : float
        Resolved ridge penalty.
    result_ : ScreeningResult
    """

    def __init__(self, lam="p/n", w=0.1, stop="fixed", size=None, max_steps=None):
        self.lam = lam
        self.w = w
        self.stop = stop
        self.size = size
        self.max_steps = max_steps

    def fit(self, X, y):
        from .posterior import Hyperparams

        design, response = self._validate(X, y)
        self.lambda_ = resolve_lambda(self.lam, design.n, design.p)
        hyper = Hyperparams(self.lambda_, self.w)
        rule = StopRule(self.stop, size=self.size)
        res = bits_screen(design, response, hyper, rule, self.max_steps)
        self.result_ = res
        self.path_ = np.asarray(res.path, dtype=np.intp)
        self.pi_trace_ = np.asarray(res.pi_trace)
        self.stop_reason_ = res.stop_reason.value
        self._set_support(design, res.selected)
        return self


class _RankingScreener(_BaseScreener):
    _rank = None
    _method = ""

    def __init__(self, stop="fixed", size=None):
        self.stop = stop
        self.size = size

    def _select(self, design, response, ranking):
        if self.stop == "fixed":
            m = design.n if self.size is None else int(self.size)
            return ranking[:m]
        if self.stop == "ebic":
            return ranking[: ebic_decide(design, response, ranking)]
        raise ConfigError(f"{self._method} supports stop='fixed' or 'ebic', got {self.stop!r}")

    def fit(self, X, y):
        design, response = self._validate(X, y)
        res = self._run(design, response)
        self.ranking_ = np.asarray(res.ranking, dtype=np.intp)
        self.scores_ = np.asarray(res.scores)
        self._set_support(design, self._select(design, response, self.ranking_))
        return self


class SISScreener(_RankingScreener):
    """Keep the columns with the largest absolute marginal correlation."""

    _method = "SIS"

    def _run(self, design, response):
        return sis_rank(design, response)


class HOLPScreener(_RankingScreener):
    """Rank by the minimum-norm interpolating coefficients ``X^T (X X^T)^+ y``."""

    _method = "HOLP"

    def _run(self, design, response):
        res = holp_rank(design, response)
        self.coef_ = res.info["beta"]
        return res


class FRScreener(_RankingScreener):
    """Forward regression; ``ranking_`` is the greedy path."""

    _method = "FR"

    def _run(self, design, response):
        cap = default_max_steps(design)
        if self.stop == "fixed" and self.size is not None:
            cap = min(cap, int(self.size))
        return fr_screen(design, response, cap)
