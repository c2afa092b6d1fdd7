"""Synthetic designs E.1-E.7, response generation and screening metrics.

Seeding
-------
Every random draw comes from a PCG64 stream keyed by
``SeedSequence(entropy=seed, spawn_key=(replication, purpose))`` where
``purpose`` is 0 for factor loadings, 1 for covariates and 2 for the
noise.  Replications are therefore independent of the order (or process)
in which they run.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .exceptions import ConfigError

SETTINGS = ("iid", "compound", "ar1", "factor", "group", "extreme", "sparse-factor")

_ALIASES = {
    "e1": "iid", "e.1": "iid", "independent": "iid",
    "e2": "compound", "e.2": "compound", "compoundsym": "compound", "compound-symmetry": "compound",
    "e3": "ar1", "e.3": "ar1", "ar": "ar1", "autoregressive": "ar1",
    "e4": "factor", "e.4": "factor",
    "e5": "group", "e.5": "group",
    "e6": "extreme", "e.6": "extreme", "extremecor": "extreme", "extreme-correlation": "extreme",
    "e7": "sparse-factor", "e.7": "sparse-factor", "sparsefactor": "sparse-factor", "sparse_factor": "sparse-factor",
}

_LOADINGS, _COVARIATES, _NOISE = 0, 1, 2

# E.5: three groups of five near-identical columns.
_GROUPS, _GROUP_SIZE, _GROUP_NOISE_SD = 3, 5, 0.1
# E.6: number of columns built from their own private W.
_EXTREME_TRUE = 9


def canonical_setting(name: str) -> str:
    key = str(name).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in SETTINGS:
        raise ConfigError(f"unknown setting {name!r}; valid settings: {', '.join(SETTINGS)}")
    return key


def _default_truth(setting):
    if setting == "group":
        return _GROUPS * _GROUP_SIZE, 2.0
    if setting == "sparse-factor":
        return 25, 3.0
    return 9, 2.0


@dataclass(frozen=True)
class SimConfig:
    """One simulation design.

    ``n_true`` and ``beta_value`` default to the setting's own truth (nine
    twos; fifteen twos for ``group``; twenty-five threes for
    ``sparse-factor``).  The truth is always the leading ``n_true`` columns.
    ``k_factors`` defaults to 10 for ``factor`` and 5 for ``sparse-factor``.
    """

    setting: str = "iid"
    n: int = 200
    p: int = 2000
    rho: float = 0.5
    k_factors: int | None = None
    r_squared: float = 0.7
    n_true: int | None = None
    beta_value: float | None = None
    replications: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "setting", canonical_setting(self.setting))
        if self.n < 2 or self.p < 1:
            raise ConfigError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not abs(self.rho) < 1:
            raise ConfigError(f"rho must satisfy |rho| < 1, got {self.rho}")
        if self.setting == "compound" and self.rho < 0:
            raise ConfigError("compound symmetry needs rho >= 0")
        if self.k_factors is not None and self.k_factors < 1:
            raise ConfigError("k_factors must be >= 1")
        if not 0.0 < self.r_squared < 1.0:
            raise ConfigError(f"r_squared must lie in (0, 1), got {self.r_squared}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        t = self.truth_size
        if t > self.p:
            raise ConfigError(f"truth size {t} exceeds p={self.p}")
        if self.setting == "group" and self.p < _GROUPS * _GROUP_SIZE:
            raise ConfigError(f"group setting needs p >= {_GROUPS * _GROUP_SIZE}")
        if self.setting == "sparse-factor" and self.p < 5 * self.factors:
            raise ConfigError(f"sparse-factor setting needs p >= {5 * self.factors}")

    @property
    def truth_size(self) -> int:
        return _default_truth(self.setting)[0] if self.n_true is None else int(self.n_true)

    @property
    def beta_magnitude(self) -> float:
        return _default_truth(self.setting)[1] if self.beta_value is None else float(self.beta_value)

    @property
    def factors(self) -> int:
        if self.k_factors is not None:
            return int(self.k_factors)
        return 5 if self.setting == "sparse-factor" else 10

    @property
    def truth(self) -> np.ndarray:
        return np.arange(self.truth_size)

    @property
    def beta(self) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[: self.truth_size] = self.beta_magnitude
        if self.truth_size and self.beta_magnitude == 0.0:
            raise ConfigError("zero signal cannot reach a positive R^2")
        return beta


def _stream(config: SimConfig, rep: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(config.seed), spawn_key=(int(rep), purpose))
    return np.random.Generator(np.random.PCG64(ss))


def factor_loadings(config: SimConfig, rep: int) -> np.ndarray | None:
    """Loading matrix ``F`` (p x k) for the factor settings, else None."""
    if config.setting == "factor":
        return _stream(config, rep, _LOADINGS).standard_normal((config.p, config.factors))
    if config.setting == "sparse-factor":
        k = config.factors
        F = np.zeros((config.p, k))
        dense = _stream(config, rep, _LOADINGS).standard_normal((5, k))
        for j in range(k):
            F[5 * j: 5 * j + 5, j] = dense[:, j]
        return F
    return None


def _sample_rows(config: SimConfig, rng: np.random.Generator, n: int, loadings) -> np.ndarray:
    p, s = config.p, config.setting
    if s == "iid":
        return rng.standard_normal((n, p))
    if s == "compound":
        shared = rng.standard_normal((n, 1))
        return math.sqrt(config.rho) * shared + math.sqrt(1.0 - config.rho) * rng.standard_normal((n, p))
    if s == "ar1":
        import scipy.signal

        rho = config.rho
        c = math.sqrt(1.0 - rho**2)
        e = rng.standard_normal((n, p))
        e[:, 0] /= c
        return scipy.signal.lfilter([c], [1.0, -rho], e, axis=1)
    if s == "factor":
        g = rng.standard_normal((n, loadings.shape[1]))
        return g @ loadings.T + rng.standard_normal((n, p))
    if s == "sparse-factor":
        g = rng.standard_normal((n, loadings.shape[1]))
        return g @ loadings.T + 0.1 * rng.standard_normal((n, p))
    if s == "group":
        Z = rng.standard_normal((n, p))
        latent = rng.standard_normal((n, _GROUPS))
        for g in range(_GROUPS):
            cols = slice(g * _GROUP_SIZE, (g + 1) * _GROUP_SIZE)
            Z[:, cols] = latent[:, [g]] + _GROUP_NOISE_SD * Z[:, cols]
        return Z
    if s == "extreme":
        Z = rng.standard_normal((n, p))
        m = min(_EXTREME_TRUE, p)
        W = rng.standard_normal((n, _EXTREME_TRUE))
        Z[:, :m] = (Z[:, :m] + W[:, :m]) / math.sqrt(2.0)
        if p > m:
            Z[:, m:] = (Z[:, m:] + W.sum(axis=1, keepdims=True)) / 2.0
        return Z
    raise ConfigError(f"unknown setting {s!r}")


def gen_design(config: SimConfig, rep: int) -> np.ndarray:
    """Covariate matrix (n x p) of replication ``rep``; rows are iid N(0, Sigma)."""
    return _sample_rows(config, _stream(config, rep, _COVARIATES), config.n, factor_loadings(config, rep))


def covariance_block(config: SimConfig, cols, loadings=None) -> np.ndarray:
    """Exact ``Sigma[cols, cols]`` of the setting (given its loadings)."""
    cols = np.asarray(cols, dtype=np.intp)
    s = config.setting
    same = cols[:, None] == cols[None, :]
    if s == "iid":
        return same.astype(float)
    if s == "compound":
        return np.where(same, 1.0, config.rho)
    if s == "ar1":
        return config.rho ** np.abs(cols[:, None] - cols[None, :]).astype(float)
    if s in ("factor", "sparse-factor"):
        F = loadings[cols]
        return F @ F.T + (1.0 if s == "factor" else 0.01) * same
    if s == "group":
        grp = np.where(cols < _GROUPS * _GROUP_SIZE, cols // _GROUP_SIZE, -1 - cols)
        return (grp[:, None] == grp[None, :]).astype(float) + _GROUP_NOISE_SD**2 * (same & (cols < _GROUPS * _GROUP_SIZE)[:, None])
    if s == "extreme":
        own = cols < _EXTREME_TRUE
        cov = np.zeros((cols.size, cols.size))
        a, b = own[:, None], own[None, :]
        cov[a & b & same] = 1.0
        cov[~a & ~b] = _EXTREME_TRUE / 4.0
        cov[~a & ~b & same] = (1.0 + _EXTREME_TRUE) / 4.0
        cov[a & ~b] = 1.0 / (2.0 * math.sqrt(2.0))
        cov[~a & b] = 1.0 / (2.0 * math.sqrt(2.0))
        return cov
    raise ConfigError(f"unknown setting {s!r}")


def signal_variance(config: SimConfig, rep: int = 0) -> float:
    """``beta^T Sigma beta`` in closed form (on the truth columns only)."""
    t = config.truth
    if t.size == 0:
        return 0.0
    bt = config.beta[t]
    return float(bt @ covariance_block(config, t, factor_loadings(config, rep)) @ bt)


def empirical_signal_variance(config: SimConfig, rep: int = 0, rows: int = 100_000, chunk: int = 10_000) -> float:
    """Monte Carlo estimate of ``Var(Z beta)`` from fresh rows."""
    rng = np.random.default_rng([int(config.seed), int(rep), 99])
    loadings = factor_loadings(config, rep)
    beta = config.beta
    vals = []
    for start in range(0, rows, chunk):
        Z = _sample_rows(config, rng, min(chunk, rows - start), loadings)
        vals.append(Z @ beta)
    return float(np.var(np.concatenate(vals)))


def gen_response(Z: np.ndarray, config: SimConfig, rep: int) -> np.ndarray:
    """``y = Z beta + sigma eps`` with ``sigma^2 = s (1 - R^2) / R^2``."""
    sv = signal_variance(config, rep)
    if sv <= 0.0:
        raise ConfigError("zero signal cannot reach a positive R^2")
    sigma = math.sqrt(sv * (1.0 - config.r_squared) / config.r_squared)
    eps = _stream(config, rep, _NOISE).standard_normal(Z.shape[0])
    return np.asarray(Z @ config.beta).ravel() + sigma * eps


def evaluate(selected_sets, truth) -> dict:
    """TPR, CP and model-size summaries over replications."""
    selected_sets = [set(map(int, s)) for s in selected_sets]
    if not selected_sets:
        raise ConfigError("need at least one replication")
    truth = set(map(int, truth))
    if truth:
        tpr = [len(s & truth) / len(truth) for s in selected_sets]
    else:
        tpr = [1.0] * len(selected_sets)
    cover = [truth <= s for s in selected_sets]
    sizes = [len(s) for s in selected_sets]
    return {
        "TPR": float(np.mean(tpr)),
        "CP": float(np.mean(cover)),
        "mean_size": float(np.mean(sizes)),
        "median_size": float(np.median(sizes)),
        "replications": len(selected_sets),
    }


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

LAMBDA_PRESETS = {
    "p/n": lambda n, p: p / n,
    "nlogn/p": lambda n, p: n * math.log(n) / p,
    "n/p": lambda n, p: n / p,
}
BITS_ALL_LAMBDAS = ("p/n", "nlogn/p", "n/p")
METHOD_RULES = {
    "bits": ("n", "pp", "ebic"),
    "bits-all": ("n", "pp"),
    "sis": ("n",),
    "holp": ("n", "ebic"),
    "fr": ("n", "ebic"),
}


def resolve_lambda(spec, n: int, p: int) -> float:
    """Numeric ridge penalty from a preset name (``p/n``, ``nlogn/p``,
    ``n/p``) or a number."""
    if isinstance(spec, str) and spec.strip() in LAMBDA_PRESETS:
        return LAMBDA_PRESETS[spec.strip()](n, p)
    try:
        lam = float(spec)
    except (TypeError, ValueError):
        raise ConfigError(f"lambda must be a number or one of {', '.join(LAMBDA_PRESETS)}; got {spec!r}") from None
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    return lam


def parse_method(spec: str) -> tuple[str, str | None]:
    """``'bits:p/n'`` -> ``('bits', 'p/n')``; plain ``'bits'`` means ``p/n``."""
    name, _, arg = str(spec).strip().lower().partition(":")
    if name not in METHOD_RULES:
        raise ConfigError(f"unknown method {spec!r}; valid methods: bits[:lambda], bits-all, sis, holp, fr")
    if name == "bits":
        arg = arg or "p/n"
        resolve_lambda(arg, 2, 2)
        return name, arg
    if arg:
        raise ConfigError(f"method {name!r} takes no argument")
    return name, None


@dataclass
class SimReport:
    """Rows of per-method, per-rule metrics."""

    rows: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    COLUMNS = ("setting", "method", "rule", "TPR", "CP", "mean_size", "median_size", "seconds", "replications", "failures")

    def row(self, method: str, rule: str) -> dict:
        for r in self.rows:
            if r["method"] == method and r["rule"] == rule:
                return r
        raise KeyError((method, rule))

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.COLUMNS), extrasaction="ignore")
            writer.writeheader()
            for r in self.rows:
                writer.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})

    def to_json(self, path) -> None:
        import json

        with open(path, "w") as fh:
            json.dump({"config": self.config, "rows": self.rows}, fh, indent=2)


def _method_label(name, arg):
    return f"bits:{arg}" if name == "bits" else name


def _run_replication(config: SimConfig, rep: int, methods, rules, w: float) -> dict:
    """Selected sets and timings of every (method, rule) on one replication."""
    from .baselines import fr_screen, holp_rank, sis_rank
    from .design import center_response, standardize
    from .engine import default_max_steps, greedy_path
    from .posterior import Hyperparams
    from .stopping import ebic_decide, pp_decide

    Z = gen_design(config, rep)
    y = gen_response(Z, config, rep)
    design = standardize(Z, warn=False)
    response = center_response(y)
    n, p = design.n, design.p
    cap = default_max_steps(design)
    null = -0.5 * (n - 1) * math.log(response.sq_norm)
    out: dict = {}

    bits_cache: dict = {}

    def bits_path(lam_spec):
        if lam_spec not in bits_cache:
            t0 = time.perf_counter()
            state, _ = greedy_path(design, response, Hyperparams(resolve_lambda(lam_spec, n, p), w), cap)
            bits_cache[lam_spec] = (state, time.perf_counter() - t0)
        return bits_cache[lam_spec]

    for name, arg in methods:
        label = _method_label(name, arg)
        wanted = [r for r in rules if r in METHOD_RULES[name]]
        if not wanted:
            continue
        try:
            if name == "bits":
                state, secs = bits_path(arg)
                for rule in wanted:
                    if rule == "n":
                        sel = state.path[:n]
                    elif rule == "pp":
                        sel = state.path[: pp_decide(state.pi_trace, null)]
                    else:
                        sel = state.path[: ebic_decide(design, response, state.path)]
                    out[(label, rule)] = (sel, secs)
            elif name == "bits-all":
                parts = [bits_path(lam) for lam in BITS_ALL_LAMBDAS]
                secs = sum(s for _, s in parts)
                for rule in wanted:
                    sel: set = set()
                    for state, _ in parts:
                        sel |= set(state.path[:n] if rule == "n" else state.path[: pp_decide(state.pi_trace, null)])
                    out[(label, rule)] = (sorted(sel), secs)
            else:
                t0 = time.perf_counter()
                if name == "sis":
                    res = sis_rank(design, response)
                elif name == "holp":
                    res = holp_rank(design, response)
                else:
                    res = fr_screen(design, response, cap)
                secs = time.perf_counter() - t0
                ranking = list(map(int, res.ranking))
                for rule in wanted:
                    if rule == "n":
                        sel = ranking[:n]
                    else:
                        sel = ranking[: ebic_decide(design, response, ranking)]
                    out[(label, rule)] = (sel, secs)
        except Exception as exc:  # recorded per replication, never fatal
            for rule in wanted:
                out[(label, rule)] = exc
    return out


def run_experiment(config: SimConfig, methods=("bits:p/n",), rules=("n",), *, w: float = 0.1, n_jobs: int = 1) -> SimReport:
    """Generate every replication, screen with each method and rule, and
    summarize against the truth."""
    parsed = [parse_method(m) for m in methods]
    rules = [str(r).strip().lower() for r in rules]
    for r in rules:
        if r not in ("n", "pp", "ebic"):
            raise ConfigError(f"unknown rule {r!r}; valid rules: n, pp, ebic")
    if not 0.0 < w < 1.0:
        raise ConfigError(f"w must lie in (0, 1), got {w}")
    reps = range(config.replications)
    if n_jobs == 1:
        results = [_run_replication(config, rep, parsed, rules, w) for rep in reps]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(delayed(_run_replication)(config, rep, parsed, rules, w) for rep in reps)

    report = SimReport(config={**asdict(config), "methods": list(methods), "rules": rules, "w": w})
    keys = []
    for res in results:
        for key in res:
            if key not in keys:
                keys.append(key)
    for label, rule in keys:
        ok = [res[(label, rule)] for res in results if not isinstance(res.get((label, rule)), Exception)]
        failures = config.replications - len(ok)
        row = {"setting": config.setting, "method": label, "rule": rule, "failures": failures}
        if ok:
            row.update(evaluate([sel for sel, _ in ok], config.truth))
            row["seconds"] = float(np.mean([secs for _, secs in ok]))
        else:
            row.update({"TPR": float("nan"), "CP": float("nan"), "mean_size": float("nan"),
                        "median_size": float("nan"), "seconds": float("nan"), "replications": 0})
        report.rows.append(row)
    return report


def with_overrides(config: SimConfig, **kw) -> SimConfig:
    return replace(config, **kw)
