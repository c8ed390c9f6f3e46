"""Monte Carlo harness: scenario generation, replicated fits and trimmed summaries.

Scenarios
---------
C0  clean rows, x ~ N_p(0, I), y | x ~ Bernoulli(F(gamma0 + x'beta0)).
CA  clean rows plus ceil(eps n) misclassified rows with x ~ N_p(0, 20 I) and
    y = 1 exactly when gamma0 + x'beta0 < 0.
CB  clean rows plus ceil(eps n) high-leverage rows x = m sqrt(p) beta0 / 5 + u,
    u ~ N_p(0, I/100), all with y = 0.

Estimators are named ``<loss>-<penalty>-<selection>``, e.g. ``wm-mcp-rcv``:
the loss prefix is one of ml, ls, m, div (w-prefixed for hard-rejection
weights), the penalty any :class:`PenaltyFamily` value, and the selection ``cv``,
``rcv`` or ``lam=<value>`` for a fixed penalty level.
"""

from __future__ import annotations

import enum
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .crossval import Criterion, CvConfig, cross_validate, default_lambda_grid
from .losses import LossSpec, logistic
from .optimizer import Dataset, FitConfig, fit, fit_path, resolve_weights
from .penalties import PenaltyFamily, PenaltySpec

__all__ = [
    "Scheme",
    "ScenarioSpec",
    "EstimatorSpec",
    "ReplicationMetrics",
    "MetricsSummary",
    "ExperimentResult",
    "generate",
    "compute_metrics",
    "trimmed_mean",
    "run_experiment",
    "worker_count",
]

TRIM = 0.1
# fewer replications make the 10% trimming drop nothing
MIN_REPLICATIONS = 10


class Scheme(str, enum.Enum):
    C0 = "c0"
    CA = "ca"
    CB = "cb"


def _default_beta(p):
    beta = np.zeros(p)
    beta[: min(5, p)] = 1.0
    return beta


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    p: int
    beta0: tuple[float, ...] | None = None
    gamma0: float = 0.0
    scheme: Scheme = Scheme.C0
    epsilon: float = 0.0
    m: float = 1.0
    test_size: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1 or self.test_size < 1:
            raise ValueError("n, p and test_size must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        beta = _default_beta(self.p) if self.beta0 is None else np.asarray(self.beta0, dtype=float)
        if beta.shape != (self.p,):
            raise ValueError("beta0 must have length p")
        object.__setattr__(self, "beta0", tuple(float(v) for v in beta))
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.beta0)

    @property
    def n_contaminated(self) -> int:
        if self.scheme is Scheme.C0:
            return 0
        # guard against eps * n landing a hair above an integer
        return math.ceil(self.epsilon * self.n - 1e-9)

    @property
    def label(self) -> str:
        return self.scheme.value


def _clean_rows(rng, n, beta, gamma0):
    X = rng.standard_normal((n, beta.size))
    y = (rng.random(n) < logistic(gamma0 + X @ beta)).astype(float)
    return X, y


def generate(scenario: ScenarioSpec, rng=None) -> tuple[Dataset, Dataset]:
    """Training sample (clean rows first, contaminated rows appended) and a clean test sample."""
    if rng is None:
        rng = np.random.default_rng(scenario.rng_seed)
    beta, g0 = scenario.beta, scenario.gamma0
    X, y = _clean_rows(rng, scenario.n, beta, g0)
    k = scenario.n_contaminated
    if k:
        p = scenario.p
        if scenario.scheme is Scheme.CA:
            Xc = math.sqrt(20.0) * rng.standard_normal((k, p))
            yc = (g0 + Xc @ beta < 0).astype(float)
        else:
            center = scenario.m * math.sqrt(p) * beta / 5.0
            Xc = center + 0.1 * rng.standard_normal((k, p))
            yc = np.zeros(k)
        X = np.vstack([X, Xc])
        y = np.concatenate([y, yc])
    Xt, yt = _clean_rows(rng, scenario.test_size, beta, g0)
    return Dataset(X, y), Dataset(Xt, yt)


# ------------------------------------------------------------------ metrics

@dataclass(frozen=True)
class ReplicationMetrics:
    pmse: float
    mse: float
    tpp: float
    tnp: float | None


def compute_metrics(result, scenario: ScenarioSpec, test: Dataset) -> ReplicationMetrics:
    """PMSE on the test rows, squared slope error and the true positive / null proportions.

    ``result`` is anything with ``intercept`` and ``beta`` attributes.
    """
    beta0 = scenario.beta
    beta = np.asarray(result.beta, dtype=float)
    p_true = logistic(test.X @ beta0 + scenario.gamma0)
    p_hat = logistic(test.X @ beta + result.intercept)
    pmse = float(np.mean((p_true - p_hat) ** 2))
    mse = float(np.sum((beta - beta0) ** 2))
    signal = beta0 != 0
    tpp = float(np.mean(beta[signal] != 0)) if signal.any() else float("nan")
    tnp = float(np.mean(beta[~signal] == 0)) if (~signal).any() else None
    return ReplicationMetrics(pmse, mse, tpp, tnp)


def trimmed_mean(values, proportion: float = TRIM) -> float:
    """Mean after dropping floor(proportion * R) values from each tail."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return float("nan")
    g = math.floor(proportion * v.size + 1e-9)
    return float(v[g: v.size - g].mean())


# ------------------------------------------------------------------ estimators

_LOSSES = {
    "ml": LossSpec.deviance,
    "ls": LossSpec.least_squares,
    "m": LossSpec.croux,
    "div": LossSpec.divergence,
}


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    fit: FitConfig
    selection: str = "rcv"
    lam: float = 0.0
    grid_size: int = 20
    k_folds: int = 5

    @classmethod
    def parse(cls, text: str, grid_size: int = 20, k_folds: int = 5, **fit_kw) -> "EstimatorSpec":
        parts = text.strip().lower().split("-")
        if len(parts) != 3:
            raise ValueError(f"estimator {text!r} is not <loss>-<penalty>-<selection>")
        prefix, pen, sel = parts
        weights = "none"
        if prefix not in _LOSSES and prefix.startswith("w"):
            weights, prefix = "hard", prefix[1:]
        if prefix not in _LOSSES:
            raise ValueError(f"unknown loss prefix in {text!r}")
        family = PenaltyFamily(pen)
        lam = 0.0
        if sel.startswith("lam="):
            lam = float(sel[4:])
            sel = "fixed"
        elif sel not in ("cv", "rcv"):
            raise ValueError(f"unknown selection rule in {text!r}")
        cfg = FitConfig(loss=_LOSSES[prefix](), penalty=PenaltySpec(family, lam),
                        weights=weights, **fit_kw)
        return cls(text, cfg, sel, lam, grid_size, k_folds)

    def group_key(self):
        # estimators sharing everything but the selection rule share their fits
        return (self.fit, self.grid_size, self.k_folds, self.selection == "fixed", self.lam
                if self.selection == "fixed" else None)


@dataclass
class MetricsSummary:
    estimator: str
    pmse: float
    mse: float
    tpp: float
    tnp: float | None
    reps_used: int
    failures: int
    raw: dict = field(repr=False, default_factory=dict)

    def row(self, scenario: ScenarioSpec) -> dict:
        return {
            "estimator": self.estimator,
            "scheme": scenario.label,
            "n": scenario.n,
            "p": scenario.p,
            "epsilon": scenario.epsilon,
            "m": scenario.m,
            "pmse": self.pmse,
            "mse": self.mse,
            "tpp": self.tpp,
            "tnp": self.tnp,
            "reps_used": self.reps_used,
        }


@dataclass
class ExperimentResult:
    scenario: ScenarioSpec
    summaries: dict[str, MetricsSummary]
    records: list[dict]


def _seeds(seed, rep):
    data_ss, fold_ss, fit_ss = np.random.SeedSequence([seed, rep]).spawn(3)
    return (np.random.default_rng(data_ss), int(fold_ss.generate_state(1, np.uint64)[0]),
            int(fit_ss.generate_state(1, np.uint64)[0]))


def _run_group(train: Dataset, members, fold_seed, fit_seed):
    """Fits for estimators that differ only in the selection rule; yields (spec, lam, result)."""
    head = members[0]
    cfg = replace(head.fit, rng_seed=fit_seed)
    if head.selection == "fixed":
        res = fit(train, cfg.with_lambda(head.lam))
        return [(spec, head.lam, res) for spec in members]
    weights, _ = resolve_weights(train, cfg)
    grid = default_lambda_grid(train, cfg, head.grid_size, weights=weights)
    cv = cross_validate(train, CvConfig(tuple(grid), cfg, head.k_folds, rng_seed=fold_seed))
    path = fit_path(train, cfg, cv.lambdas, weights=weights)
    out = []
    for spec in members:
        lam = cv.chosen(Criterion(spec.selection))
        out.append((spec, lam, path[int(np.flatnonzero(cv.lambdas == lam)[0])]))
    return out


def _replicate(args):
    scenario, estimators, seed, rep = args
    data_rng, fold_seed, fit_seed = _seeds(seed, rep)
    train, test = generate(scenario, data_rng)
    groups = defaultdict(list)
    for spec in estimators:
        groups[spec.group_key()].append(spec)
    records = []
    for members in groups.values():
        try:
            results = _run_group(train, members, fold_seed, fit_seed)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            for spec in members:
                records.append({"rep": rep, "estimator": spec.name, "error": str(exc)})
            continue
        for spec, lam, res in results:
            met = compute_metrics(res, scenario, test)
            records.append({"rep": rep, "estimator": spec.name, "lambda": lam,
                            "n_active": len(res.active_set), "converged": res.converged,
                            **asdict(met)})
    order = {spec.name: i for i, spec in enumerate(estimators)}
    records.sort(key=lambda r: order[r["estimator"]])
    return records


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("RSL_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(scenario: ScenarioSpec, estimators, replications: int = 50,
                   seed: int | None = None, n_jobs: int | None = None) -> ExperimentResult:
    """Replicated generate -> select lambda -> fit -> score pipeline.

    Replication r draws everything from ``SeedSequence([seed, r])``, so results
    do not depend on ``n_jobs`` (default: the ``RSL_THREADS`` environment
    variable, else 1).
    """
    if replications < MIN_REPLICATIONS:
        raise ValueError(f"need at least {MIN_REPLICATIONS} replications, got {replications}")
    specs = [EstimatorSpec.parse(e) if isinstance(e, str) else e for e in estimators]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("estimator names must be unique")
    seed = scenario.rng_seed if seed is None else seed
    jobs = [(scenario, specs, seed, rep) for rep in range(replications)]
    n_jobs = worker_count() if n_jobs is None else n_jobs
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            per_rep = list(pool.map(_replicate, jobs))
    else:
        per_rep = [_replicate(job) for job in jobs]
    records = [r for rows in per_rep for r in rows]

    summaries = {}
    for name in names:
        ok = [r for r in records if r["estimator"] == name and "error" not in r]
        failures = sum(1 for r in records if r["estimator"] == name and "error" in r)
        raw = {key: np.array([r[key] for r in ok], dtype=float)
               for key in ("pmse", "mse", "tpp", "lambda")}
        tnp_vals = [r["tnp"] for r in ok if r["tnp"] is not None]
        raw["tnp"] = np.array(tnp_vals, dtype=float)
        summaries[name] = MetricsSummary(
            estimator=name,
            pmse=trimmed_mean(raw["pmse"]),
            mse=trimmed_mean(raw["mse"]),
            tpp=trimmed_mean(raw["tpp"]),
            tnp=trimmed_mean(raw["tnp"]) if tnp_vals else None,
            reps_used=len(ok),
            failures=failures,
            raw=raw,
        )
    return ExperimentResult(scenario, summaries, records)
