"""Resilience evaluation: accuracy under faults, rate sweeps, AUC.

The single-number resilience score is the area under the accuracy versus
normalized fault rate curve, computed with the trapezoidal rule.  Both
axes are normalized (x by the largest rate in the grid, y by the ideal
100% accuracy), so a network holding perfect accuracy at every considered
rate scores exactly 1.
"""

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import batch_images, labels_of
from .errors import ConfigError
from .faults import NETWORK_SCOPE, FaultMask, FaultSpec, draw_mask
from .model import Model, forward
from .ops import classify_batch

DEFAULT_FAULT_RATES = (0.0, 1e-8, 5e-8, 1e-7, 5e-7, 1e-6, 5e-6, 1e-5)


@dataclass(frozen=True)
class SweepConfig:
    """Grid of fault rates and trial counts for one resilience sweep."""

    fault_rates: tuple = DEFAULT_FAULT_RATES
    trials_per_rate: int = 50
    scope: object = NETWORK_SCOPE
    base_seed: int = 0
    eval_set: tuple = ()  # the evaluation samples themselves
    include_biases: bool = True
    x_scale: str = "linear"  # "linear": x = r/r_max; "index": equispaced grid points

    def __post_init__(self):
        rates = tuple(float(r) for r in self.fault_rates)
        if len(rates) < 1 or rates[0] != 0.0:
            raise ConfigError("fault rate grid must start at 0 (baseline anchor)")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ConfigError("fault rate grid must be strictly ascending")
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ConfigError("fault rates must lie in [0,1]")
        if self.trials_per_rate < 1:
            raise ConfigError("trials_per_rate must be >= 1")
        if self.x_scale not in ("linear", "index"):
            raise ConfigError(f"unknown x_scale {self.x_scale!r}")
        object.__setattr__(self, "fault_rates", rates)
        object.__setattr__(self, "eval_set", tuple(self.eval_set))


@dataclass(frozen=True)
class RateSummary:
    rate: float
    mean: float
    min: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    accuracies: tuple  # per rate: tuple of per-trial accuracies
    degenerate_trials: int = 0  # trials that produced any all-NaN logits

    @property
    def rates(self) -> tuple:
        return self.config.fault_rates

    @property
    def mean_accuracies(self) -> tuple:
        return tuple(float(np.mean(a)) for a in self.accuracies)

    def summaries(self) -> tuple:
        out = []
        for rate, accs in zip(self.rates, self.accuracies):
            a = np.asarray(accs)
            out.append(
                RateSummary(
                    rate=rate,
                    mean=float(a.mean()),
                    min=float(a.min()),
                    q1=float(np.quantile(a, 0.25)),
                    median=float(np.quantile(a, 0.5)),
                    q3=float(np.quantile(a, 0.75)),
                    max=float(a.max()),
                )
            )
        return tuple(out)


@dataclass(frozen=True)
class AucResult:
    auc: float
    grid: tuple  # normalized (x, y) points actually integrated


@dataclass(frozen=True)
class EvalStats:
    accuracy: float
    correct: int
    total: int
    degenerate: int  # samples whose logits were entirely NaN


def evaluate_detailed(model: Model, eval_set, mask: FaultMask | None = None) -> EvalStats:
    """Classification accuracy plus degenerate-logit bookkeeping."""
    samples = list(eval_set)
    if not samples:
        raise ConfigError("evaluation set is empty")
    logits = forward(model, batch_images(samples), mask=mask)
    preds = classify_batch(logits)
    correct = int(np.count_nonzero(preds == labels_of(samples)))
    degenerate = int(np.count_nonzero(np.all(np.isnan(logits), axis=1)))
    return EvalStats(correct / len(samples), correct, len(samples), degenerate)


def evaluate_accuracy(model: Model, eval_set, mask: FaultMask | None = None) -> float:
    """Fraction of samples classified to their true label."""
    return evaluate_detailed(model, eval_set, mask).accuracy


def run_sweep(model: Model, cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Accuracy at every (rate, trial) grid point.

    Trial masks are keyed by (base_seed, trial, rate), so the result is a
    pure function of the config; tasks are keyed, making the aggregation
    independent of the parallelism degree.
    """
    if not cfg.eval_set:
        raise ConfigError("sweep config has an empty evaluation set")

    def one(rate: float, trial: int) -> EvalStats:
        if rate == 0.0:
            mask = None
        else:
            spec = FaultSpec(
                rate=rate,
                scope=cfg.scope,
                seed=cfg.base_seed,
                trial_id=trial,
                include_biases=cfg.include_biases,
            )
            mask = draw_mask(model, spec)
        return evaluate_detailed(model, cfg.eval_set, mask)

    tasks = [(rate, trial) for rate in cfg.fault_rates for trial in range(cfg.trials_per_rate)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            stats = dict(zip(tasks, pool.map(lambda rt: one(*rt), tasks)))
    else:
        stats = {rt: one(*rt) for rt in tasks}

    accuracies = tuple(
        tuple(stats[(rate, trial)].accuracy for trial in range(cfg.trials_per_rate))
        for rate in cfg.fault_rates
    )
    degenerate = sum(1 for s in stats.values() if s.degenerate)
    return SweepResult(cfg, accuracies, degenerate)


def compute_auc(sweep, x_scale: str | None = None) -> AucResult:
    """Trapezoidal area under the normalized accuracy-vs-rate curve.

    Accepts a SweepResult (mean accuracy per rate) or an explicit
    (rates, accuracies) curve.  x is normalized by the largest rate
    (or mapped to equispaced points with ``x_scale="index"``); y is the
    accuracy as a fraction of the 100% ideal.  The sum is normalized by
    the integrated x-span so the all-ones curve scores exactly 1.0.
    """
    if isinstance(sweep, SweepResult):
        rates = np.asarray(sweep.rates, dtype=np.float64)
        ys = np.asarray(sweep.mean_accuracies, dtype=np.float64)
        if x_scale is None:
            x_scale = sweep.config.x_scale
    else:
        rates, ys = sweep
        rates = np.asarray(rates, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if x_scale is None:
            x_scale = "linear"
    if rates.size < 2:
        raise ConfigError("AUC needs at least 2 grid points")
    if np.any(np.diff(rates) <= 0):
        raise ConfigError("AUC grid must be strictly ascending")

    if x_scale == "index":
        x = np.linspace(0.0, 1.0, rates.size)
    else:
        x = rates / rates[-1]
    dx = np.diff(x)
    area = float(np.sum(0.5 * (ys[:-1] + ys[1:]) * dx))
    span = float(np.sum(dx))
    auc = area / span
    return AucResult(auc=auc, grid=tuple(zip((float(v) for v in x), (float(v) for v in ys))))


# ---------------------------------------------------------------------------
# serialization


def sweep_to_csv(result: SweepResult, provenance: dict | None = None) -> str:
    """Per-trial rows: rate, trial, accuracy (6 decimal places)."""
    buf = io.StringIO()
    if provenance is not None:
        buf.write(
            "# config_hash=%s seed=%s version=%s\n"
            % (provenance["config_hash"], provenance["seed"], provenance["version"])
        )
    buf.write("rate,trial,accuracy\n")
    for rate, accs in zip(result.rates, result.accuracies):
        for trial, acc in enumerate(accs):
            buf.write(f"{rate:.10g},{trial},{acc:.6f}\n")
    return buf.getvalue()


def sweep_to_json(result: SweepResult, auc: AucResult | None = None, provenance: dict | None = None) -> dict:
    doc = {
        "fault_rates": list(result.rates),
        "trials_per_rate": result.config.trials_per_rate,
        "scope": result.config.scope,
        "base_seed": result.config.base_seed,
        "degenerate_trials": result.degenerate_trials,
        "per_rate": [
            {
                "rate": s.rate,
                "mean": s.mean,
                "min": s.min,
                "q1": s.q1,
                "median": s.median,
                "q3": s.q3,
                "max": s.max,
            }
            for s in result.summaries()
        ],
    }
    if auc is not None:
        doc["auc"] = auc.auc
        doc["auc_grid"] = [list(p) for p in auc.grid]
    if provenance is not None:
        doc["provenance"] = provenance
    return doc
