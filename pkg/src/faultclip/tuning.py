"""Per-layer clip-threshold fine-tuning by iterative interval search.

The search exploits two empirical facts about the AUC-versus-threshold
curve of a clipped activation layer: it is bell shaped, and its peak lies
below the profiled activation maximum.  Each iteration splits the current
search interval into three equal sub-intervals, scores the resilience AUC
at the four boundaries, and keeps the neighborhood of the best boundary:
the sub-interval next to an edge winner (width/3) or the two around an
interior winner (2*width/3).  The loop stops after ``max_iters``
iterations, or earlier once at least ``min_iters`` iterations ran and the
adjacent boundary AUCs differ by at most ``delta``.

Layers are tuned greedily, one at a time: each tuned threshold is
committed before the next layer starts, with every other layer held at
its current value.
"""

import warnings
from dataclasses import dataclass, replace

from . import seeding
from .errors import ConfigError
from .faults import NETWORK_SCOPE
from .metrics import SweepConfig, compute_auc, run_sweep
from .model import Model, set_thresholds, with_threshold
from .profiling import ActivationProfile

EXIT_MAX_ITERS = "max_iters"
EXIT_PLATEAU = "plateau"
EXIT_INACTIVE = "layer-inactive"


@dataclass(frozen=True)
class TuneConfig:
    """Iteration budget, plateau tolerance, and the sweep used for scoring."""

    sweep: SweepConfig
    max_iters: int = 10  # N
    min_iters: int = 3  # M, required before a plateau exit
    delta: float = 0.01  # AUC plateau tolerance
    layer_order: tuple | None = None  # activation ordinals; default input-to-output
    fault_scope: str = "layer"  # "layer": faults in the layer feeding the tuned
    # activation; "network": faults everywhere

    def __post_init__(self):
        if not self.min_iters < self.max_iters:
            raise ConfigError(
                f"min_iters must be < max_iters, got {self.min_iters} >= {self.max_iters}"
            )
        if self.delta < 0:
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        if self.fault_scope not in ("layer", "network"):
            raise ConfigError(f"unknown fault_scope {self.fault_scope!r}")


@dataclass(frozen=True)
class SearchInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ConfigError(f"interval lo must be <= hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def boundaries(self) -> tuple:
        """T1..T4: the interval ends plus the two interior third points."""
        step = (self.hi - self.lo) / 3.0
        t1 = self.lo
        t2 = t1 + step
        t3 = t2 + step
        return (t1, t2, t3, self.hi)


@dataclass(frozen=True)
class TuneIteration:
    interval: SearchInterval
    boundaries: tuple  # T1..T4
    aucs: tuple  # AUC at each boundary
    deltas: tuple  # |AUC_{i+1} - AUC_i| for i = 1..3
    chosen_t: float  # the algorithm's running threshold after this iteration


@dataclass(frozen=True)
class TuneTrace:
    act_ordinal: int
    iterations: tuple
    exit_reason: str
    t_optimum: float

    def to_json(self) -> dict:
        return {
            "act_ordinal": self.act_ordinal,
            "exit_reason": self.exit_reason,
            "t_optimum": self.t_optimum,
            "iterations": [
                {
                    "interval": [it.interval.lo, it.interval.hi],
                    "boundaries": list(it.boundaries),
                    "aucs": list(it.aucs),
                    "deltas": list(it.deltas),
                    "chosen_t": it.chosen_t,
                }
                for it in self.iterations
            ],
        }


def interval_search_step(boundaries, aucs) -> tuple:
    """Shrink around the best boundary; ties break toward the lowest index.

    Returns (new interval, best threshold).  An edge winner keeps only its
    adjacent sub-interval; an interior winner keeps both neighbors.
    """
    if len(boundaries) != 4 or len(aucs) != 4:
        raise ConfigError("interval search needs exactly 4 boundary/AUC pairs")
    best = max(range(4), key=lambda i: (aucs[i], -i))
    if best == 3:
        shrunk = SearchInterval(boundaries[2], boundaries[3])
    elif best == 0:
        shrunk = SearchInterval(boundaries[0], boundaries[1])
    else:
        shrunk = SearchInterval(boundaries[best - 1], boundaries[best + 1])
    return shrunk, float(boundaries[best])


def _tuning_seed(base_seed: int, act_ordinal: int, iteration: int) -> int:
    """Deterministic sweep seed for one scoring pass; shared by the four
    boundary evaluations so equal thresholds always score equal AUCs."""
    return seeding.derive_key("tune", base_seed, act_ordinal, iteration) % (2**63)


def auc_calculation(
    model: Model,
    act_ordinal: int,
    interval: SearchInterval,
    sweep: SweepConfig,
    iteration: int = 1,
    jobs: int = 1,
) -> tuple:
    """Score the four interval boundaries: set the layer's threshold to
    each T_i, run the fault-rate sweep, and compute the resilience AUC.

    Other layers keep their current thresholds; the input model is
    immutable, so its own threshold is untouched.
    """
    seed = _tuning_seed(sweep.base_seed, act_ordinal, iteration)
    cfg = replace(sweep, base_seed=seed)
    aucs = []
    for t in interval.boundaries:
        variant = with_threshold(model, act_ordinal, t)
        aucs.append(compute_auc(run_sweep(variant, cfg, jobs=jobs)).auc)
    return interval.boundaries, tuple(aucs)


def tune_layer(
    model: Model | None,
    act_ordinal: int,
    act_max: float,
    cfg: TuneConfig,
    jobs: int = 1,
    objective=None,
) -> tuple:
    """Find the clip threshold maximizing the resilience AUC of one layer.

    The search starts on [0, act_max].  ``objective`` replaces the
    sweep-based scoring with a plain threshold->AUC function (used by the
    convergence tests); production runs leave it None.

    Returns (threshold, trace).
    """
    if act_max <= 0:
        warnings.warn(
            f"layer-inactive: activation layer {act_ordinal} peaks at {act_max}; "
            "keeping its profiled maximum",
            RuntimeWarning,
            stacklevel=2,
        )
        return float(act_max), TuneTrace(act_ordinal, (), EXIT_INACTIVE, float(act_max))

    if objective is None:
        if model is None or model.thresholds is None:
            raise ConfigError("tune_layer needs a model with initialized clip thresholds")
        scope = (
            model.feeding_param_layer(act_ordinal)
            if cfg.fault_scope == "layer"
            else NETWORK_SCOPE
        )
        sweep = replace(cfg.sweep, scope=scope)

        def score(interval: SearchInterval, iteration: int) -> tuple:
            return auc_calculation(model, act_ordinal, interval, sweep, iteration, jobs)

    else:

        def score(interval: SearchInterval, iteration: int) -> tuple:
            return interval.boundaries, tuple(float(objective(t)) for t in interval.boundaries)

    records = []
    counter = 1
    interval = SearchInterval(0.0, float(act_max))
    boundaries, aucs = score(interval, counter)
    # T is only assigned by the shrink step (iterations >= 2); until then the
    # best initial boundary stands in so an early exit stays well-defined.
    t_current = float(boundaries[max(range(4), key=lambda i: (aucs[i], -i))])
    exit_reason = EXIT_MAX_ITERS
    while True:
        counter += 1
        deltas = tuple(abs(aucs[i + 1] - aucs[i]) for i in range(3))
        records.append(TuneIteration(interval, boundaries, aucs, deltas, t_current))
        if max(deltas) <= cfg.delta and counter >= cfg.min_iters:
            exit_reason = EXIT_PLATEAU
            break
        if counter > cfg.max_iters:
            break
        interval, t_current = interval_search_step(boundaries, aucs)
        boundaries, aucs = score(interval, counter)

    return t_current, TuneTrace(act_ordinal, tuple(records), exit_reason, t_current)


def tune_network(model: Model, profile: ActivationProfile, cfg: TuneConfig, jobs: int = 1) -> tuple:
    """Clip every activation at its profiled maximum, then fine-tune the
    thresholds layer by layer (greedy: each result is committed before the
    next layer is tuned).

    Returns (tuned model, {act_ordinal: trace}).
    """
    act_max = profile.act_max
    n_act = len(model.activation_layer_indices)
    if len(act_max) != n_act:
        raise ConfigError(
            f"profile covers {len(act_max)} activation layers, model has {n_act}"
        )
    order = cfg.layer_order if cfg.layer_order is not None else tuple(range(n_act))
    if sorted(order) != list(range(n_act)):
        raise ConfigError(f"layer_order must be a permutation of 0..{n_act - 1}, got {order}")

    current = set_thresholds(model, act_max)
    traces = {}
    for act_ordinal in order:
        t_opt, trace = tune_layer(current, act_ordinal, act_max[act_ordinal], cfg, jobs=jobs)
        traces[act_ordinal] = trace
        if trace.exit_reason != EXIT_INACTIVE:
            current = with_threshold(current, act_ordinal, t_opt)
    return current, traces
