# Steps 2 and 3: replace unbounded activations with clipped ones, then
# fine-tune each clip threshold by interval search over the resilience
# AUC. Ends with the headline comparison: unprotected vs ACT_max-clipped
# vs tuned, on identical fault seeds.
#
# Uses the canonical search budget (10 trials per rate inside tuning,
# up to 10 iterations per layer); takes a couple of minutes. Tighter
# budgets run faster but the low-trial AUC estimates get noisy enough
# that a layer can settle on a worse threshold.

import os

from faultclip import (
    SweepConfig,
    TuneConfig,
    compute_auc,
    load_model,
    profile,
    run_sweep,
    set_thresholds,
    strip_thresholds,
    tune_network,
)
from faultclip.data import make_synthetic_set

HERE = os.path.dirname(__file__)
model = load_model(os.path.join(HERE, "..", "tests", "fixtures", "lenet-fixture.ftc"))
samples = make_synthetic_set(seed=2024, n=512)
calibration, evaluation = samples[:128], samples[128:384]  # disjoint by slicing

rates = (0.0, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3)
prof = profile(model, calibration)

cfg = TuneConfig(
    sweep=SweepConfig(fault_rates=rates, trials_per_rate=10, base_seed=99,
                      eval_set=calibration),
    max_iters=10,
    min_iters=3,
    delta=0.01,
    fault_scope="layer",
)
tuned, traces = tune_network(model, prof, cfg, jobs=4)

print("per-layer search traces:")
for ordinal, trace in traces.items():
    am = prof.act_max[ordinal]
    print(f"  activation {ordinal}: act_max={am:.3f} -> T={trace.t_optimum:.3f} "
          f"({len(trace.iterations)} iterations, {trace.exit_reason})")
    for it in trace.iterations:
        aucs = " ".join(f"{a:.3f}" for a in it.aucs)
        print(f"    S=[{it.interval.lo:7.3f}, {it.interval.hi:7.3f}]  AUCs: {aucs}")

eval_cfg = SweepConfig(fault_rates=rates, trials_per_rate=50, scope="network",
                       base_seed=1, eval_set=evaluation)
print("\nfinal comparison on held-out data, identical fault seeds:")
for name, variant in (
    ("unprotected", strip_thresholds(model)),
    ("ACT_max clip", set_thresholds(model, prof.act_max)),
    ("tuned clip", tuned),
):
    sweep = run_sweep(variant, eval_cfg, jobs=4)
    auc = compute_auc(sweep).auc
    means = " ".join(f"{m:.3f}" for m in sweep.mean_accuracies)
    print(f"  {name:12s} AUC={auc:.4f}   mean acc per rate: {means}")
