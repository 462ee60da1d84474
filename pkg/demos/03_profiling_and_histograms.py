# Step 1 of the hardening methodology: profile per-layer activation
# maxima on calibration data, and see how fault injection pushes
# activation mass past the clean range (the overflow bin).

import os

from faultclip import FaultSpec, draw_mask, load_model, profile
from faultclip.data import make_synthetic_set
from faultclip.profiling import activation_histogram

HERE = os.path.dirname(__file__)
model = load_model(os.path.join(HERE, "..", "tests", "fixtures", "lenet-fixture.ftc"))
samples = make_synthetic_set(seed=2024, n=512)
calibration = samples[:128]

prof = profile(model, calibration)
print(f"profiled {prof.sample_count} calibration samples")
for lp in prof.layer_profiles:
    print(f"  {lp.name} (layer {lp.layer_index}): "
          f"act_max={lp.act_max:8.3f}  p99.9={lp.p999:8.3f}  "
          f"overflow={lp.overflow}")

# Clean runs never exceed their own maximum. Under injection, corrupted
# weights produce activations far outside the calibrated range.
clean_hi = prof.act_max[0]
clean = activation_histogram(model, calibration[:16], layer=1, hi=clean_hi)
print(f"\nclean run, first activation layer: overflow bin = {clean['overflow']}")

mask = draw_mask(model, FaultSpec(rate=1e-2, scope=0, seed=7, trial_id=0))
faulty = activation_histogram(model, calibration[:16], layer=1, mask=mask, hi=clean_hi)
print(f"with {len(mask)} flips in conv-1:   overflow bin = {faulty['overflow']}")

top = [i for i, c in enumerate(faulty["counts"]) if c][-3:]
print(f"highest occupied bins (of {len(faulty['counts'])}): {top}")
