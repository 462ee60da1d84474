"""Activation profiling over calibration data.

Runs the fault-free model on the calibration set and records, per
activation layer, the maximum observed activation (the initial clip
threshold), a fixed-bin histogram of the activation distribution, and a
robust high quantile.  The maximum is the only statistic the tuning
algorithm consumes; the rest supports distribution plots and deployments
that prefer robust maxima.
"""

import json
from dataclasses import dataclass

import numpy as np

from .data import batch_images
from .errors import ConfigError
from .model import Model, forward

HISTOGRAM_BINS = 100


@dataclass(frozen=True)
class LayerProfile:
    name: str  # e.g. "activation_0"
    layer_index: int  # index into model.layers
    act_max: float
    p999: float
    bin_edges: tuple
    counts: tuple
    underflow: int
    overflow: int


@dataclass(frozen=True)
class ActivationProfile:
    layer_profiles: tuple  # one LayerProfile per activation layer, in order
    sample_count: int

    @property
    def act_max(self) -> tuple:
        return tuple(lp.act_max for lp in self.layer_profiles)

    def to_json(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "layers": [
                {
                    "name": lp.name,
                    "layer_index": lp.layer_index,
                    "act_max": lp.act_max,
                    "p999": lp.p999,
                    "histogram": {
                        "bin_edges": list(lp.bin_edges),
                        "counts": list(lp.counts),
                        "underflow": lp.underflow,
                        "overflow": lp.overflow,
                    },
                }
                for lp in self.layer_profiles
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "ActivationProfile":
        layers = tuple(
            LayerProfile(
                name=str(l["name"]),
                layer_index=int(l["layer_index"]),
                act_max=float(l["act_max"]),
                p999=float(l["p999"]),
                bin_edges=tuple(l["histogram"]["bin_edges"]),
                counts=tuple(l["histogram"]["counts"]),
                underflow=int(l["histogram"]["underflow"]),
                overflow=int(l["histogram"]["overflow"]),
            )
            for l in obj["layers"]
        )
        return ActivationProfile(layers, int(obj["sample_count"]))


def histogram_with_overflow(values: np.ndarray, bins: int, hi: float) -> dict:
    """Linear bins over [0, hi]; non-finite and > hi values land in a
    dedicated overflow bin, negatives in an underflow bin, so the counts
    always sum to the element count."""
    values = np.asarray(values, dtype=np.float64).ravel()
    hi = float(hi) if hi > 0 else 1.0
    finite = np.isfinite(values)
    overflow = int(np.count_nonzero(~finite | (values > hi)))
    underflow = int(np.count_nonzero(finite & (values < 0)))
    in_range = values[finite & (values >= 0) & (values <= hi)]
    counts, edges = np.histogram(in_range, bins=bins, range=(0.0, hi))
    return {
        "bin_edges": tuple(float(e) for e in edges),
        "counts": tuple(int(c) for c in counts),
        "underflow": underflow,
        "overflow": overflow,
    }


def _collect_activations(model: Model, samples, mask=None, layer_indices=None, chunk: int = 64):
    """Concatenated per-layer output values over all samples."""
    if layer_indices is None:
        layer_indices = model.activation_layer_indices
    collected = {li: [] for li in layer_indices}
    for start in range(0, len(samples), chunk):
        x = batch_images(samples[start : start + chunk])
        _, taps = forward(model, x, mask=mask, collect=layer_indices)
        for li in layer_indices:
            collected[li].append(np.asarray(taps[li], dtype=np.float64).ravel())
    return {li: np.concatenate(parts) for li, parts in collected.items()}


def profile(model: Model, calibration) -> ActivationProfile:
    """Per-activation-layer statistics from a fault-free calibration pass."""
    if not calibration:
        raise ConfigError("calibration set is empty")
    values = _collect_activations(model, list(calibration))
    profiles = []
    for ordinal, li in enumerate(model.activation_layer_indices):
        v = values[li]
        act_max = float(v.max())
        hist = histogram_with_overflow(v, HISTOGRAM_BINS, act_max)
        profiles.append(
            LayerProfile(
                name=f"activation_{ordinal}",
                layer_index=li,
                act_max=act_max,
                p999=float(np.quantile(v, 0.999)),
                **hist,
            )
        )
    return ActivationProfile(tuple(profiles), len(calibration))


def activation_histogram(
    model: Model,
    samples,
    layer: int,
    mask=None,
    bins: int = HISTOGRAM_BINS,
    hi: float | None = None,
) -> dict:
    """Histogram of one layer's outputs, clean or under a fault mask.

    ``hi`` defaults to the maximum finite observed value; +Inf/NaN (and
    anything beyond ``hi``) count into the overflow bin.
    """
    if not 0 <= layer < len(model.layers):
        raise ConfigError(f"layer index {layer} out of range")
    values = _collect_activations(model, list(samples), mask=mask, layer_indices=(layer,))[layer]
    if hi is None:
        finite = values[np.isfinite(values)]
        hi = float(finite.max()) if finite.size and finite.max() > 0 else 1.0
    return histogram_with_overflow(values, bins, hi)


def save_profile(prof: ActivationProfile, path, provenance: dict | None = None) -> None:
    doc = prof.to_json()
    if provenance is not None:
        doc["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_profile(path) -> ActivationProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return ActivationProfile.from_json(json.load(fh))
