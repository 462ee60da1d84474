"""Random bit flips in stored parameter words.

Fault model: every bit of every in-scope parameter word flips
independently with probability ``rate``, once per trial, and the
corrupted words persist for every image of that trial (permanent faults
in the weight memory).  ``rate`` is a per-bit probability -- see README
for the exact semantics.

Sampling is exact but avoids one Bernoulli draw per bit: a word has at
least one flip with probability q = 1 - (1-p)**32 (one uniform per word);
hit words then draw their flip count from the conditional binomial and
place the flips uniformly.  The composition is distributionally identical
to 32 independent per-bit draws.

Streams are keyed on (seed, trial, rate, layer, param), so identical
specs yield identical masks regardless of thread schedule, and a layer's
flips do not depend on which other layers are in scope.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import seeding
from .errors import ConfigError, MaskIndexError
from .model import WORD_BITS, Model, ParamWords

NETWORK_SCOPE = "network"


@dataclass(frozen=True)
class FaultSpec:
    """One fault campaign: per-bit rate, scope, and reproducible seeding."""

    rate: float
    scope: object = NETWORK_SCOPE  # "network" or an int parameter-layer index
    seed: int = 0
    trial_id: int = 0
    include_biases: bool = True

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"fault rate must be in [0,1], got {self.rate}")


@dataclass(frozen=True)
class FaultMask:
    """Realized flips: sorted (layer, param, word, bit) tuples, no duplicates."""

    flips: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(set(self.flips)) != len(self.flips):
            raise ConfigError("fault mask contains duplicate (word, bit) flips")
        for layer, param, word, bit in self.flips:
            if not 0 <= bit < WORD_BITS:
                raise MaskIndexError(f"bit index {bit} out of range for 32-bit words")

    def __len__(self) -> int:
        return len(self.flips)

    def flips_by_target(self) -> dict:
        """Group flips as {(layer, param): [(word, bit), ...]}."""
        grouped: dict = {}
        for layer, param, word, bit in self.flips:
            grouped.setdefault((layer, param), []).append((word, bit))
        return grouped


def _scope_targets(model: Model, spec: FaultSpec) -> list:
    """(layer, param, word_count) triples addressed by the spec, in order."""
    if spec.scope == NETWORK_SCOPE:
        layer_indices = model.param_layer_indices
    else:
        li = int(spec.scope)
        if li not in model.params:
            raise ConfigError(f"scope layer {li} carries no parameters")
        layer_indices = (li,)
    names = ("weight", "bias") if spec.include_biases else ("weight",)
    return [
        (li, name, model.params[li][name].words.size)
        for li in layer_indices
        for name in names
        if name in model.params[li]
    ]


def _conditional_count_cdf(p: float) -> np.ndarray:
    """CDF of Binomial(32, p) conditioned on >= 1 success, over k = 1..32."""
    if p >= 1.0:
        cdf = np.zeros(WORD_BITS)
        cdf[-1] = 1.0
        return cdf
    k = np.arange(1, WORD_BITS + 1)
    log_comb = np.array(
        [math.lgamma(WORD_BITS + 1) - math.lgamma(i + 1) - math.lgamma(WORD_BITS - i + 1) for i in k]
    )
    log_pmf = log_comb + k * math.log(p) + (WORD_BITS - k) * math.log1p(-p)
    tail = np.exp(log_pmf)
    total = tail.sum()
    if total <= 0.0:  # p below float underflow of the tail; k=1 dominates
        return np.ones(WORD_BITS)
    cdf = np.cumsum(tail / total)
    cdf[-1] = 1.0
    return cdf


def draw_mask(model: Model, spec: FaultSpec) -> FaultMask:
    """Realize one fault map: each in-scope bit flips with probability rate."""
    p = float(spec.rate)
    if p == 0.0:
        return FaultMask()
    q = 1.0 - (1.0 - p) ** WORD_BITS  # P(word has >= 1 flip), exact
    cond_cdf = _conditional_count_cdf(p)
    flips = []
    for layer, param, n_words in _scope_targets(model, spec):
        rng = seeding.stream("mask", spec.seed, spec.trial_id, repr(p), layer, param)
        u = rng.random(n_words)
        hit_words = np.nonzero(u < q)[0]
        if hit_words.size == 0:
            continue
        counts = np.searchsorted(cond_cdf, rng.random(hit_words.size), side="right") + 1

        single = hit_words[counts == 1]
        if single.size:
            bits = rng.integers(0, WORD_BITS, size=single.size)
            flips.extend(
                (layer, param, int(w), int(b)) for w, b in zip(single, bits)
            )
        multi = np.nonzero(counts > 1)[0]
        if multi.size:
            order = np.argsort(rng.random((multi.size, WORD_BITS)), axis=1)
            for row, hi in enumerate(multi):
                w = int(hit_words[hi])
                for b in order[row, : counts[hi]]:
                    flips.append((layer, param, w, int(b)))
    return FaultMask(tuple(sorted(flips)))


def apply_mask(model: Model, mask: FaultMask) -> Model:
    """Model view with the listed bits XOR-flipped in its stored words.

    The original model is untouched; untargeted arrays are shared.
    Applying the same mask twice restores the original words (XOR).
    """
    grouped = mask.flips_by_target()
    if not grouped:
        return model
    new_params = {li: dict(entry) for li, entry in model.params.items()}
    for (layer, param), word_bits in grouped.items():
        if layer not in model.params or param not in model.params[layer]:
            raise MaskIndexError(f"mask targets missing parameter ({layer}, {param})")
        pw = model.params[layer][param]
        idx = np.array([w for w, _ in word_bits], dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= pw.words.size):
            raise MaskIndexError(
                f"mask word index out of range for ({layer}, {param}): "
                f"max {int(idx.max())} vs {pw.words.size} words"
            )
        bits = np.array([b for _, b in word_bits], dtype=np.uint32)
        words = pw.words.copy()
        np.bitwise_xor.at(words, idx, np.uint32(1) << bits)
        new_params[layer][param] = ParamWords(words, pw.shape)
    return replace(model, params=new_params)


def write_mask_jsonl(mask: FaultMask, path, provenance: dict | None = None) -> None:
    """One JSON object per flip; optional leading provenance record."""
    with open(path, "w", encoding="utf-8") as fh:
        if provenance is not None:
            fh.write(json.dumps({"provenance": provenance}, sort_keys=True) + "\n")
        for layer, param, word, bit in mask.flips:
            fh.write(
                json.dumps({"layer": layer, "param": param, "word": word, "bit": bit}) + "\n"
            )


def read_mask_jsonl(path) -> FaultMask:
    flips = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "provenance" in obj:
                continue
            flips.append((int(obj["layer"]), str(obj["param"]), int(obj["word"]), int(obj["bit"])))
    return FaultMask(tuple(sorted(flips)))
