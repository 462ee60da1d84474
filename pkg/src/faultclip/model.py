"""Model container: layer graph, bit-level parameter words, encode/decode.

Parameters are stored as flat little-endian 32-bit words plus a shape, in
one of two numeric formats:

* ``float32`` -- IEEE-754 single precision, bit-reinterpreted on decode.
* ``fixed32(int_bits, frac_bits)`` -- two's-complement with
  ``1 + int_bits + frac_bits == 32``; decode divides by ``2**frac_bits``,
  encode truncates toward zero and saturates at the range limits.

Faults flip bits in these stored words; decoding happens at inference
time so corrupted words are realized exactly as the hardware would see
them (float32 words may decode to NaN/Inf -- that is the phenomenon under
study, not an error).

On-disk container (``.ftc``): bytes 0-7 magic ``FTCLIP01``, then a u32
little-endian manifest length, then a UTF-8 JSON manifest, then tensor
payloads in manifest order (contiguous little-endian u32 arrays), then a
trailing CRC32 (u32 LE) over the payload bytes.
"""

import json
import math
import struct
import warnings
import zlib
from dataclasses import dataclass, replace

import numpy as np

from . import ops
from .errors import (
    BadMagicError,
    ConfigError,
    InconsistentShapeError,
    TruncatedError,
    VersionError,
)
from .errors import FormatError, MaskIndexError

MAGIC = b"FTCLIP01"
CONTAINER_VERSION = 1
WORD_BITS = 32

PARAM_KINDS = ("conv2d", "fully-connected")
ACTIVATION_KINDS = ("relu", "clipped-relu")
LAYER_KINDS = PARAM_KINDS + ACTIVATION_KINDS + ("maxpool2d", "flatten", "softmax-argmax")


# ---------------------------------------------------------------------------
# numeric formats


@dataclass(frozen=True)
class NumericFormat:
    """Stored-word interpretation; ``word_bits`` is always 32."""

    kind: str  # "float32" | "fixed32"
    int_bits: int = 0
    frac_bits: int = 0

    def __post_init__(self):
        if self.kind == "float32":
            if self.int_bits or self.frac_bits:
                raise ConfigError("float32 format takes no bit split")
        elif self.kind == "fixed32":
            if 1 + self.int_bits + self.frac_bits != WORD_BITS:
                raise ConfigError(
                    f"fixed32 needs 1 + int_bits + frac_bits == 32, "
                    f"got 1 + {self.int_bits} + {self.frac_bits}"
                )
        else:
            raise ConfigError(f"unknown numeric format kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "float32":
            return {"kind": "float32"}
        return {"kind": "fixed32", "int_bits": self.int_bits, "frac_bits": self.frac_bits}

    @staticmethod
    def from_json(obj: dict) -> "NumericFormat":
        if obj.get("kind") == "float32":
            return FLOAT32
        if obj.get("kind") == "fixed32":
            return NumericFormat("fixed32", int(obj["int_bits"]), int(obj["frac_bits"]))
        raise FormatError(f"unknown numeric format in manifest: {obj!r}")


FLOAT32 = NumericFormat("float32")
FIXED32_Q15_16 = NumericFormat("fixed32", 15, 16)


def decode_words(words: np.ndarray, fmt: NumericFormat) -> np.ndarray:
    """Decode stored 32-bit words to real values (float64 array).

    Every one of the 2**32 patterns decodes; float32 may yield NaN/Inf.
    """
    words = np.asarray(words, dtype="<u4")
    if fmt.kind == "float32":
        # signaling-NaN payloads trip a spurious cast warning; every
        # pattern must decode silently
        with np.errstate(invalid="ignore"):
            return words.view("<f4").astype(np.float64)
    return words.view("<i4").astype(np.float64) / float(1 << fmt.frac_bits)


def encode_words(values: np.ndarray, fmt: NumericFormat) -> np.ndarray:
    """Encode real values into stored words.

    fixed32 truncates toward zero; out-of-range values saturate to the
    format limits (reported via a RuntimeWarning, never an error).
    """
    values = np.asarray(values, dtype=np.float64)
    if fmt.kind == "float32":
        with np.errstate(invalid="ignore", over="ignore"):
            return np.ascontiguousarray(values.astype("<f4")).view("<u4").copy()
    scale = float(1 << fmt.frac_bits)
    scaled = np.trunc(values * scale)
    lo, hi = -(2**31), 2**31 - 1
    bad = ~np.isfinite(scaled)
    saturated = (scaled < lo) | (scaled > hi) | bad
    if np.any(saturated):
        warnings.warn(
            f"{int(np.count_nonzero(saturated))} value(s) outside fixed32 range; saturated",
            RuntimeWarning,
            stacklevel=2,
        )
    scaled = np.where(np.isnan(scaled), 0.0, scaled)
    scaled = np.clip(scaled, lo, hi)
    return scaled.astype("<i8").astype("<i4").view("<u4").copy()


def decode_word(word: int, fmt: NumericFormat) -> float:
    """Scalar :func:`decode_words`."""
    return float(decode_words(np.array([word], dtype="<u4"), fmt)[0])


def encode_word(value: float, fmt: NumericFormat) -> int:
    """Scalar :func:`encode_words`."""
    return int(encode_words(np.array([value], dtype=np.float64), fmt)[0])


# ---------------------------------------------------------------------------
# layers and model


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the graph: a kind plus kind-specific hyperparameters.

    conv2d: stride, padding; maxpool2d: pool, stride; clipped-relu layers
    reference their threshold by activation ordinal, stored on the model.
    """

    kind: str
    hyper: dict

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")


@dataclass(frozen=True)
class ParamWords:
    """Flat word array plus logical tensor shape."""

    words: np.ndarray  # uint32, 1-D
    shape: tuple

    def __post_init__(self):
        flat = np.ascontiguousarray(np.asarray(self.words, dtype="<u4").ravel())
        object.__setattr__(self, "words", flat)
        if int(np.prod(self.shape)) != flat.size:
            raise InconsistentShapeError(
                f"shape {self.shape} needs {int(np.prod(self.shape))} words, "
                f"have {flat.size}"
            )


@dataclass(frozen=True)
class Model:
    """Immutable layer graph with word-level parameters.

    ``thresholds`` has one clip value per activation layer when the model
    uses clipped activations, else ``None``.  ``set_thresholds`` returns a
    new model; parameter words are shared, never copied or modified.
    """

    name: str
    input_shape: tuple
    class_count: int
    layers: tuple
    params: dict  # layer index -> {"weight": ParamWords, "bias": ParamWords}
    fmt: NumericFormat = FLOAT32
    thresholds: tuple | None = None
    normalization: dict | None = None  # {"mean": [...], "std": [...]} per channel

    def __post_init__(self):
        validate_model(self)

    @property
    def activation_layer_indices(self) -> tuple:
        return tuple(i for i, l in enumerate(self.layers) if l.kind in ACTIVATION_KINDS)

    @property
    def param_layer_indices(self) -> tuple:
        return tuple(sorted(self.params))

    def feeding_param_layer(self, act_ordinal: int) -> int:
        """Index of the computational layer whose output the given
        activation layer (by ordinal) transforms."""
        layer_idx = self.activation_layer_indices[act_ordinal]
        for i in range(layer_idx - 1, -1, -1):
            if i in self.params:
                return i
        raise ConfigError(f"activation layer {act_ordinal} has no preceding parameter layer")

    def total_bits(self, scope="network", include_biases: bool = True) -> int:
        """Number of fault-injectable parameter bits in scope."""
        layers = self.param_layer_indices if scope == "network" else (int(scope),)
        total = 0
        for li in layers:
            for name, pw in self.params[li].items():
                if name == "bias" and not include_biases:
                    continue
                total += pw.words.size * WORD_BITS
        return total


def validate_model(model: Model) -> None:
    n_act = len(model.activation_layer_indices)
    for i, layer in enumerate(model.layers):
        if layer.kind in PARAM_KINDS:
            if i not in model.params or not {"weight", "bias"} <= set(model.params[i]):
                raise InconsistentShapeError(f"layer {i} ({layer.kind}) missing weight/bias words")
            w, b = model.params[i]["weight"], model.params[i]["bias"]
            if layer.kind == "conv2d":
                if len(w.shape) != 4:
                    raise InconsistentShapeError(f"layer {i} conv weight must be rank 4")
                if b.shape != (w.shape[0],):
                    raise InconsistentShapeError(f"layer {i} bias does not match out channels")
            else:
                if len(w.shape) != 2:
                    raise InconsistentShapeError(f"layer {i} fc weight must be rank 2")
                if b.shape != (w.shape[0],):
                    raise InconsistentShapeError(f"layer {i} bias does not match out features")
        elif i in model.params:
            raise InconsistentShapeError(f"layer {i} ({layer.kind}) must not carry parameters")
    if model.thresholds is not None:
        if len(model.thresholds) != n_act:
            raise ConfigError(
                f"{len(model.thresholds)} thresholds for {n_act} activation layers"
            )
        for t in model.thresholds:
            if not t >= 0:
                raise ConfigError(f"clip threshold must be >= 0, got {t}")


def set_thresholds(model: Model, thresholds) -> Model:
    """Replace unbounded activations with clipped ones at the given values.

    Weights and biases are untouched (same word arrays, shared).
    """
    thresholds = tuple(float(t) for t in thresholds)
    n_act = len(model.activation_layer_indices)
    if len(thresholds) != n_act:
        raise ConfigError(f"expected {n_act} thresholds, got {len(thresholds)}")
    for t in thresholds:
        if math.isnan(t) or t < 0:
            raise ConfigError(f"clip threshold must be >= 0, got {t}")
    layers = tuple(
        replace(l, kind="clipped-relu") if l.kind in ACTIVATION_KINDS else l
        for l in model.layers
    )
    return replace(model, layers=layers, thresholds=thresholds)


def strip_thresholds(model: Model) -> Model:
    """Back to plain unbounded ReLU activations."""
    layers = tuple(
        replace(l, kind="relu") if l.kind in ACTIVATION_KINDS else l for l in model.layers
    )
    return replace(model, layers=layers, thresholds=None)


def with_threshold(model: Model, act_ordinal: int, value: float) -> Model:
    """New model with a single activation layer's clip value replaced."""
    if model.thresholds is None:
        raise ConfigError("model has no clip thresholds to modify")
    thresholds = list(model.thresholds)
    thresholds[act_ordinal] = float(value)
    return set_thresholds(model, thresholds)


def param_checksum(model: Model) -> int:
    """CRC32 over all parameter words, in deterministic order."""
    crc = 0
    for li in model.param_layer_indices:
        for name in sorted(model.params[li]):
            crc = zlib.crc32(np.ascontiguousarray(model.params[li][name].words, "<u4"), crc)
    return crc


# ---------------------------------------------------------------------------
# forward pass


def materialize(model: Model, mask=None) -> dict:
    """Decode stored words (with optional fault mask applied) to float32.

    Returns {(layer_index, param_name): shaped float32 array}.  Decoding
    happens here, once per inference, so flipped bits are realized exactly.
    """
    flips = mask.flips_by_target() if mask is not None else {}
    for (li, name) in flips:
        if li not in model.params or name not in model.params[li]:
            raise MaskIndexError(f"mask targets missing parameter ({li}, {name})")
    out = {}
    for li in model.param_layer_indices:
        for name, pw in model.params[li].items():
            words = pw.words
            idx_bits = flips.get((li, name))
            if idx_bits:
                words = words.copy()
                idx = np.fromiter((w for w, _ in idx_bits), dtype=np.int64)
                if idx.size and (idx.min() < 0 or idx.max() >= words.size):
                    raise MaskIndexError(
                        f"mask word index out of range for ({li}, {name}): "
                        f"max {int(idx.max())} vs {words.size} words"
                    )
                bits = np.fromiter((b for _, b in idx_bits), dtype=np.uint32)
                np.bitwise_xor.at(words, idx, np.uint32(1) << bits)
            reals = decode_words(words, model.fmt).astype(ops.DTYPE)
            out[(li, name)] = reals.reshape(pw.shape)
    return out


def forward(model: Model, x: np.ndarray, mask=None, collect=()):
    """Run the layer graph on a batch (or single sample) of inputs.

    ``collect`` names layer indices whose outputs are returned alongside
    the final output: ``forward(...) -> logits`` or ``(logits, taps)``.
    """
    params = materialize(model, mask)
    collect = frozenset(collect)
    taps = {}
    act_ordinal = -1
    out = np.asarray(x, dtype=ops.DTYPE)
    for i, layer in enumerate(model.layers):
        kind = layer.kind
        if kind == "conv2d":
            out = ops.conv2d_forward(
                out,
                params[(i, "weight")],
                params[(i, "bias")],
                stride=tuple(layer.hyper.get("stride", (1, 1))),
                padding=tuple(layer.hyper.get("padding", (0, 0))),
            )
        elif kind == "fully-connected":
            out = ops.fc_forward(out, params[(i, "weight")], params[(i, "bias")])
        elif kind in ACTIVATION_KINDS:
            act_ordinal += 1
            t = None if model.thresholds is None else model.thresholds[act_ordinal]
            out = ops.relu(out) if t is None else ops.clipped_relu(out, t)
        elif kind == "maxpool2d":
            out = ops.maxpool2d_forward(
                out, tuple(layer.hyper["pool"]), tuple(layer.hyper.get("stride", layer.hyper["pool"]))
            )
        elif kind == "flatten":
            out = ops.flatten(out)
        elif kind == "softmax-argmax":
            out = ops.softmax(out)
        if i in collect:
            taps[i] = out
    return (out, taps) if collect else out


# ---------------------------------------------------------------------------
# container I/O


def _manifest(model: Model) -> dict:
    tensors = []
    for li in model.param_layer_indices:
        for name in ("weight", "bias"):
            tensors.append(
                {"layer": li, "param": name, "shape": list(model.params[li][name].shape)}
            )
    return {
        "version": CONTAINER_VERSION,
        "name": model.name,
        "input_shape": list(model.input_shape),
        "class_count": model.class_count,
        "format": model.fmt.to_json(),
        "layers": [{"kind": l.kind, "hyper": l.hyper} for l in model.layers],
        "tensors": tensors,
        "thresholds": None if model.thresholds is None else list(model.thresholds),
        "normalization": model.normalization,
    }


def save_model(model: Model, path) -> None:
    """Write the bit-exact container; stored words are preserved verbatim."""
    manifest = json.dumps(_manifest(model), sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(model.params[t["layer"]][t["param"]].words, "<u4").tobytes()
        for t in _manifest(model)["tensors"]
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(manifest)))
        fh.write(manifest)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_model(path) -> Model:
    """Read a container; loading is bit-exact and validates all invariants."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4:
        raise TruncatedError(f"truncated header in {path}")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic in {path}: {blob[:8]!r}")
    (manifest_len,) = struct.unpack_from("<I", blob, len(MAGIC))
    body_start = len(MAGIC) + 4
    if len(blob) < body_start + manifest_len + 4:
        raise TruncatedError(f"truncated manifest in {path}")
    try:
        manifest = json.loads(blob[body_start : body_start + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable manifest in {path}: {exc}") from exc
    if manifest.get("version") != CONTAINER_VERSION:
        raise VersionError(
            f"unsupported container version {manifest.get('version')!r} in {path}"
        )

    payload = blob[body_start + manifest_len : -4]
    (crc_stored,) = struct.unpack("<I", blob[-4:])
    declared_words = sum(int(np.prod(t["shape"])) for t in manifest["tensors"])
    if len(payload) != 4 * declared_words:
        if len(payload) < 4 * declared_words:
            raise TruncatedError(
                f"payload holds {len(payload) // 4} words, manifest declares {declared_words}"
            )
        raise InconsistentShapeError(
            f"inconsistent tensor size: payload {len(payload) // 4} words, "
            f"manifest declares {declared_words}"
        )
    if zlib.crc32(payload) != crc_stored:
        raise FormatError(f"payload checksum mismatch in {path}")

    params: dict = {}
    offset = 0
    for t in manifest["tensors"]:
        n = int(np.prod(t["shape"]))
        words = np.frombuffer(payload, dtype="<u4", count=n, offset=offset).copy()
        offset += 4 * n
        params.setdefault(int(t["layer"]), {})[t["param"]] = ParamWords(
            words, tuple(int(s) for s in t["shape"])
        )

    thresholds = manifest.get("thresholds")
    return Model(
        name=manifest["name"],
        input_shape=tuple(int(s) for s in manifest["input_shape"]),
        class_count=int(manifest["class_count"]),
        layers=tuple(LayerSpec(l["kind"], dict(l["hyper"])) for l in manifest["layers"]),
        params=params,
        fmt=NumericFormat.from_json(manifest["format"]),
        thresholds=None if thresholds is None else tuple(float(t) for t in thresholds),
        normalization=manifest.get("normalization"),
    )
