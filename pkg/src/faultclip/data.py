"""Evaluation and calibration data.

Two sources: the published CIFAR-10 binary batch layout (1 label byte +
3072 pixel bytes per record, R/G/B planes of a 32x32 image), and a
deterministic synthetic blob set for desk-scale tests.  Loaded images are
float32 in [0, 1] (plain /255); pretrained checkpoints that need their
training-time normalization carry per-channel mean/std in the model
manifest and are normalized explicitly via :func:`normalize`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CorruptRecordError, FormatError

CIFAR_RECORD_BYTES = 3073
CIFAR_SHAPE = (3, 32, 32)


@dataclass(frozen=True)
class LabeledSample:
    image: np.ndarray  # (C, H, W) float32
    label: int


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint calibration/evaluation index sets over one sample list."""

    calibration: tuple
    evaluation: tuple

    def __post_init__(self):
        overlap = set(self.calibration) & set(self.evaluation)
        if overlap:
            raise ConfigError(f"calibration and evaluation sets overlap: {sorted(overlap)[:5]}")


def load_cifar10_batch(path) -> list:
    """Parse one CIFAR-10 binary batch file into labeled samples."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) == 0 or len(blob) % CIFAR_RECORD_BYTES != 0:
        raise FormatError(
            f"{path}: length {len(blob)} is not a positive multiple of {CIFAR_RECORD_BYTES}"
        )
    raw = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
    labels = raw[:, 0]
    bad = np.nonzero(labels > 9)[0]
    if bad.size:
        raise CorruptRecordError(f"{path}: record {int(bad[0])} has label {int(labels[bad[0]])}")
    images = (raw[:, 1:].reshape(-1, *CIFAR_SHAPE).astype(np.float32)) / np.float32(255)
    return [LabeledSample(images[i], int(labels[i])) for i in range(len(raw))]


def normalize(samples, mean, std) -> list:
    """Apply per-channel (x - mean) / std; returns new samples."""
    mean = np.asarray(mean, dtype=np.float32).reshape(-1, 1, 1)
    std = np.asarray(std, dtype=np.float32).reshape(-1, 1, 1)
    return [LabeledSample(((s.image - mean) / std).astype(np.float32), s.label) for s in samples]


DEFAULT_CLASS_SEED = 0xC1A55


def make_synthetic_set(
    seed: int,
    n: int,
    shape=(1, 28, 28),
    classes: int = 10,
    noise: float = 0.25,
    class_seed: int = DEFAULT_CLASS_SEED,
) -> list:
    """Deterministic separable blobs: per-class smooth prototype + noise.

    Class prototypes depend only on ``class_seed``, so sets drawn with
    different ``seed`` values share the same class geometry (fresh noise).
    Per-sample brightness follows a long-tailed law (most samples dim, a
    few bright), giving the activation distributions the heavy upper tail
    typical of real inputs.  Labels are exactly balanced (round-robin,
    then shuffled); the same (seed, class_seed) pair always yields a
    byte-identical set.
    """
    if n <= 0:
        raise ConfigError(f"sample count must be positive, got {n}")
    c, h, w = shape
    class_rng = np.random.default_rng(class_seed)
    coarse = class_rng.uniform(0.0, 1.0, size=(classes, c, (h + 3) // 4, (w + 3) // 4))
    protos = np.repeat(np.repeat(coarse, 4, axis=2), 4, axis=3)[:, :, :h, :w]
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % classes
    labels = rng.permutation(labels)
    intensity = 0.35 + 0.65 * rng.uniform(0.0, 1.0, size=n) ** 3
    images = intensity[:, None, None, None] * protos[labels]
    images = images + rng.normal(0.0, noise, size=(n, c, h, w))
    images = np.clip(images, 0.0, 1.0).astype(np.float32)
    return [LabeledSample(images[i], int(labels[i])) for i in range(n)]


def make_split(n: int, calibration_fraction: float = 0.1, seed: int = 0) -> SplitSpec:
    """Seed-selected disjoint calibration/evaluation split of n samples."""
    if not 0 < calibration_fraction < 1:
        raise ConfigError(f"calibration fraction must be in (0,1), got {calibration_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    k = max(1, int(round(n * calibration_fraction)))
    return SplitSpec(tuple(int(i) for i in perm[:k]), tuple(int(i) for i in perm[k:]))


def take(samples, indices) -> list:
    return [samples[i] for i in indices]


def batch_images(samples) -> np.ndarray:
    """Stack sample images into one (B, C, H, W) float32 array."""
    return np.stack([s.image for s in samples]).astype(np.float32)


def labels_of(samples) -> np.ndarray:
    return np.array([s.label for s in samples], dtype=np.int64)
