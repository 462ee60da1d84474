"""Layer forward operators.

Dense tensors are plain ``numpy`` arrays (row-major, float32).  Every
operator here is a pure function: no state, no RNG, bit-identical output
for identical input.  Compute is float32 end to end; NaN/Inf appearing in
outputs can only come from corrupted weights, and plain ReLU deliberately
propagates them (the clipped variant is the mitigation point).
"""

import numpy as np

from .errors import ConfigError, DimensionError

DTYPE = np.float32


def _as_batch(x: np.ndarray, rank: int) -> tuple[np.ndarray, bool]:
    """Promote a single sample to a batch of one; report whether we did."""
    if x.ndim == rank - 1:
        return x[None, ...], True
    if x.ndim != rank:
        raise DimensionError(
            f"expected rank {rank} (batched) or {rank - 1} input, got rank {x.ndim}"
        )
    return x, False


def conv2d_forward(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    stride: int | tuple[int, int] = 1,
    padding: int | tuple[int, int] = 0,
) -> np.ndarray:
    """2-D cross-correlation of NCHW input with OIHW weights plus bias.

    Output spatial dims follow floor((in + 2*pad - k)/stride) + 1.
    """
    x = np.asarray(x, dtype=DTYPE)
    weights = np.asarray(weights, dtype=DTYPE)
    bias = np.asarray(bias, dtype=DTYPE)
    x, squeeze = _as_batch(x, 4)
    if weights.ndim != 4:
        raise DimensionError(f"conv weights must be rank 4 (OIHW), got rank {weights.ndim}")
    sh, sw = (stride, stride) if isinstance(stride, int) else stride
    ph, pw = (padding, padding) if isinstance(padding, int) else padding
    if sh < 1 or sw < 1:
        raise ConfigError(f"stride must be >= 1, got ({sh}, {sw})")
    if ph < 0 or pw < 0:
        raise ConfigError(f"padding must be >= 0, got ({ph}, {pw})")

    b, c, h, w = x.shape
    oc, ic, kh, kw = weights.shape
    if ic != c:
        raise DimensionError(
            f"input channel axis ({c}) does not match weight in-channel axis ({ic})",
            axes=("input.C", "weights.I"),
        )
    if bias.shape != (oc,):
        raise DimensionError(
            f"bias shape {bias.shape} does not match out-channel axis ({oc})",
            axes=("bias.0", "weights.O"),
        )
    if h + 2 * ph < kh or w + 2 * pw < kw:
        raise DimensionError(
            f"kernel {kh}x{kw} larger than padded input {h + 2 * ph}x{w + 2 * pw}",
            axes=("input.H", "input.W"),
        )

    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::sh, ::sw]  # (B, C, Ho, Wo, kh, kw)
    _, _, ho, wo, _, _ = windows.shape
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * kh * kw)
    # corrupted weights legitimately overflow float32; that is the studied effect
    with np.errstate(over="ignore", invalid="ignore"):
        out = cols @ weights.reshape(oc, c * kh * kw).T
    out = out.reshape(b, ho, wo, oc).transpose(0, 3, 1, 2) + bias[None, :, None, None]
    out = np.ascontiguousarray(out, dtype=DTYPE)
    return out[0] if squeeze else out


def fc_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map: out[j] = sum_i w[j,i] * x[i] + b[j]."""
    x = np.asarray(x, dtype=DTYPE)
    weights = np.asarray(weights, dtype=DTYPE)
    bias = np.asarray(bias, dtype=DTYPE)
    x, squeeze = _as_batch(x, 2)
    if weights.ndim != 2:
        raise DimensionError(f"fc weights must be rank 2, got rank {weights.ndim}")
    m, n = weights.shape
    if x.shape[1] != n:
        raise DimensionError(
            f"input length ({x.shape[1]}) does not match weight in axis ({n})",
            axes=("input.1", "weights.1"),
        )
    if bias.shape != (m,):
        raise DimensionError(
            f"bias shape {bias.shape} does not match weight out axis ({m})",
            axes=("bias.0", "weights.0"),
        )
    with np.errstate(over="ignore", invalid="ignore"):
        out = (x @ weights.T + bias).astype(DTYPE, copy=False)
    return out[0] if squeeze else out


def maxpool2d_forward(
    x: np.ndarray,
    pool: int | tuple[int, int],
    stride: int | tuple[int, int] | None = None,
) -> np.ndarray:
    """Max over each pool window; stride defaults to the pool size."""
    x = np.asarray(x, dtype=DTYPE)
    x, squeeze = _as_batch(x, 4)
    kh, kw = (pool, pool) if isinstance(pool, int) else pool
    if stride is None:
        stride = (kh, kw)
    sh, sw = (stride, stride) if isinstance(stride, int) else stride
    _, _, h, w = x.shape
    if kh > h or kw > w:
        raise DimensionError(
            f"pool window {kh}x{kw} larger than input {h}x{w}",
            axes=("input.H", "input.W"),
        )
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    out = windows[:, :, ::sh, ::sw].max(axis=(4, 5))
    out = np.ascontiguousarray(out, dtype=DTYPE)
    return out[0] if squeeze else out


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x).  NaN propagates (IEEE maximum semantics)."""
    x = np.asarray(x, dtype=DTYPE)
    return np.maximum(x, DTYPE(0))


def clipped_relu(x: np.ndarray, threshold: float) -> np.ndarray:
    """Pass x through only when 0 <= x <= threshold; everything else maps to 0.

    The two-sided comparison is strict IEEE: NaN fails both sides and lands
    on the zero branch, as does +/-Inf outside the window, so the output is
    always inside [0, threshold].
    """
    if not threshold >= 0:  # rejects negatives and NaN
        raise ConfigError(f"clip threshold must be >= 0, got {threshold}")
    x = np.asarray(x, dtype=DTYPE)
    keep = (x >= 0) & (x <= DTYPE(threshold))
    return np.where(keep, x, DTYPE(0))


def flatten(x: np.ndarray) -> np.ndarray:
    """Collapse all non-batch axes of a batched tensor (row-major)."""
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim == 1:
        return x
    return np.ascontiguousarray(x).reshape(x.shape[0], -1)


def softmax(x: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    x = np.asarray(x, dtype=DTYPE)
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return (e / np.sum(e, axis=-1, keepdims=True)).astype(DTYPE, copy=False)


def classify(logits: np.ndarray) -> int:
    """Index of the maximum logit; ties break toward the lowest index.

    NaN compares as maximal under argmax, so fully degenerate (all-NaN)
    logits deterministically yield class 0; callers that care record the
    degeneracy via :func:`is_degenerate`.
    """
    logits = np.asarray(logits)
    if logits.ndim != 1:
        raise DimensionError(f"logits must be rank 1, got rank {logits.ndim}")
    if logits.size == 0:
        raise DimensionError("logits are empty")
    return int(np.argmax(logits))


def classify_batch(logits: np.ndarray) -> np.ndarray:
    """Row-wise :func:`classify` for a (B, classes) array."""
    logits = np.asarray(logits)
    if logits.ndim != 2 or logits.shape[1] == 0:
        raise DimensionError(f"batched logits must be (B, classes), got {logits.shape}")
    return np.argmax(logits, axis=1)


def is_degenerate(logits: np.ndarray) -> bool:
    """True when every logit is NaN (classification is meaningless)."""
    return bool(np.all(np.isnan(logits)))
