"""Shared test helpers: toy model builders and independent oracles.

The oracles here are deliberately naive (triple loops, float64) and never
call the library's vectorized kernels, so they stay an independent route
for checking them.
"""

import numpy as np

from faultclip.model import FLOAT32, LayerSpec, Model, NumericFormat, ParamWords, encode_words


def pw(arr: np.ndarray, fmt: NumericFormat = FLOAT32) -> ParamWords:
    arr = np.asarray(arr, dtype=np.float32)
    return ParamWords(encode_words(arr, fmt), arr.shape)


def build_fc_model(weights, biases, fmt: NumericFormat = FLOAT32, relu_after=True) -> Model:
    """Stack of fully-connected layers (optionally relu between), last layer raw."""
    layers = []
    params = {}
    for i, (w, b) in enumerate(zip(weights, biases)):
        idx = len(layers)
        layers.append(LayerSpec("fully-connected", {}))
        params[idx] = {"weight": pw(w, fmt), "bias": pw(b, fmt)}
        if relu_after and i < len(weights) - 1:
            layers.append(LayerSpec("relu", {}))
    w0 = np.asarray(weights[0])
    wl = np.asarray(weights[-1])
    return Model(
        name="toy-fc",
        input_shape=(w0.shape[1],),
        class_count=wl.shape[0],
        layers=tuple(layers),
        params=params,
        fmt=fmt,
    )


# ---------------------------------------------------------------------------
# naive float64 oracles


def conv2d_oracle(x, w, b, stride=(1, 1), padding=(0, 0)):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bsz, c, h, wid = x.shape
    oc, ic, kh, kw = w.shape
    sh, sw = stride
    ph, pwd = padding
    xp = np.zeros((bsz, c, h + 2 * ph, wid + 2 * pwd))
    xp[:, :, ph : ph + h, pwd : pwd + wid] = x
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (wid + 2 * pwd - kw) // sw + 1
    out = np.zeros((bsz, oc, ho, wo))
    for n in range(bsz):
        for o in range(oc):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ci in range(ic):
                        for u in range(kh):
                            for v in range(kw):
                                acc += xp[n, ci, i * sh + u, j * sw + v] * w[o, ci, u, v]
                    out[n, o, i, j] = acc + b[o]
    return out


def fc_oracle(x, w, b):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros((x.shape[0], w.shape[0]))
    for n in range(x.shape[0]):
        for j in range(w.shape[0]):
            acc = 0.0
            for i in range(w.shape[1]):
                acc += w[j, i] * x[n, i]
            out[n, j] = acc + b[j]
    return out


def maxpool_oracle(x, pool, stride):
    x = np.asarray(x, dtype=np.float64)
    bsz, c, h, w = x.shape
    kh, kw = pool
    sh, sw = stride
    ho = (h - kh) // sh + 1
    wo = (w - kw) // sw + 1
    out = np.zeros((bsz, c, ho, wo))
    for n in range(bsz):
        for ci in range(c):
            for i in range(ho):
                for j in range(wo):
                    out[n, ci, i, j] = x[n, ci, i * sh : i * sh + kh, j * sw : j * sw + kw].max()
    return out


def trapezoid_oracle(xs, ys):
    """Plain hand trapezoidal sum over already-normalized points."""
    total = 0.0
    span = 0.0
    for i in range(len(xs) - 1):
        dx = xs[i + 1] - xs[i]
        total += 0.5 * (ys[i] + ys[i + 1]) * dx
        span += dx
    return total / span


def rel_err(a, b) -> float:
    """Max-norm relative error of a against reference b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(1.0, float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) / denom


def to_float32(model: Model) -> Model:
    """Same weights re-encoded in IEEE float32 storage."""
    from dataclasses import replace

    from faultclip.model import decode_words

    params = {
        li: {
            name: ParamWords(
                encode_words(decode_words(p.words, model.fmt), FLOAT32), p.shape
            )
            for name, p in entry.items()
        }
        for li, entry in model.params.items()
    }
    return replace(model, params=params, fmt=FLOAT32)
