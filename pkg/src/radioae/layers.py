"""Differentiable layer kernels with exact analytic gradients.

Everything here is a pure function of explicit inputs: depthwise 1-D
convolution, dense affine maps, hard-sigmoid/relu activations, inverted
dropout, MSE loss and the L1/L2 penalties. Each forward op has a matching
backward that returns exact gradients, verified against central finite
differences in the test suite (grad_check below is the harness for that).

Convolution is implemented as cross-correlation (no kernel flip); with
learned filters the distinction is immaterial, but it is fixed here so
checkpoints are reproducible. The compiled/NumPy kernel backend is chosen
by radioae._kernels at import time.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ParameterError, ShapeError

__all__ = [
    "conv1d_depthwise",
    "conv1d_depthwise_backward",
    "conv1d_depthwise_batch",
    "conv1d_depthwise_batch_backward",
    "dense",
    "dense_backward",
    "hard_sigmoid",
    "hard_sigmoid_grad",
    "relu",
    "relu_grad",
    "dropout",
    "mse_loss",
    "l1_activity_penalty",
    "l2_weight_penalty",
    "grad_check",
]


def _as_common(*arrays):
    """Promote to a shared float dtype and C layout for the kernel backend."""
    dtype = np.result_type(*(a.dtype for a in arrays), np.float32)
    if dtype not in (np.float32, np.float64):
        dtype = np.float64
    return [np.ascontiguousarray(a, dtype=dtype) for a in arrays]


def _check_conv_shapes(x, w, pad):
    if x.ndim != 3:
        raise ShapeError(f"conv input must be (B, C, T), got {x.shape}")
    if w.ndim != 2:
        raise ShapeError(f"conv filters must be (F, K), got {w.shape}")
    if pad < 0:
        raise ParameterError(f"pad must be >= 0, got {pad}")
    T, K = x.shape[2], w.shape[1]
    if K > T + 2 * pad:
        raise ShapeError(f"kernel length {K} exceeds padded input {T + 2 * pad}")


def conv1d_depthwise_batch(x, w, pad):
    """Cross-correlate each of F filters with each channel of each example.

    x: (B, C, T); w: (F, K). Returns (B, F, C, T_out), T_out = T + 2*pad - K + 1.
    """
    x, w = _as_common(np.asarray(x), np.asarray(w))
    _check_conv_shapes(x, w, pad)
    return _kernels.conv1d_fwd(x, w, pad)


def conv1d_depthwise_batch_backward(x, w, pad, d_out):
    """Gradients of a scalar loss w.r.t. conv input and taps.

    d_out: (B, F, C, T_out). Returns (d_x (B, C, T), d_w (F, K)).
    """
    x, w, d_out = _as_common(np.asarray(x), np.asarray(w), np.asarray(d_out))
    _check_conv_shapes(x, w, pad)
    B, C, T = x.shape
    F, K = w.shape
    T_out = T + 2 * pad - K + 1
    if d_out.shape != (B, F, C, T_out):
        raise ShapeError(f"d_out must be {(B, F, C, T_out)}, got {d_out.shape}")
    return _kernels.conv1d_bwd(x, w, pad, d_out)


def conv1d_depthwise(x, w, pad):
    """Single-example depthwise convolution: (C, T) -> (F*C, T_out).

    Output rows are ordered filter-major, channel-minor: row f*C + c holds
    filter f applied to channel c.
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"input must be (C, T), got {x.shape}")
    out = conv1d_depthwise_batch(x[None], w, pad)[0]  # (F, C, T_out)
    F, C, T_out = out.shape
    return out.reshape(F * C, T_out)


def conv1d_depthwise_backward(x, w, pad, d_out):
    """Backward for conv1d_depthwise; d_out is (F*C, T_out)."""
    x = np.asarray(x)
    w = np.asarray(w)
    d_out = np.asarray(d_out)
    C = x.shape[0]
    F = w.shape[0]
    d4 = d_out.reshape(F, C, d_out.shape[1])
    d_x, d_w = conv1d_depthwise_batch_backward(x[None], w, pad, d4[None])
    return d_x[0], d_w


def dense(x, w, b):
    """Affine map: x (..., n) @ w (n, m) + b (m)."""
    x, w, b = np.asarray(x), np.asarray(w), np.asarray(b)
    if x.shape[-1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeError(
            f"dense shapes disagree: x {x.shape}, w {w.shape}, b {b.shape}")
    return x @ w + b


def dense_backward(x, w, d_out):
    """Returns (d_x, d_w, d_b) for y = x @ w + b.

    Accepts a single example (1-D x) or a batch (2-D x); gradients are
    summed over the batch dimension.
    """
    x, w, d_out = np.asarray(x), np.asarray(w), np.asarray(d_out)
    d_x = d_out @ w.T
    if x.ndim == 1:
        d_w = np.outer(x, d_out)
        d_b = d_out.copy()
    else:
        d_w = x.T @ d_out
        d_b = d_out.sum(axis=0)
    return d_x, d_w, d_b


def hard_sigmoid(x):
    """Piecewise-linear squash max(0, min(1, 0.2*x + 0.5))."""
    x = np.asarray(x)
    return np.clip(0.2 * x + 0.5, 0.0, 1.0)


def hard_sigmoid_grad(x):
    """0.2 on the open linear segment |x| < 2.5, else 0 (0 at the kinks)."""
    x = np.asarray(x)
    return np.where((x > -2.5) & (x < 2.5), np.asarray(0.2, dtype=x.dtype), 0)


def relu(x):
    x = np.asarray(x)
    return np.maximum(x, 0)


def relu_grad(x):
    """Indicator of x > 0 (subgradient 0 at x == 0)."""
    x = np.asarray(x)
    return (x > 0).astype(x.dtype)


def dropout(x, rate, mode, rng=None):
    """Inverted dropout. Returns (output, mask); backward is d_out * mask.

    Train mode zeroes each element with probability `rate` and scales the
    survivors by 1/(1-rate) so expectations match eval mode, where the op
    is the identity (mask of ones).
    """
    x = np.asarray(x)
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval" or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ParameterError("train-mode dropout needs an explicit rng")
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / np.asarray(1.0 - rate, dtype=x.dtype)
    return x * mask, mask


def mse_loss(pred, target):
    """Mean over all elements of (pred-target)^2; returns (loss, d_pred)."""
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    d_pred = 2.0 * diff / diff.size
    return loss, d_pred


def l1_activity_penalty(h, lambda1):
    """lambda1 * sum(|h|); gradient lambda1 * sign(h) (0 at 0)."""
    if lambda1 < 0:
        raise ParameterError(f"lambda1 must be >= 0, got {lambda1}")
    h = np.asarray(h)
    return lambda1 * float(np.sum(np.abs(h))), lambda1 * np.sign(h)


def l2_weight_penalty(weights, lambda2):
    """lambda2 * sum of squares over the given weight tensors.

    `weights` is a sequence of arrays (biases are the caller's business to
    exclude). Returns (penalty, [2*lambda2*w for each tensor]).
    """
    if lambda2 < 0:
        raise ParameterError(f"lambda2 must be >= 0, got {lambda2}")
    penalty = lambda2 * float(sum(np.sum(w * w) for w in weights))
    grads = [2.0 * lambda2 * np.asarray(w) for w in weights]
    return penalty, grads


def grad_check(f, point, eps=1e-5):
    """Max relative error between analytic and central-difference gradients.

    f(x) must return (scalar_value, gradient_wrt_x). The perturbation runs
    in double precision; relative error per coordinate is
    |a - n| / max(|a|, |n|, 1e-12).
    """
    point = np.asarray(point, dtype=np.float64)
    _, analytic = f(point)
    analytic = np.asarray(analytic, dtype=np.float64)
    worst = 0.0
    flat = point.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + eps
        up, _ = f(point)
        flat[idx] = orig - eps
        down, _ = f(point)
        flat[idx] = orig
        numeric = (up - down) / (2.0 * eps)
        a = analytic.reshape(-1)[idx]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
        worst = max(worst, err)
    return worst
