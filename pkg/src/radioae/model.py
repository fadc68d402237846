"""The convolutional denoising autoencoder.

Forward chain for the default geometry:

    input 2x88
      -> depthwise conv, 2 filters x 40 taps, pad 40   -> 4x129
      -> flatten (filter-major, channel-minor, time-innermost) -> 516
      -> dropout 0.5 (train mode only)
      -> dense 516->44, hard sigmoid                   -> code in [0,1]^44
      -> dense 44->176, relu, reshape                  -> 2x88
      -> depthwise conv, 1 filter x 81 taps, pad 40    -> 2x88

The encoder convolution output is linear (the filters act as learned
matched filters); the final decoder convolution is linear so negative IQ
samples are reachable. Loss = MSE(reconstruction, clean) + L1 on the code
+ L2 on all weight tensors, with exact analytic gradients throughout.

Checkpoints use the RAEM v1 container: named float32 tensor table plus
the Adam hyperparameters, accumulators and step counter.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .adam import AdamHyper, AdamState
from .errors import FormatError, ParameterError, ShapeError
from .layers import (
    conv1d_depthwise_batch,
    conv1d_depthwise_batch_backward,
    dense,
    dense_backward,
    dropout,
    hard_sigmoid,
    hard_sigmoid_grad,
    l1_activity_penalty,
    l2_weight_penalty,
    relu,
    relu_grad,
)

__all__ = [
    "ModelParams",
    "LossBreakdown",
    "init_model",
    "encode",
    "decode",
    "forward_pass",
    "forward_loss",
    "forward_loss_batch",
    "param_count",
    "save_model",
    "load_model",
    "DROPOUT_RATE",
]

DROPOUT_RATE = 0.5

PARAM_NAMES = ("enc_filters", "enc_dense_w", "enc_dense_b",
               "dec_dense_w", "dec_dense_b", "dec_filter")


@dataclass
class ModelParams:
    """All learnable tensors. Geometry is derived from the shapes."""

    enc_filters: np.ndarray   # (F, K_enc)
    enc_dense_w: np.ndarray   # (F*C*T_conv, code)
    enc_dense_b: np.ndarray   # (code,)
    dec_dense_w: np.ndarray   # (code, C*T)
    dec_dense_b: np.ndarray   # (C*T,)
    dec_filter: np.ndarray    # (1, K_dec), K_dec odd

    def __post_init__(self):
        if self.dec_filter.shape[0] != 1:
            raise ShapeError("decoder uses a single shared filter")
        if self.dec_filter.shape[1] % 2 != 1:
            raise ShapeError("decoder kernel length must be odd")
        flat, code = self.enc_dense_w.shape
        if self.enc_dense_b.shape != (code,):
            raise ShapeError("enc_dense bias width must match code width")
        if self.dec_dense_w.shape[0] != code:
            raise ShapeError("dec_dense input width must match code width")
        if self.dec_dense_b.shape != (self.dec_dense_w.shape[1],):
            raise ShapeError("dec_dense bias width must match its output")
        if self.dec_dense_w.shape[1] != self.channels * self.example_len:
            raise ShapeError("dec_dense output must reshape to (channels, example_len)")
        if flat != self.enc_filters.shape[0] * self.channels * self.conv_len:
            raise ShapeError(
                f"enc_dense expects {flat} inputs but the conv stage emits "
                f"{self.enc_filters.shape[0] * self.channels * self.conv_len}")

    # Default geometry: 2 channels, 88 samples. Kept as attributes so the
    # shape checks above stay in one place.
    channels = 2
    example_len = 88

    @property
    def enc_pad(self):
        return self.enc_filters.shape[1]

    @property
    def dec_pad(self):
        return (self.dec_filter.shape[1] - 1) // 2

    @property
    def conv_len(self):
        # encoder conv output length per filter-channel pair
        return self.example_len + 2 * self.enc_pad - self.enc_filters.shape[1] + 1

    @property
    def code_width(self):
        return self.enc_dense_w.shape[1]

    def weights(self):
        """Weight tensors subject to L2 (biases excluded)."""
        return {"enc_filters": self.enc_filters, "enc_dense_w": self.enc_dense_w,
                "dec_dense_w": self.dec_dense_w, "dec_filter": self.dec_filter}

    def tensors(self):
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def shapes(self):
        return {name: getattr(self, name).shape for name in PARAM_NAMES}

    def astype(self, dtype):
        return ModelParams(**{k: v.astype(dtype) for k, v in self.tensors().items()})


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_model(seed, *, n_filters=2, enc_kernel=40, code_width=44,
               dec_kernel=81, dtype=np.float32):
    """Uniform +/-sqrt(6/(fan_in+fan_out)) weights, zero biases.

    float32 is the training/checkpoint precision; gradient checks cast to
    float64 via ModelParams.astype.
    """
    rng = np.random.default_rng(seed)
    C, T = ModelParams.channels, ModelParams.example_len
    conv_len = T + 2 * enc_kernel - enc_kernel + 1
    flat = n_filters * C * conv_len
    hidden = C * T
    return ModelParams(
        enc_filters=_glorot(rng, (n_filters, enc_kernel), enc_kernel, enc_kernel, dtype),
        enc_dense_w=_glorot(rng, (flat, code_width), flat, code_width, dtype),
        enc_dense_b=np.zeros(code_width, dtype=dtype),
        dec_dense_w=_glorot(rng, (code_width, hidden), code_width, hidden, dtype),
        dec_dense_b=np.zeros(hidden, dtype=dtype),
        dec_filter=_glorot(rng, (1, dec_kernel), dec_kernel, dec_kernel, dtype),
    )


@dataclass(frozen=True)
class LossBreakdown:
    mse: float
    l1_activity: float
    l2_weights: float
    total: float


def _check_input(model, x):
    x = np.asarray(x)
    want = (model.channels, model.example_len)
    if x.shape[-2:] != want:
        raise ShapeError(f"input must end in {want}, got {x.shape}")
    return x


def _encode_batch(model, x, mode, rng):
    """Returns (code, cache) for x of shape (B, C, T)."""
    h1 = conv1d_depthwise_batch(x, model.enc_filters, model.enc_pad)  # (B,F,C,Tc)
    B = h1.shape[0]
    flat = h1.reshape(B, -1)
    dropped, mask = dropout(flat, DROPOUT_RATE, mode, rng)
    z1 = dense(dropped, model.enc_dense_w, model.enc_dense_b)
    code = hard_sigmoid(z1)
    cache = {"x": x, "h1": h1, "dropped": dropped, "mask": mask, "z1": z1}
    return code, cache


def _decode_batch(model, code):
    """Returns (recon, cache) for code of shape (B, code_width)."""
    B = code.shape[0]
    z2 = dense(code, model.dec_dense_w, model.dec_dense_b)
    a2 = relu(z2)
    y = a2.reshape(B, model.channels, model.example_len)
    out4 = conv1d_depthwise_batch(y, model.dec_filter, model.dec_pad)  # (B,1,C,T)
    recon = out4.reshape(B, model.channels, model.example_len)
    cache = {"code": code, "z2": z2, "y": y}
    return recon, cache


def encode(model, x, mode="eval", rng=None):
    """Map one 2x88 example to its code in [0,1]^code_width."""
    x = _check_input(model, x)
    code, _ = _encode_batch(model, x[None], mode, rng)
    return code[0]


def decode(model, code):
    """Map one code back to a 2x88 reconstruction."""
    code = np.asarray(code)
    if code.shape != (model.code_width,):
        raise ShapeError(f"code must be ({model.code_width},), got {code.shape}")
    recon, _ = _decode_batch(model, code[None])
    return recon[0]


def forward_pass(model, x, mode="eval", rng=None):
    """Full forward trace of one example; returns the named intermediates.

    Keys: conv_out (F,C,Tc), flat, code, hidden, reconstruction.
    """
    x = _check_input(model, x)
    code, ecache = _encode_batch(model, x[None], mode, rng)
    recon, dcache = _decode_batch(model, code)
    return {
        "conv_out": ecache["h1"][0],
        "flat": ecache["dropped"][0],
        "code": code[0],
        "hidden": dcache["z2"][0],
        "reconstruction": recon[0],
    }


def forward_loss_batch(model, x_noisy, x_clean, lambda1, lambda2, mode, rng=None):
    """Mean loss over a batch plus gradients for every parameter tensor.

    Data terms (MSE, L1 activity) are averaged over the batch; the L2
    weight penalty enters once. Returns (LossBreakdown, grads, code).
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ParameterError("penalty weights must be >= 0")
    x_noisy = _check_input(model, x_noisy)
    x_clean = _check_input(model, x_clean)
    if x_noisy.shape != x_clean.shape:
        raise ShapeError(f"noisy {x_noisy.shape} vs clean {x_clean.shape}")
    if x_noisy.ndim != 3:
        raise ShapeError(f"batch input must be (B, C, T), got {x_noisy.shape}")
    B = x_noisy.shape[0]

    code, ecache = _encode_batch(model, x_noisy, mode, rng)
    recon, dcache = _decode_batch(model, code)

    # mean over batch of per-example MSE == mean over all elements
    diff = recon - x_clean
    per_elem = diff.size // B
    mse_mean = float(np.mean(diff * diff))
    d_recon = 2.0 * diff / (per_elem * B)

    l1_sum, d_code_l1 = l1_activity_penalty(code, lambda1)
    l1_mean = l1_sum / B

    w = model.weights()
    l2, l2_grads = l2_weight_penalty(list(w.values()), lambda2)

    # ---- backward ----
    d_out4 = d_recon.reshape(B, 1, model.channels, model.example_len)
    d_y, d_wc2 = conv1d_depthwise_batch_backward(
        dcache["y"], model.dec_filter, model.dec_pad, d_out4)
    d_a2 = d_y.reshape(B, -1)
    d_z2 = d_a2 * relu_grad(dcache["z2"])
    d_code, d_w2, d_b2 = dense_backward(code, model.dec_dense_w, d_z2)
    d_code = d_code + d_code_l1 / B
    d_z1 = d_code * hard_sigmoid_grad(ecache["z1"])
    d_dropped, d_w1, d_b1 = dense_backward(ecache["dropped"], model.enc_dense_w, d_z1)
    d_flat = d_dropped * ecache["mask"]
    d_h1 = d_flat.reshape(ecache["h1"].shape)
    _, d_wc1 = conv1d_depthwise_batch_backward(
        x_noisy, model.enc_filters, model.enc_pad, d_h1)

    grads = {
        "enc_filters": d_wc1 + l2_grads[0],
        "enc_dense_w": d_w1 + l2_grads[1],
        "enc_dense_b": d_b1,
        "dec_dense_w": d_w2 + l2_grads[2],
        "dec_dense_b": d_b2,
        "dec_filter": d_wc2 + l2_grads[3],
    }
    total = mse_mean + l1_mean + l2
    breakdown = LossBreakdown(mse=mse_mean, l1_activity=l1_mean, l2_weights=l2,
                              total=total)
    return breakdown, grads, code


def forward_loss(model, x_noisy, x_clean, lambda1=1e-4, lambda2=1e-4,
                 mode="eval", rng=None):
    """Single-example regularized loss and exact parameter gradients."""
    x_noisy = np.asarray(x_noisy)
    x_clean = np.asarray(x_clean)
    if x_noisy.ndim != 2 or x_clean.ndim != 2:
        raise ShapeError("forward_loss takes single 2x88 examples")
    breakdown, grads, _ = forward_loss_batch(
        model, x_noisy[None], x_clean[None], lambda1, lambda2, mode, rng)
    return breakdown, grads


def param_count(model):
    """(convolutional taps, dense weight values); biases excluded."""
    conv = model.enc_filters.size + model.dec_filter.size
    den = model.enc_dense_w.size + model.dec_dense_w.size
    return conv, den


# ---------------------------------------------------------------------------
# RAEM v1 checkpoints
# ---------------------------------------------------------------------------

MAGIC = b"RAEM"
VERSION = 1
_HEAD = struct.Struct("<4sII")        # magic, version, step
_HYPER = struct.Struct("<dddd")       # alpha, beta1, beta2, epsilon
_COUNT = struct.Struct("<I")
_NAMELEN = struct.Struct("<H")
_NDIM = struct.Struct("<B")
_DIM = struct.Struct("<I")


def _write_tensor(fh, name, arr):
    encoded = name.encode()
    fh.write(_NAMELEN.pack(len(encoded)))
    fh.write(encoded)
    fh.write(_NDIM.pack(arr.ndim))
    for d in arr.shape:
        fh.write(_DIM.pack(d))
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, raw, path):
        self.raw = raw
        self.path = path
        self.off = 0

    def take(self, fmt):
        if self.off + fmt.size > len(self.raw):
            raise FormatError(f"{self.path}: truncated file")
        vals = fmt.unpack_from(self.raw, self.off)
        self.off += fmt.size
        return vals

    def take_bytes(self, n, what):
        if self.off + n > len(self.raw):
            raise FormatError(f"{self.path}: truncated {what}")
        chunk = self.raw[self.off:self.off + n]
        self.off += n
        return chunk


def save_model(model, optimizer_state, path):
    """Write a RAEM v1 checkpoint; round-trips float32 tensors bit-exactly."""
    h = optimizer_state.hyper
    tensors = {}
    for name, arr in model.tensors().items():
        tensors[f"param/{name}"] = arr
    for name in PARAM_NAMES:
        tensors[f"adam_m/{name}"] = optimizer_state.m[name]
        tensors[f"adam_v/{name}"] = optimizer_state.v[name]
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, optimizer_state.step))
        fh.write(_HYPER.pack(h.alpha, h.beta1, h.beta2, h.epsilon))
        fh.write(_COUNT.pack(len(tensors)))
        for name, arr in tensors.items():
            _write_tensor(fh, name, arr)


def load_model(path) -> tuple[ModelParams, AdamState]:
    """Read a RAEM v1 checkpoint; raises FormatError naming the bad field."""
    with open(path, "rb") as fh:
        raw = fh.read()
    r = _Reader(raw, path)
    magic, version, step = r.take(_HEAD)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    alpha, beta1, beta2, epsilon = r.take(_HYPER)
    (n_tensors,) = r.take(_COUNT)
    tensors = {}
    for _ in range(n_tensors):
        (name_len,) = r.take(_NAMELEN)
        name = r.take_bytes(name_len, "tensor name").decode()
        (ndim,) = r.take(_NDIM)
        shape = tuple(r.take(_DIM)[0] for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        data = r.take_bytes(count * 4, f"tensor {name}")
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(shape).copy()
    if r.off != len(raw):
        raise FormatError(f"{path}: {len(raw) - r.off} trailing bytes")

    missing = [f"{p}/{n}" for p in ("param", "adam_m", "adam_v") for n in PARAM_NAMES
               if f"{p}/{n}" not in tensors]
    if missing:
        raise FormatError(f"{path}: missing tensors {missing}")
    try:
        model = ModelParams(**{n: tensors[f"param/{n}"] for n in PARAM_NAMES})
    except ShapeError as exc:
        raise FormatError(f"{path}: inconsistent architecture: {exc}") from exc
    state = AdamState(hyper=AdamHyper(alpha, beta1, beta2, epsilon), step=step)
    for n in PARAM_NAMES:
        state.m[n] = tensors[f"adam_m/{n}"]
        state.v[n] = tensors[f"adam_v/{n}"]
        if state.m[n].shape != tensors[f"param/{n}"].shape:
            raise FormatError(f"{path}: adam_m/{n} shape mismatch")
    return model, state
