"""Training-example generation and the RAED v1 dataset file format.

An example is a 2x88 real matrix (I row, Q row) cut from a modulated
signal after it has been through the impairment chain, then normalized to
unit mean power. Only clean targets are stored; denoising noise is drawn
fresh at train time so one dataset serves any noise level.

Example i is generated from its own generator seeded by (seed, i), so
datasets are reproducible bit for bit and examples can be produced in
parallel in any order.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsp import (
    ChannelParams,
    ChannelSampler,
    apply_channel,
    gaussian_taps,
    modulate_gfsk,
    modulate_qpsk,
    normalize_power,
    rrc_taps,
)
from .errors import FormatError, ParameterError

__all__ = ["Dataset", "build_dataset", "save_dataset", "load_dataset"]

MAGIC = b"RAED"
VERSION = 1
_HEADER = struct.Struct("<4sIBIIQ")  # magic, version, mod code, n, len, seed
_MOD_CODES = {"qpsk": 0, "gfsk": 1}
_MOD_NAMES = {v: k for k, v in _MOD_CODES.items()}

# Extra symbols generated beyond the crop length so the random window start
# has room to move and filter transients can be trimmed.
_MARGIN_SYMBOLS = 16


@dataclass
class Dataset:
    """Clean targets (n, 2, example_len) float32 plus generation metadata."""

    targets: np.ndarray
    modulation: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.targets.ndim != 3 or self.targets.shape[1] != 2:
            raise ParameterError(f"targets must be (n, 2, T), got {self.targets.shape}")
        if self.modulation not in _MOD_CODES:
            raise ParameterError(f"unknown modulation {self.modulation!r}")

    def __len__(self):
        return self.targets.shape[0]

    @property
    def example_len(self):
        return self.targets.shape[2]


def _generate_example(modulation, example_len, sps, channel, rng,
                      beta, span, bt, mod_index):
    """One clean target: bits -> modulate -> channel -> crop -> normalize."""
    n_sym = -(-example_len // sps) + _MARGIN_SYMBOLS
    if modulation == "qpsk":
        bits = rng.integers(0, 2, size=2 * n_sym)
        shaping = rrc_taps(beta, sps, span)
        sig = modulate_qpsk(bits, sps, shaping)
        delay = (len(shaping) - 1) // 2
    else:
        bits = rng.integers(0, 2, size=n_sym)
        g = gaussian_taps(bt, sps, span=4)
        sig = modulate_gfsk(bits, sps, bt=bt, mod_index=mod_index)
        delay = (len(g) - 1) // 2

    # Drop the filter ramp-in/out so crops come from the filled region.
    z = sig.to_complex()[delay:delay + n_sym * sps]
    sig = type(sig).from_complex(z)

    params = channel.draw(rng) if isinstance(channel, ChannelSampler) else channel
    out = apply_channel(sig, params, rng)

    start = int(rng.integers(0, len(out) - example_len + 1))
    window = type(out)(out.i[start:start + example_len], out.q[start:start + example_len])
    window = normalize_power(window)
    return np.stack([window.i, window.q]).astype(np.float32)


def build_dataset(modulation, n_examples, example_len=88, sps=4, channel=None,
                  seed=0, *, beta=0.35, span=8, bt=0.3, mod_index=0.5, workers=1):
    """Generate a dataset of clean targets.

    channel may be a fixed ChannelParams (used for every example), a
    ChannelSampler (fresh draw per example), or None for the default mild
    sampler. Deterministic for a given seed regardless of worker count.
    """
    modulation = modulation.lower()
    if modulation not in _MOD_CODES:
        raise ParameterError(f"modulation must be qpsk or gfsk, got {modulation!r}")
    if n_examples < 1:
        raise ParameterError(f"n_examples must be >= 1, got {n_examples}")
    if example_len < 2 * sps:
        raise ParameterError(f"example_len must be >= 2*sps, got {example_len}")
    if not 0 <= seed < 2 ** 64:
        raise ParameterError(f"seed must be a u64, got {seed}")
    if channel is None:
        channel = ChannelSampler()

    def make(i):
        rng = np.random.default_rng([seed, i])
        return _generate_example(modulation, example_len, sps, channel, rng,
                                 beta, span, bt, mod_index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            examples = list(pool.map(make, range(n_examples)))
    else:
        examples = [make(i) for i in range(n_examples)]

    snr_db = channel.snr_db if hasattr(channel, "snr_db") else None
    metadata = {
        "seed": int(seed),
        "sps": int(sps),
        "snr_db": snr_db,
        "beta": beta,
        "span": span,
        "bt": bt,
        "mod_index": mod_index,
    }
    return Dataset(targets=np.stack(examples), modulation=modulation, metadata=metadata)


def save_dataset(dataset, path):
    """Write a RAED v1 file (little-endian, clean targets only)."""
    n, _, example_len = dataset.targets.shape
    header = _HEADER.pack(MAGIC, VERSION, _MOD_CODES[dataset.modulation],
                          n, example_len, dataset.metadata.get("seed", 0))
    payload = np.ascontiguousarray(dataset.targets, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_dataset(path):
    """Read a RAED v1 file back into a Dataset."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, mod_code, n, example_len, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if mod_code not in _MOD_NAMES:
        raise FormatError(f"{path}: unknown modulation code {mod_code}")
    expected = _HEADER.size + n * 2 * example_len * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: payload is {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    targets = data.reshape(n, 2, example_len).copy()
    return Dataset(targets=targets, modulation=_MOD_NAMES[mod_code],
                   metadata={"seed": seed})
