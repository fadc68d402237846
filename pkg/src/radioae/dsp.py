"""Baseband signal synthesis and channel impairments.

Generates pulse-shaped QPSK / GFSK IQ time series and passes them through
a composable impairment chain: multipath impulse response, fractional
clock resampling, oscillator phase walk plus carrier offset, and
calibrated additive white Gaussian noise. All randomness flows through an
explicit numpy Generator so every output is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "ComplexSeries",
    "FilterTaps",
    "SymbolStream",
    "ChannelParams",
    "ChannelSampler",
    "IDENTITY_CHANNEL",
    "NOISELESS",
    "rrc_taps",
    "gaussian_taps",
    "qpsk_symbols",
    "modulate_qpsk",
    "modulate_gfsk",
    "apply_channel",
    "awgn",
    "measure_snr",
    "normalize_power",
]

# Sentinel SNR meaning "add no noise".
NOISELESS = math.inf

QPSK_POINTS = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / math.sqrt(2)


@dataclass(frozen=True)
class ComplexSeries:
    """A baseband IQ time series: parallel real I and Q sample rows."""

    i: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "q", q)
        if i.shape != q.shape or i.ndim != 1:
            raise ParameterError(f"i/q must be equal-length 1-D, got {i.shape} / {q.shape}")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(q))):
            raise ParameterError("samples must be finite")

    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=np.complex128)
        return cls(z.real.copy(), z.imag.copy())

    def to_complex(self):
        return self.i + 1j * self.q

    def __len__(self):
        return self.i.size

    def power(self):
        """Mean per-sample power, mean(i^2 + q^2)."""
        return float(np.mean(self.i * self.i + self.q * self.q))


@dataclass(frozen=True)
class FilterTaps:
    """Real FIR taps plus the oversampling they were designed for."""

    taps: np.ndarray
    sps: int
    kind: str

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if taps.size % 2 != 1:
            raise ParameterError(f"tap count must be odd, got {taps.size}")
        if self.kind in ("rrc", "gaussian"):
            if not np.allclose(taps, taps[::-1], rtol=0.0, atol=1e-12):
                raise ParameterError(f"{self.kind} taps must be symmetric")

    def __len__(self):
        return self.taps.size


@dataclass(frozen=True)
class SymbolStream:
    """Constellation points carrying bits_per_symbol bits each."""

    symbols: np.ndarray
    bits_per_symbol: int


def rrc_taps(beta, sps, span):
    """Root-raised-cosine taps, span*sps+1 long, normalized to unit energy.

    Time is measured in symbol periods (t = k/sps). The removable
    singularities at t = 0 and |t| = 1/(4*beta) are filled with their
    analytic limits.
    """
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must be in (0, 1], got {beta}")
    if sps < 2 or int(sps) != sps:
        raise ParameterError(f"sps must be an integer >= 2, got {sps}")
    if span < 4 or int(span) != span:
        raise ParameterError(f"span must be an integer >= 4, got {span}")
    sps, span = int(sps), int(span)
    half = span * sps // 2
    t = np.arange(-half, half + 1) / sps
    h = np.empty(t.size)
    at_zero = t == 0.0
    at_sing = np.abs(np.abs(4.0 * beta * t) - 1.0) < 1e-9
    h[at_zero] = 1.0 - beta + 4.0 * beta / math.pi
    h[at_sing] = (beta / math.sqrt(2.0)) * (
        (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * beta))
        + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * beta))
    )
    rest = ~(at_zero | at_sing)
    tr = t[rest]
    h[rest] = (
        np.sin(math.pi * tr * (1.0 - beta))
        + 4.0 * beta * tr * np.cos(math.pi * tr * (1.0 + beta))
    ) / (math.pi * tr * (1.0 - (4.0 * beta * tr) ** 2))
    h /= math.sqrt(float(np.sum(h * h)))
    return FilterTaps(taps=h, sps=sps, kind="rrc")


def gaussian_taps(bt, sps, span=4):
    """Gaussian lowpass taps with unit DC gain (sum == 1).

    sigma = sqrt(ln 2) / (2*pi*BT) in symbol periods, the standard GFSK
    pre-filter width for a given bandwidth-time product.
    """
    if not 0.0 < bt <= 1.0:
        raise ParameterError(f"bt must be in (0, 1], got {bt}")
    if sps < 2 or int(sps) != sps:
        raise ParameterError(f"sps must be an integer >= 2, got {sps}")
    if span < 1 or int(span) != span:
        raise ParameterError(f"span must be an integer >= 1, got {span}")
    sps, span = int(sps), int(span)
    sigma = math.sqrt(math.log(2.0)) / (2.0 * math.pi * bt)
    half = span * sps // 2
    t = np.arange(-half, half + 1) / sps
    h = np.exp(-(t * t) / (2.0 * sigma * sigma))
    h /= np.sum(h)
    return FilterTaps(taps=h, sps=sps, kind="gaussian")


def qpsk_symbols(bits):
    """Gray-map bit pairs to unit-modulus constellation points.

    (0,0)->(+1+j)/sqrt2, (0,1)->(-1+j)/sqrt2, (1,1)->(-1-j)/sqrt2,
    (1,0)->(+1-j)/sqrt2: adjacent points differ in one bit.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % 2 != 0:
        raise ParameterError(f"QPSK needs an even bit count, got {bits.size}")
    if bits.size == 0:
        raise ParameterError("empty bit sequence")
    if np.any((bits != 0) & (bits != 1)):
        raise ParameterError("bits must be 0 or 1")
    pairs = bits.reshape(-1, 2)
    idx = pairs[:, 0] * 2 + pairs[:, 1]  # Gray order via the point table
    return SymbolStream(symbols=QPSK_POINTS[idx], bits_per_symbol=2)


def modulate_qpsk(bits, sps, shaping):
    """Pulse-shaped QPSK baseband signal.

    Symbols are placed at slot starts with zeros between (upsample by sps)
    and convolved with the shaping taps; the full convolution is returned,
    length n_symbols*sps + len(taps) - 1, for the caller to trim.
    """
    if shaping.sps != sps:
        raise ParameterError(f"shaping designed for sps={shaping.sps}, asked for {sps}")
    stream = qpsk_symbols(bits)
    up = np.zeros(stream.symbols.size * sps, dtype=np.complex128)
    up[::sps] = stream.symbols
    z = np.convolve(up, shaping.taps)
    return ComplexSeries.from_complex(z)


def modulate_gfsk(bits, sps, bt=0.3, mod_index=0.5, span=4):
    """Gaussian-filtered binary FSK with constant unit envelope.

    Bits map NRZ to +/-1, are held for sps samples, smoothed by the
    Gaussian pre-filter, then integrated into phase with increment
    pi * mod_index * f[t] / sps; the output is exp(j*phase).
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size == 0:
        raise ParameterError("empty bit sequence")
    if sps < 2 or int(sps) != sps:
        raise ParameterError(f"sps must be an integer >= 2, got {sps}")
    if mod_index <= 0:
        raise ParameterError(f"mod_index must be positive, got {mod_index}")
    if np.any((bits != 0) & (bits != 1)):
        raise ParameterError("bits must be 0 or 1")
    sps = int(sps)
    nrz = 2.0 * bits - 1.0
    drive = np.repeat(nrz, sps)
    g = gaussian_taps(bt, sps, span=span)
    f = np.convolve(drive, g.taps)
    phase = np.cumsum(math.pi * mod_index * f / sps)
    z = np.exp(1j * phase)
    return ComplexSeries.from_complex(z)


@dataclass(frozen=True)
class ChannelParams:
    """One concrete realization of the impairment chain.

    phase_noise_std: per-sample std of the oscillator random-walk increment
        (radians). clock_ppm / clock_delay: sample-rate offset in ppm and a
        fractional initial delay in samples, applied by linear
        interpolation. impulse_response: complex multipath taps (first tap
        the direct path). snr_db: additive-noise level relative to signal
        power; NOISELESS (inf) disables it. carrier_offset: normalized
        frequency offset in cycles/sample.
    """

    phase_noise_std: float = 0.0
    clock_ppm: float = 0.0
    clock_delay: float = 0.0
    impulse_response: np.ndarray = field(default_factory=lambda: np.array([1.0 + 0.0j]))
    snr_db: float = NOISELESS
    carrier_offset: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.impulse_response, dtype=np.complex128)
        object.__setattr__(self, "impulse_response", h)
        if h.size == 0:
            raise ParameterError("impulse_response must be non-empty")
        if h[0] == 0:
            raise ParameterError("first impulse-response tap must be nonzero")
        if self.phase_noise_std < 0:
            raise ParameterError("phase_noise_std must be >= 0")
        if not (math.isfinite(self.snr_db) or self.snr_db == NOISELESS):
            raise ParameterError(f"snr_db must be finite or NOISELESS, got {self.snr_db}")


IDENTITY_CHANNEL = ChannelParams()


@dataclass(frozen=True)
class ChannelSampler:
    """Distribution over ChannelParams for per-example channel draws.

    Defaults are the mild impairment mix used for dataset generation:
    small oscillator walk, clock offset uniform in +/-clock_ppm_max, a
    two-tap multipath response [1, amp*e^{j theta}] with random theta,
    20 dB additive noise, carrier offset uniform in +/-carrier_offset_max.
    """

    phase_noise_std: float = 0.001
    clock_ppm_max: float = 50.0
    multipath_amp: float = 0.05
    snr_db: float = 20.0
    carrier_offset_max: float = 0.0025

    def draw(self, rng):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        h = np.array([1.0 + 0.0j, self.multipath_amp * np.exp(1j * theta)])
        if self.multipath_amp == 0.0:
            h = np.array([1.0 + 0.0j])
        return ChannelParams(
            phase_noise_std=self.phase_noise_std,
            clock_ppm=rng.uniform(-self.clock_ppm_max, self.clock_ppm_max),
            impulse_response=h,
            snr_db=self.snr_db,
            carrier_offset=rng.uniform(-self.carrier_offset_max, self.carrier_offset_max),
        )


def _resample_linear(z, rate, delay):
    """Read z at positions delay + n*rate by linear interpolation.

    Positions past the data are zero-filled. rate == 1, delay == 0 is the
    exact identity and is short-circuited to keep it bit-exact.
    """
    if rate == 1.0 and delay == 0.0:
        return z.copy()
    n = np.arange(z.size)
    pos = delay + rate * n
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    valid_lo = (lo >= 0) & (lo < z.size)
    valid_hi = (lo + 1 >= 0) & (lo + 1 < z.size)
    a = np.where(valid_lo, z[np.clip(lo, 0, z.size - 1)], 0.0)
    b = np.where(valid_hi, z[np.clip(lo + 1, 0, z.size - 1)], 0.0)
    return a * (1.0 - frac) + b * frac


def apply_channel(signal, params, rng):
    """Run a signal through the impairment chain.

    Order: multipath convolution, fractional clock resampling, rotation by
    carrier offset plus oscillator random walk, then calibrated AWGN
    relative to the post-impairment power. Output length equals the input
    length (trimmed or zero-padded).
    """
    if len(signal) == 0:
        raise ParameterError("empty signal")
    n_in = len(signal)
    z = signal.to_complex()

    h = params.impulse_response
    if not (h.size == 1 and h[0] == 1.0 + 0.0j):
        z = np.convolve(z, h)

    rate = 1.0 + params.clock_ppm * 1e-6
    z = _resample_linear(z, rate, params.clock_delay)

    if params.phase_noise_std > 0.0 or params.carrier_offset != 0.0:
        t = np.arange(z.size)
        phase = 2.0 * math.pi * params.carrier_offset * t
        if params.phase_noise_std > 0.0:
            phase = phase + np.cumsum(rng.normal(0.0, params.phase_noise_std, z.size))
        z = z * np.exp(1j * phase)

    if z.size < n_in:
        z = np.concatenate([z, np.zeros(n_in - z.size, dtype=np.complex128)])
    else:
        z = z[:n_in]

    out = ComplexSeries.from_complex(z)
    if params.snr_db != NOISELESS:
        out = awgn(out, params.snr_db, rng)
    return out


def awgn(signal, snr_db, rng):
    """Add circular complex Gaussian noise at the requested SNR.

    Per-complex-sample noise variance is P_signal / 10^(snr_db/10), split
    equally across I and Q. snr_db == NOISELESS returns the input as is.
    """
    p = signal.power()
    if p <= 0.0:
        raise ParameterError("cannot set an SNR for a zero-power signal")
    if snr_db == NOISELESS:
        return signal
    noise_var = p / (10.0 ** (snr_db / 10.0))
    std = math.sqrt(noise_var / 2.0)
    noise = rng.normal(0.0, std, size=(2, len(signal)))
    return ComplexSeries(signal.i + noise[0], signal.q + noise[1])


def measure_snr(clean, noisy):
    """10*log10(P_clean / P_residual) in dB; NOISELESS if residual is 0."""
    if len(clean) != len(noisy):
        raise ParameterError(f"length mismatch: {len(clean)} vs {len(noisy)}")
    p_clean = clean.power()
    if p_clean <= 0.0:
        raise ParameterError("clean signal has zero power")
    res_i = noisy.i - clean.i
    res_q = noisy.q - clean.q
    p_res = float(np.mean(res_i * res_i + res_q * res_q))
    if p_res == 0.0:
        return NOISELESS
    return 10.0 * math.log10(p_clean / p_res)


def normalize_power(signal):
    """Scale so the mean per-sample power is exactly 1."""
    p = signal.power()
    if p <= 0.0:
        raise ParameterError("cannot normalize a zero-power signal")
    s = 1.0 / math.sqrt(p)
    return ComplexSeries(signal.i * s, signal.q * s)
