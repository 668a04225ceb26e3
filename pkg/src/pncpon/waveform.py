"""Bit sequences and uniformly sampled waveforms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRBS7_PERIOD = 127
DEFAULT_SAMPLES_PER_BIT = 16


@dataclass(frozen=True)
class BitSequence:
    bits: np.ndarray
    period_len: int = PRBS7_PERIOD

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size == 0:
            raise ValueError("bit sequence must be a non-empty 1-D array")
        if np.any(bits > 1):
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return self.bits.size

    def complement(self) -> "BitSequence":
        return BitSequence(1 - self.bits, self.period_len)


@dataclass(frozen=True)
class SampledWaveform:
    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("waveform samples must be 1-D")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples) -> "SampledWaveform":
        return SampledWaveform(samples, self.sample_rate, self.t0)

    def scaled(self, factor: float) -> "SampledWaveform":
        return self.with_samples(self.samples * factor)


def prbs7(seed: int, n_bits: int) -> BitSequence:
    """Fibonacci LFSR stream for x^7 + x^6 + 1, period 127."""
    if not 0 < seed < 128:
        raise ValueError("PRBS-7 seed must be a nonzero 7-bit state")
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    state = seed
    out = np.empty(min(n_bits, PRBS7_PERIOD), dtype=np.uint8)
    for i in range(out.size):
        out[i] = (state >> 6) & 1
        fb = ((state >> 6) ^ (state >> 5)) & 1
        state = ((state << 1) | fb) & 0x7F
    reps = -(-n_bits // PRBS7_PERIOD)
    return BitSequence(np.tile(out, reps)[:n_bits], PRBS7_PERIOD)


def nrz_shape(bits: BitSequence, samples_per_bit: int = DEFAULT_SAMPLES_PER_BIT,
              rise_fraction: float = 0.25, bit_rate: float = 2.5e9,
              cyclic: bool = False) -> SampledWaveform:
    """NRZ drive in [0, 1] with raised-cosine transitions centred on bit boundaries.

    Sample k sits at k / samples_per_bit bit periods, so bit i is centred on
    sample ``i * spb + spb // 2``.  With ``cyclic`` the last bit also
    transitions into the first, which is what a looping pattern generator
    produces in steady state.
    """
    if not 0.0 <= rise_fraction <= 0.5:
        raise ValueError("rise_fraction must lie in [0, 0.5]")
    if samples_per_bit < 1:
        raise ValueError("samples_per_bit must be >= 1")
    b = bits.bits.astype(float)
    n = b.size
    t = np.arange(n * samples_per_bit) / samples_per_bit
    out = b[np.minimum(np.floor(t).astype(int), n - 1)].copy()
    if rise_fraction > 0:
        j = np.rint(t).astype(int)
        dist = t - j
        near = np.abs(dist) < rise_fraction / 2
        if cyclic:
            prev_bit = b[(j - 1) % n]
            next_bit = b[j % n]
        else:
            near &= (j > 0) & (j < n)
            prev_bit = b[np.clip(j - 1, 0, n - 1)]
            next_bit = b[np.clip(j, 0, n - 1)]
        frac = 0.5 * (1.0 - np.cos(np.pi * (dist[near] + rise_fraction / 2) / rise_fraction))
        out[near] = prev_bit[near] + (next_bit[near] - prev_bit[near]) * frac
    return SampledWaveform(out, bit_rate * samples_per_bit)


def time_shift(w: SampledWaveform, dt: float, cyclic: bool = False) -> SampledWaveform:
    """Delay ``w`` by ``dt`` seconds: out(t) = w(t - dt).

    Fractional delays are linearly interpolated.  Non-cyclic shifts hold the
    edge value where no source sample exists.
    """
    if abs(dt) >= w.duration:
        raise ValueError("shift must be shorter than the waveform duration")
    s = dt * w.sample_rate
    n = len(w)
    if abs(s - round(s)) < 1e-9:
        k = int(round(s))
        if cyclic:
            return w.with_samples(np.roll(w.samples, k))
        out = np.empty(n)
        if k >= 0:
            out[k:] = w.samples[:n - k]
            out[:k] = w.samples[0]
        else:
            out[:n + k] = w.samples[-k:]
            out[n + k:] = w.samples[-1]
        return w.with_samples(out)
    src = np.arange(n) - s
    if cyclic:
        base = np.floor(src).astype(int)
        frac = src - base
        x = w.samples
        return w.with_samples((1 - frac) * x[base % n] + frac * x[(base + 1) % n])
    return w.with_samples(np.interp(src, np.arange(n), w.samples))


def dbm_to_mw(p_dbm):
    out = 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)
    return out if out.ndim else float(out)


def mw_to_dbm(p_mw):
    arr = np.asarray(p_mw, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("power must be positive to express in dBm")
    out = 10.0 * np.log10(arr)
    return out if out.ndim else float(out)
