"""Photodetection, filtering, self-signal cancellation and BER estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import optimize, signal

from .optics import OpticalEnvelope
from .waveform import BitSequence, SampledWaveform

C_M_PER_S = 299_792_458.0
ELECTRON_CHARGE = 1.602176634e-19


class BracketError(RuntimeError):
    """Target BER cannot be bracketed by the power search range."""


class CancellationError(RuntimeError):
    """Own signal not found in the received waveform."""


@dataclass(frozen=True)
class ReceiverParams:
    responsivity: float = 0.8
    load_thermal_noise_a_per_rthz: float = 2.0e-11
    shot_noise_enabled: bool = True
    rbs_beat_weight: float = 1.0
    lpf_cutoff_hz: float = 2.34e9
    lpf_order: int = 4
    beat_guard_hz: float = 10e9

    def __post_init__(self):
        if self.responsivity <= 0 or self.lpf_cutoff_hz <= 0:
            raise ValueError("responsivity and LPF cutoff must be positive")
        if self.load_thermal_noise_a_per_rthz < 0 or self.rbs_beat_weight < 0:
            raise ValueError("noise settings must be non-negative")
        if self.lpf_order < 1:
            raise ValueError("lpf_order must be >= 1")

    def noiseless(self) -> "ReceiverParams":
        return ReceiverParams(self.responsivity, 0.0, False, 0.0, self.lpf_cutoff_hz,
                              self.lpf_order, self.beat_guard_hz)


@dataclass(frozen=True)
class EyeStats:
    mu1: float
    mu0: float
    sigma1: float
    sigma0: float
    phase: float = 0.0

    @property
    def q_factor(self) -> float:
        opening = self.mu1 - self.mu0
        spread = self.sigma1 + self.sigma0
        if spread > 0:
            return opening / spread
        if opening == 0:
            return 0.0
        return math.copysign(math.inf, opening)

    @property
    def inverted(self) -> bool:
        return self.mu1 < self.mu0

    @property
    def threshold(self) -> float:
        """Decision level that equalises the two Gaussian tails."""
        spread = self.sigma1 + self.sigma0
        if spread == 0:
            return 0.5 * (self.mu1 + self.mu0)
        return (self.sigma0 * self.mu1 + self.sigma1 * self.mu0) / spread


def beat_frequency(l1_nm: float, l2_nm: float) -> float:
    if l1_nm <= 0 or l2_nm <= 0:
        raise ValueError("wavelengths must be positive")
    return C_M_PER_S * abs(l1_nm - l2_nm) * 1e-9 / (l1_nm * 1e-9 * l2_nm * 1e-9)


def photodetect(tracks, rbs_inputs, params: ReceiverParams, rng_seed=None) -> SampledWaveform:
    """p-i-n detection with integrated inverter; output current in amperes.

    ``rbs_inputs[i]`` is the backscatter power (mW) at ``tracks[i]``'s
    wavelength; it beats with that track.  Tracks closer than the beat guard
    produce an interference tone that is not averaged out by the receiver.
    """
    tracks = list(tracks)
    if not tracks:
        raise ValueError("need at least one optical track")
    rbs_inputs = list(rbs_inputs) if rbs_inputs is not None else [0.0] * len(tracks)
    if len(rbs_inputs) != len(tracks):
        raise ValueError("rbs_inputs must align with tracks")
    ref = tracks[0].power_mw
    for t in tracks[1:]:
        w = t.power_mw
        if len(w) != len(ref) or w.sample_rate != ref.sample_rate:
            raise ValueError("optical tracks must share a sample grid")
    fs = ref.sample_rate
    rng = np.random.default_rng(rng_seed)
    resp = params.responsivity
    p_w = [t.power_mw.samples * 1e-3 for t in tracks]
    current = resp * np.sum(p_w, axis=0)

    noise_var = np.full(current.shape, params.load_thermal_noise_a_per_rthz ** 2 * fs / 2)
    if params.shot_noise_enabled:
        noise_var += ELECTRON_CHARGE * current * fs
    for p, rbs_mw in zip(p_w, rbs_inputs):
        if rbs_mw > 0 and params.rbs_beat_weight > 0:
            noise_var += params.rbs_beat_weight * resp ** 2 * p * (rbs_mw * 1e-3)
    total = current + np.sqrt(noise_var) * rng.standard_normal(current.size)

    t = np.arange(current.size) / fs
    for (i, a), (j, b) in combinations(enumerate(tracks), 2):
        f = beat_frequency(a.wavelength_nm, b.wavelength_nm)
        if f >= params.beat_guard_hz:
            continue
        if f >= fs / 2:
            raise ValueError("wavelength beat tone above Nyquist; raise the sample rate")
        phase = rng.uniform(0, 2 * np.pi)
        total += 2 * resp * np.sqrt(p_w[i] * p_w[j]) * np.cos(2 * np.pi * f * t + phase)
    return SampledWaveform(-total, fs, ref.t0)


def _lpf_sos(params: ReceiverParams, fs: float):
    return signal.bessel(params.lpf_order, params.lpf_cutoff_hz, btype="low",
                         norm="mag", output="sos", fs=fs)


def lowpass(w: SampledWaveform, params: ReceiverParams) -> SampledWaveform:
    """Causal Bessel low-pass, -3 dB at the cutoff, unit DC gain.

    The filter state starts settled at the first sample so a constant input
    passes through unchanged.
    """
    if w.sample_rate <= 2 * params.lpf_cutoff_hz:
        raise ValueError("sample rate must exceed twice the LPF cutoff")
    sos = _lpf_sos(params, w.sample_rate)
    zi = signal.sosfilt_zi(sos) * w.samples[0]
    out, _ = signal.sosfilt(sos, w.samples, zi=zi)
    return w.with_samples(out)


def lpf_group_delay(params: ReceiverParams, fs: float) -> float:
    """Low-frequency group delay of the LPF in seconds."""
    b, a = signal.sos2tf(_lpf_sos(params, fs))
    _, gd = signal.group_delay((b, a), w=[1e-4], fs=fs)
    return float(gd[0]) / fs


def _ring_shift(x: np.ndarray, lag_samples: float, n_out: int) -> np.ndarray:
    """Read ``n_out`` samples of x(t - lag) from a ring buffer holding x."""
    n = x.size
    src = np.arange(n_out) - lag_samples
    base = np.floor(src).astype(int)
    frac = src - base
    return (1 - frac) * x[base % n] + frac * x[(base + 1) % n]


def pnc_decode(received: SampledWaveform, own_copy: SampledWaveform, search_window: float,
               confidence_floor: float = 0.05):
    """Cancel the buffered own signal from the inverted received waveform.

    The own copy is read as a ring buffer.  The lag is the cross-correlation
    peak within +/- ``search_window`` seconds, parabolically interpolated and
    then polished by minimising the residual energy.  The gain is the
    least-squares attenuator setting on AC-coupled signals.

    Returns ``(decoded, gain, lag_seconds)``.
    """
    if own_copy.sample_rate != received.sample_rate:
        raise ValueError("own copy and received waveform must share a sample rate")
    if len(own_copy) < len(received):
        raise ValueError("own copy must be at least as long as the received waveform")
    fs = received.sample_rate
    n = len(received)
    r = received.samples - received.samples.mean()
    s = own_copy.samples - own_copy.samples.mean()
    k_max = max(1, int(math.ceil(search_window * fs)))
    lags = np.arange(-k_max, k_max + 1)
    corr = np.array([np.dot(-r, _ring_shift(s, k, n)) for k in lags])
    i = int(np.argmax(corr))
    peak_seg = _ring_shift(s, lags[i], n)
    denom = np.linalg.norm(r) * np.linalg.norm(peak_seg)
    if denom == 0 or corr[i] / denom < confidence_floor:
        raise CancellationError("own signal not present in received waveform")

    delta = 0.0
    if 0 < i < lags.size - 1:
        c_m, c_0, c_p = corr[i - 1], corr[i], corr[i + 1]
        curv = c_m - 2 * c_0 + c_p
        if curv < 0:
            delta = 0.5 * (c_m - c_p) / curv
    coarse = lags[i] + delta

    def residual(lag):
        seg = _ring_shift(s, lag, n)
        seg = seg - seg.mean()
        g = -np.dot(r, seg) / np.dot(seg, seg)
        return np.dot(r + g * seg, r + g * seg)

    fine = optimize.minimize_scalar(residual, bounds=(coarse - 1.0, coarse + 1.0),
                                    method="bounded", options={"xatol": 1e-9})
    lag = float(fine.x) if fine.fun <= residual(coarse) else float(coarse)

    aligned = _ring_shift(own_copy.samples, lag, n)
    ac = aligned - aligned.mean()
    gain = float(-np.dot(r, ac) / np.dot(ac, ac))
    decoded = received.with_samples(received.samples + gain * aligned)
    return decoded, gain, lag / fs


def _sample_indices(n_samples: int, n_bits: int, spb: int, phase: float) -> np.ndarray:
    offset = spb // 2 + int(round(phase * spb))
    return (np.arange(n_bits) * spb + offset) % n_samples


def _spb(w: SampledWaveform, reference: BitSequence, bit_rate: float) -> int:
    spb_f = w.sample_rate / bit_rate
    spb = int(round(spb_f))
    if abs(spb_f - spb) > 1e-9:
        raise ValueError("sample rate must be an integer multiple of the bit rate")
    if len(w) != len(reference) * spb:
        raise ValueError("waveform must cover exactly the reference bits")
    return spb


def eye_stats(w: SampledWaveform, reference: BitSequence, bit_rate: float,
              sampling_phase: float = 0.0) -> EyeStats:
    """Per-class mean and spread at bit centre + ``sampling_phase`` bit periods."""
    spb = _spb(w, reference, bit_rate)
    bits = reference.bits
    if min(int(bits.sum()), int(bits.size - bits.sum())) < 10:
        raise ValueError("need at least 10 bits of each value")
    x = w.samples[_sample_indices(len(w), len(reference), spb, sampling_phase)]
    ones, zeros = x[bits == 1], x[bits == 0]
    return EyeStats(float(ones.mean()), float(zeros.mean()), float(ones.std()),
                    float(zeros.std()), sampling_phase)


def best_eye(w: SampledWaveform, reference: BitSequence, bit_rate: float,
             n_phases: int = 16) -> EyeStats:
    """Eye statistics at the phase, among ``n_phases`` across one bit, with the largest Q."""
    phases = np.arange(n_phases) / n_phases - 0.5
    eyes = [eye_stats(w, reference, bit_rate, p) for p in phases]
    return max(eyes, key=lambda e: e.q_factor)


def ber_from_q(q: float) -> float:
    if math.isnan(q):
        raise ValueError("q must not be NaN")
    if math.isinf(q):
        return 0.0 if q > 0 else 1.0
    return 0.5 * math.erfc(q / math.sqrt(2.0))


def count_errors(w: SampledWaveform, reference: BitSequence, threshold: float,
                 sampling_phase: float = 0.0, bit_rate: float = 2.5e9):
    spb = _spb(w, reference, bit_rate)
    x = w.samples[_sample_indices(len(w), len(reference), spb, sampling_phase)]
    decided = (x > threshold).astype(np.uint8)
    errors = int(np.count_nonzero(decided != reference.bits))
    return errors, errors / len(reference)


def required_power(chain, target_ber: float = 1e-9, tol_db: float = 0.05,
                   seed: int = 0, lo_dbm: float = -40.0, hi_dbm: float = 0.0) -> float:
    """Received power (dBm) at which the BER reaches ``target_ber``.

    ``chain`` is either a callable ``power_dbm -> ber`` or an object with a
    ``ber(power_dbm, seed)`` method; the same seed is reused at every probe.
    """
    ber_at = chain if callable(chain) else (lambda p: chain.ber(p, seed))
    log_t = math.log10(target_ber)

    def excess(p):
        b = ber_at(p)
        return (math.log10(b) if b > 0 else -math.inf) - log_t

    if excess(hi_dbm) > 0:
        raise BracketError(f"BER {target_ber:g} not reached at {hi_dbm} dBm (error floor)")
    if excess(lo_dbm) < 0:
        raise BracketError(f"BER already below {target_ber:g} at {lo_dbm} dBm")
    lo, hi = lo_dbm, hi_dbm
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
