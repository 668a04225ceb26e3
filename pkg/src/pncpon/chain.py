"""End-to-end inter-ONU link: two ONUs, remote node, one receiving ONU.

The receiving ONU's own signal loops back through the remote node together
with the remote ONU's signal.  With PNC enabled both transmit at once and the
receiver cancels its buffered copy; without PNC only the remote ONU transmits.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .optics import FiberSpan, RemoteNodeConfig, modulate, propagate, remote_node_combine
from .receiver import (CancellationError, ReceiverParams, EyeStats, best_eye, ber_from_q, lowpass,
                       lpf_group_delay, photodetect, pnc_decode)
from .waveform import PRBS7_PERIOD, BitSequence, SampledWaveform, nrz_shape, prbs7, time_shift


@dataclass(frozen=True)
class ChainConfig:
    bit_rate: float = 2.5e9
    samples_per_bit: int = 16
    n_blocks: int = 8
    own_wavelength_nm: float = 1548.73
    other_wavelength_nm: float = 1552.00
    own_fiber_km: float = 2.0
    other_fiber_km: float = 10.0
    atten_db_per_km: float = 0.2
    rbs_return_db_max: float = -31.0
    remote_node: RemoteNodeConfig = field(default_factory=RemoteNodeConfig)
    rn_input_dbm: float = -2.0
    extinction_ratio_db: float = 10.0
    rise_tx: float = 0.20
    rise_rx: float = 0.30
    receiver: ReceiverParams = field(default_factory=ReceiverParams)
    pnc: bool = True
    misalignment_s: float = 0.0
    own_seed: int = 0x7F
    other_seed: int = 0x15
    search_window_bits: float = 1.5
    n_phases: int = 16

    @property
    def n_bits(self) -> int:
        # one block = a PRBS-7 period followed by its complement for the remote ONU
        return 2 * PRBS7_PERIOD * self.n_blocks

    @property
    def bit_period(self) -> float:
        return 1.0 / self.bit_rate

    def with_receiver(self, **kw) -> "ChainConfig":
        return replace(self, receiver=replace(self.receiver, **kw))

    def simulate(self, power_dbm: float, seed: int = 0) -> "ChainResult":
        return simulate(self, power_dbm, seed)

    def ber(self, power_dbm: float, seed: int = 0) -> float:
        try:
            eye = simulate(self, power_dbm, seed).eye
        except CancellationError:
            # buffered copy cannot be aligned: the decoder outputs garbage
            return 0.5
        return ber_from_q(eye.q_factor)


@dataclass
class ChainResult:
    eye: EyeStats
    decision: SampledWaveform
    reference: BitSequence
    gain: float = float("nan")
    lag_s: float = float("nan")
    residual_ratio: float = float("nan")


def remote_bits(cfg: ChainConfig) -> BitSequence:
    """PRBS-7 alternating with its complement, period 254 bits.

    The alternation makes the remote pattern orthogonal to any shift of the
    127-periodic local pattern, so the least-squares attenuator setting is not
    biased by the remote data.
    """
    base = prbs7(cfg.other_seed, PRBS7_PERIOD).bits
    block = np.concatenate([base, 1 - base])
    return BitSequence(np.tile(block, cfg.n_blocks), 2 * PRBS7_PERIOD)


def own_bits(cfg: ChainConfig) -> BitSequence:
    return prbs7(cfg.own_seed, cfg.n_bits)


def simulate(cfg: ChainConfig, power_dbm: float, seed: int = 0) -> ChainResult:
    """Run the chain with ``power_dbm`` of total optical power at the photodiode."""
    spb = cfg.samples_per_bit
    rn = cfg.remote_node
    span = dict(atten_db_per_km=cfg.atten_db_per_km, rbs_return_db_max=cfg.rbs_return_db_max)
    own_span = FiberSpan(cfg.own_fiber_km, **span)
    other_span = FiberSpan(cfg.other_fiber_km, **span)

    ref = remote_bits(cfg)
    other_drive = nrz_shape(ref, spb, cfg.rise_rx, cfg.bit_rate, cyclic=True)
    # launch powers are levelled so both ONUs arrive at the remote node equally
    other_tx = modulate(other_drive, cfg.other_wavelength_nm,
                        cfg.rn_input_dbm + other_span.loss_db, cfg.extinction_ratio_db)
    other_up, _ = propagate(other_tx, other_span)
    inputs = [(1, other_up)]

    if cfg.pnc:
        mine = own_bits(cfg)
        own_drive = nrz_shape(mine, spb, cfg.rise_rx, cfg.bit_rate, cyclic=True)
        if cfg.misalignment_s:
            own_drive = time_shift(own_drive, cfg.misalignment_s, cyclic=True)
        own_tx = modulate(own_drive, cfg.own_wavelength_nm,
                          cfg.rn_input_dbm + own_span.loss_db, cfg.extinction_ratio_db)
        own_up, rbs_mw = propagate(own_tx, own_span)
        inputs.append((0, own_up))

    at_port = remote_node_combine(inputs, rn)[0]
    down = [propagate(env, own_span)[0] for env in at_port]
    other_rx = next(e for e in down if e.wavelength_nm == cfg.other_wavelength_nm)
    # EDFA + VOA as one scalar setting the total optical power at the photodiode
    gain = 10.0 ** (power_dbm / 10.0) / sum(e.mean_mw for e in down)
    tracks = [e.scaled(gain) for e in down]
    rbs = [gain * rbs_mw if cfg.pnc and e.wavelength_nm == cfg.own_wavelength_nm else 0.0
           for e in down]
    received = photodetect(tracks, rbs, cfg.receiver, rng_seed=seed)

    result = ChainResult(eye=None, decision=None, reference=ref)
    if cfg.pnc:
        copy = nrz_shape(mine, spb, cfg.rise_tx, cfg.bit_rate, cyclic=True)
        received, result.gain, result.lag_s = pnc_decode(
            received, copy, cfg.search_window_bits * cfg.bit_period)
        own_rx = next(e for e in tracks if e.wavelength_nm == cfg.own_wavelength_nm)
        self_i = cfg.receiver.responsivity * 1e-3 * own_rx.power_mw.samples
        other_i = cfg.receiver.responsivity * 1e-3 * other_rx.power_mw.samples * gain
        resid = received.samples + other_i
        resid = resid - resid.mean()
        self_ac = self_i - self_i.mean()
        result.residual_ratio = float(np.dot(resid, resid) / np.dot(self_ac, self_ac))

    fs = received.sample_rate
    filtered = _periodic_lowpass(received, cfg.receiver, spb * PRBS7_PERIOD)
    delay = lpf_group_delay(cfg.receiver, fs)
    # inverting RF amplifier; decision clock aligned to the filter delay
    decision = time_shift(filtered.scaled(-1.0), -delay, cyclic=True)
    result.decision = decision
    result.eye = best_eye(decision, ref, cfg.bit_rate, cfg.n_phases)
    return result


def _periodic_lowpass(w: SampledWaveform, params: ReceiverParams, warmup: int) -> SampledWaveform:
    """Steady-state filtering of a periodic record: prime the filter with its tail."""
    warmup = min(warmup, len(w))
    padded = w.with_samples(np.concatenate([w.samples[-warmup:], w.samples]))
    return w.with_samples(lowpass(padded, params).samples[warmup:])
