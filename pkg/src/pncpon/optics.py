"""Intensity-domain optical components: modulator, fiber span, remote node.

Fields are never phase resolved.  Each wavelength is carried as its own
power track and tracks only add at the photodiode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waveform import SampledWaveform, dbm_to_mw

VPN_BAND_NM = (1530.0, 1565.0)
DB_PER_NEPER_POWER = 10.0 / math.log(10.0)


@dataclass(frozen=True)
class OpticalEnvelope:
    wavelength_nm: float
    power_mw: SampledWaveform

    def __post_init__(self):
        if np.any(self.power_mw.samples < 0):
            raise ValueError("optical power cannot be negative")
        lo, hi = VPN_BAND_NM
        if not lo <= self.wavelength_nm <= hi:
            raise ValueError(f"{self.wavelength_nm} nm is outside the VPN band {lo}-{hi} nm")

    @property
    def mean_mw(self) -> float:
        return float(np.mean(self.power_mw.samples))

    def scaled(self, factor: float) -> "OpticalEnvelope":
        return OpticalEnvelope(self.wavelength_nm, self.power_mw.scaled(factor))


@dataclass(frozen=True)
class FiberSpan:
    length_km: float
    atten_db_per_km: float = 0.2
    rbs_return_db_max: float = -31.0
    group_delay_us_per_km: float = 4.9

    def __post_init__(self):
        if self.length_km < 0 or self.atten_db_per_km < 0:
            raise ValueError("fiber length and attenuation must be non-negative")

    @property
    def loss_db(self) -> float:
        return self.atten_db_per_km * self.length_km

    def rbs_return_db(self) -> float:
        """Backscatter returned toward the launch end, relative to launch power.

        Saturates at ``rbs_return_db_max`` for long fiber; -inf for zero length.
        """
        alpha = self.atten_db_per_km / DB_PER_NEPER_POWER
        build = -math.expm1(-2.0 * alpha * self.length_km) if alpha > 0 else 0.0
        if build <= 0:
            return -math.inf
        return self.rbs_return_db_max + 10.0 * math.log10(build)


@dataclass(frozen=True)
class RemoteNodeConfig:
    n_ports: int = 2
    circulator_loss_db: float = 1.0
    coupler_excess_db: float = 0.0

    def __post_init__(self):
        if self.n_ports < 2:
            raise ValueError("remote node needs at least 2 ports")
        if self.circulator_loss_db < 0 or self.coupler_excess_db < 0:
            raise ValueError("losses must be non-negative")

    @property
    def path_loss_db(self) -> float:
        # one circulator pass in, one out, and a single trip through the coupler
        return 10.0 * math.log10(self.n_ports) + self.coupler_excess_db + 2.0 * self.circulator_loss_db


def modulate(drive: SampledWaveform, wavelength_nm: float, avg_power_dbm: float,
             extinction_ratio_db: float) -> OpticalEnvelope:
    """Map a [0, 1] drive onto mark/space powers.

    The levels are set so a balanced drive averages ``avg_power_dbm``;
    ``extinction_ratio_db`` may be ``inf`` for a zero space level.
    """
    if not extinction_ratio_db > 0:
        raise ValueError("extinction ratio must be positive")
    p_avg = dbm_to_mw(avg_power_dbm)
    if math.isinf(extinction_ratio_db):
        p0, p1 = 0.0, 2.0 * p_avg
    else:
        er = 10.0 ** (extinction_ratio_db / 10.0)
        p0 = 2.0 * p_avg / (1.0 + er)
        p1 = er * p0
    power = p0 + (p1 - p0) * np.clip(drive.samples, 0.0, 1.0)
    return OpticalEnvelope(wavelength_nm, drive.with_samples(power))


def propagate(sig: OpticalEnvelope, span: FiberSpan) -> tuple[OpticalEnvelope, float]:
    """Attenuate and delay through ``span``.

    Returns the output envelope and the mean Rayleigh backscatter power (mW)
    heading back toward the transmitter.
    """
    through = 10.0 ** (-span.loss_db / 10.0)
    delay = span.group_delay_us_per_km * 1e-6 * span.length_km
    w = sig.power_mw
    out = SampledWaveform(w.samples * through, w.sample_rate, w.t0 + delay)
    ret_db = span.rbs_return_db()
    rbs = 0.0 if math.isinf(ret_db) else sig.mean_mw * 10.0 ** (ret_db / 10.0)
    return OpticalEnvelope(sig.wavelength_nm, out), rbs


def remote_node_combine(inputs, cfg: RemoteNodeConfig) -> dict[int, list[OpticalEnvelope]]:
    """Star-couple every input onto every port of the circulator remote node.

    ``inputs`` is a sequence of ``(port, envelope)``.  Tracks at the same
    wavelength are power summed; distinct wavelengths stay separate.
    """
    ports = [p for p, _ in inputs]
    if len(set(ports)) != len(ports):
        raise ValueError("duplicate remote-node input port")
    for p in ports:
        if not 0 <= p < cfg.n_ports:
            raise ValueError(f"port {p} outside 0..{cfg.n_ports - 1}")
    factor = 10.0 ** (-cfg.path_loss_db / 10.0)
    merged: dict[float, OpticalEnvelope] = {}
    for _, env in inputs:
        att = env.scaled(factor)
        if env.wavelength_nm in merged:
            prev = merged[env.wavelength_nm].power_mw
            if len(prev) != len(att.power_mw) or prev.sample_rate != att.power_mw.sample_rate:
                raise ValueError("co-wavelength inputs must share a sample grid")
            att = OpticalEnvelope(env.wavelength_nm, prev.with_samples(prev.samples + att.power_mw.samples))
        merged[env.wavelength_nm] = att
    return {port: list(merged.values()) for port in range(cfg.n_ports)}
