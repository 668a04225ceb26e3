"""Experiment configuration: INI-style key = value files with section headers.

The packaged ``defaults.ini`` holds every parameter, including the frozen
calibration.  A user file overrides individual keys; any section or key not
present in the defaults is rejected.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .chain import ChainConfig
from .optics import RemoteNodeConfig
from .receiver import ReceiverParams

EXPERIMENTS = ("fig3", "fig4", "budget", "capacity", "calibrate")
DEFAULTS_NAME = "defaults.ini"


class ConfigError(ValueError):
    pass


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def default_text() -> str:
    return resources.files("pncpon").joinpath(DEFAULTS_NAME).read_text()


def load_sections(path=None, overrides_text: str | None = None, defaults_text: str | None = None):
    """Merge defaults with a user file; returns ``{section: {key: str}}``."""
    base = _parser()
    base.read_string(defaults_text if defaults_text is not None else default_text())
    merged = {s: dict(base[s]) for s in base.sections()}
    texts = []
    if path is not None:
        try:
            texts.append((str(path), Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if overrides_text is not None:
        texts.append(("<overrides>", overrides_text))
    for name, text in texts:
        user = _parser()
        try:
            user.read_string(text, source=name)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        for section in user.sections():
            if section not in merged:
                raise ConfigError(f"{name}: unknown section [{section}]")
            for key, value in user[section].items():
                if key not in merged[section]:
                    raise ConfigError(f"{name}: unknown key {key!r} in [{section}]")
                merged[section][key] = value
    return merged


def _float(sec, section, key, positive=True, allow_zero=False):
    raw = sec[section][key]
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"[{section}] {key} must be finite")
    if positive and (v < 0 or (v == 0 and not allow_zero)):
        raise ConfigError(f"[{section}] {key} must be {'non-negative' if allow_zero else 'positive'}")
    return v


def _int(sec, section, key, minimum=1):
    raw = sec[section][key]
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from None
    if v < minimum:
        raise ConfigError(f"[{section}] {key} must be >= {minimum}")
    return v


def _bool(sec, section, key):
    raw = sec[section][key].strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key} = {raw!r} is not a boolean")


def _int_list(sec, section, key):
    try:
        vals = [int(x) for x in sec[section][key].replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a list of integers") from None
    if not vals or min(vals) < 2:
        raise ConfigError(f"[{section}] {key} must list port counts >= 2")
    return vals


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    sections: dict
    chain: ChainConfig
    onu1_fiber_km: float
    onu2_fiber_km: float
    onu1_wavelength_nm: float
    onu2_wavelength_nm: float
    power_min_dbm: float
    power_max_dbm: float
    power_step_db: float
    misalignment_max_ps: float
    misalignment_steps: int
    target_ber: float
    tol_db: float
    search_lo_dbm: float
    search_hi_dbm: float
    budget_ports: tuple
    budget_losses: dict
    anchors: dict

    def chain_for(self, receiver_onu: int, pnc: bool = True, misalignment_s: float = 0.0,
                  **overrides) -> ChainConfig:
        """Chain seen by ONU1 or ONU2 as the receiving end."""
        if receiver_onu == 2:
            own = (self.onu2_fiber_km, self.onu2_wavelength_nm)
            other = (self.onu1_fiber_km, self.onu1_wavelength_nm)
        elif receiver_onu == 1:
            own = (self.onu1_fiber_km, self.onu1_wavelength_nm)
            other = (self.onu2_fiber_km, self.onu2_wavelength_nm)
        else:
            raise ValueError("receiver_onu must be 1 or 2")
        fields = dict(own_fiber_km=own[0], own_wavelength_nm=own[1],
                      other_fiber_km=other[0], other_wavelength_nm=other[1],
                      pnc=pnc, misalignment_s=misalignment_s)
        fields.update(overrides)
        return replace(self.chain, **fields)

    def with_sections(self, **updates) -> "ExperimentConfig":
        """Rebuild with ``{section: {key: value}}`` replacements."""
        sec = {s: dict(kv) for s, kv in self.sections.items()}
        for s, kv in updates.items():
            for k, v in kv.items():
                if k not in sec.get(s, {}):
                    raise ConfigError(f"unknown key {k!r} in [{s}]")
                sec[s][k] = str(v)
        return build(sec, self.experiment, self.seed)

    def canonical_text(self) -> str:
        lines = []
        for s in sorted(self.sections):
            lines.append(f"[{s}]")
            lines += [f"{k} = {v}" for k, v in sorted(self.sections[s].items())]
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def build(sec: dict, experiment: str, seed: int) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    f = lambda s, k, **kw: _float(sec, s, k, **kw)  # noqa: E731
    rx = ReceiverParams(
        responsivity=f("receiver", "responsivity"),
        load_thermal_noise_a_per_rthz=f("receiver", "thermal_noise_a_per_rthz", allow_zero=True),
        shot_noise_enabled=_bool(sec, "receiver", "shot_noise"),
        rbs_beat_weight=f("receiver", "rbs_beat_weight", allow_zero=True),
        lpf_cutoff_hz=f("receiver", "lpf_cutoff_hz"),
        lpf_order=_int(sec, "receiver", "lpf_order"),
        beat_guard_hz=f("receiver", "beat_guard_hz"),
    )
    rn = RemoteNodeConfig(
        n_ports=_int(sec, "link", "rn_ports", minimum=2),
        circulator_loss_db=f("link", "circulator_loss_db", allow_zero=True),
        coupler_excess_db=f("link", "coupler_excess_db", allow_zero=True),
    )
    rise_tx = f("link", "rise_tx", allow_zero=True)
    rise_rx = f("link", "rise_rx", allow_zero=True)
    if rise_tx > 0.5 or rise_rx > 0.5:
        raise ConfigError("[link] rise fractions must not exceed 0.5")
    chain = ChainConfig(
        bit_rate=f("link", "bit_rate"),
        samples_per_bit=_int(sec, "link", "samples_per_bit", minimum=8),
        n_blocks=_int(sec, "link", "n_blocks"),
        atten_db_per_km=f("link", "atten_db_per_km", allow_zero=True),
        rbs_return_db_max=f("link", "rbs_return_db_max", positive=False),
        remote_node=rn,
        rn_input_dbm=f("link", "rn_input_dbm", positive=False),
        extinction_ratio_db=f("link", "extinction_ratio_db"),
        rise_tx=rise_tx,
        rise_rx=rise_rx,
        receiver=rx,
        search_window_bits=f("link", "search_window_bits"),
        n_phases=_int(sec, "link", "n_phases"),
    )
    pmin, pmax = f("sweep", "power_min_dbm", positive=False), f("sweep", "power_max_dbm", positive=False)
    if pmax < pmin:
        raise ConfigError("[sweep] power range is empty")
    lo, hi = f("sweep", "search_lo_dbm", positive=False), f("sweep", "search_hi_dbm", positive=False)
    if hi <= lo:
        raise ConfigError("[sweep] search bracket is empty")
    target = f("sweep", "target_ber")
    if target >= 0.5:
        raise ConfigError("[sweep] target_ber must be below 0.5")
    anchors = {}
    for key in ("baseline_sensitivity_dbm", "pnc_penalty_db", "rbs_gap_db"):
        raw = sec["calibrate"][key].strip()
        if raw.lower() not in ("", "none", "off"):
            anchors[key] = f("calibrate", key, positive=False)
    return ExperimentConfig(
        experiment=experiment,
        seed=seed,
        sections=sec,
        chain=chain,
        onu1_fiber_km=f("link", "onu1_fiber_km", allow_zero=True),
        onu2_fiber_km=f("link", "onu2_fiber_km", allow_zero=True),
        onu1_wavelength_nm=f("link", "onu1_wavelength_nm"),
        onu2_wavelength_nm=f("link", "onu2_wavelength_nm"),
        power_min_dbm=pmin,
        power_max_dbm=pmax,
        power_step_db=f("sweep", "power_step_db"),
        misalignment_max_ps=f("sweep", "misalignment_max_ps", allow_zero=True),
        misalignment_steps=_int(sec, "sweep", "misalignment_steps"),
        target_ber=target,
        tol_db=f("sweep", "tol_db"),
        search_lo_dbm=lo,
        search_hi_dbm=hi,
        budget_ports=tuple(_int_list(sec, "budget", "n_ports")),
        budget_losses=dict(
            circulator_loss_db=f("budget", "circulator_loss_db", allow_zero=True),
            coupler_excess_db=f("budget", "coupler_excess_db", allow_zero=True),
            fbg_loss_db=f("budget", "fbg_loss_db", allow_zero=True),
            olt_amp_gain_db=f("budget", "olt_amp_gain_db", allow_zero=True),
        ),
        anchors=anchors,
    )


def load(experiment: str, path=None, seed: int | None = None, overrides_text: str | None = None,
         defaults_text: str | None = None) -> ExperimentConfig:
    sec = load_sections(path, overrides_text, defaults_text)
    file_seed = _int(sec, "run", "seed", minimum=0)
    return build(sec, experiment, file_seed if seed is None else seed)


def render_defaults(sections: dict, header: str = "") -> str:
    """Serialise sections back to the defaults file format, preserving key order."""
    out = [header.rstrip() + "\n"] if header else []
    for s, kv in sections.items():
        out.append(f"[{s}]")
        out += [f"{k} = {v}" for k, v in kv.items()]
        out.append("")
    return "\n".join(out)
