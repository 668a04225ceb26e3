"""Slot-level accounting and DBA scheduling for inter-ONU traffic.

Four ways to move one exchange (a unit each way between two ONUs) are
compared: relaying through the OLT, relaying with XOR coding at the OLT,
half-duplex all-optical VPN, and full-duplex VPN with physical-layer network
coding.  The up band carries upstream and VPN traffic; the down band carries
OLT broadcasts.
"""
from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

MIN_SEPARATION_NM = 0.5
DEFAULT_CATALOG_NM = (1548.73, 1552.00)
_SEP_EPS = 1e-9


class Mode(str, enum.Enum):
    CONVENTIONAL_VIA_OLT = "ConventionalViaOlt"
    OLT_NETWORK_CODING = "OltNetworkCoding"
    HALF_DUPLEX_VPN = "HalfDuplexVpn"
    FULL_DUPLEX_PNC = "FullDuplexPnc"

    @property
    def is_vpn(self) -> bool:
        return self in (Mode.HALF_DUPLEX_VPN, Mode.FULL_DUPLEX_PNC)


class SlotCost(NamedTuple):
    up: int
    down: int
    vpn: int

    @property
    def total(self) -> int:
        return self.up + self.down + self.vpn


_COSTS = {
    Mode.CONVENTIONAL_VIA_OLT: SlotCost(2, 2, 0),
    Mode.OLT_NETWORK_CODING: SlotCost(2, 1, 0),
    Mode.HALF_DUPLEX_VPN: SlotCost(0, 0, 2),
    Mode.FULL_DUPLEX_PNC: SlotCost(0, 0, 1),
}

# the coding OLT holds both directions before it can XOR them
OLT_BUFFER_SLOTS = {Mode.OLT_NETWORK_CODING: 2}


def slots_per_exchange(mode: Mode) -> SlotCost:
    return _COSTS[Mode(mode)]


def _slots(mode: Mode, metric: str) -> int:
    cost = slots_per_exchange(mode)
    if metric == "total_slots":
        return cost.total
    if metric == "vpn_or_down_slots":
        return cost.vpn if Mode(mode).is_vpn else cost.down
    raise ValueError(f"unknown metric {metric!r}")


def capacity_gain(base: Mode, new: Mode, metric: str = "total_slots") -> float:
    """Percent more exchanges per slot with ``new`` than with ``base``."""
    return (_slots(base, metric) / _slots(new, metric) - 1.0) * 100.0


@dataclass(frozen=True)
class TrafficDemand:
    a: int
    b: int
    units: int = 1

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("a demand needs two distinct ONUs")
        if self.units < 1:
            raise ValueError("units must be >= 1")


@dataclass(frozen=True)
class WavelengthAssignment:
    wavelengths: dict
    roles: dict

    @property
    def separation_nm(self) -> float:
        lo, hi = sorted(self.wavelengths.values())
        return hi - lo


def assign_wavelengths(pair, catalog=DEFAULT_CATALOG_NM) -> WavelengthAssignment:
    """First catalog pair (by index) at least 0.5 nm apart; pair[0] takes the short one."""
    a, b = pair
    for i, j in itertools.combinations(range(len(catalog)), 2):
        short, long_ = sorted((catalog[i], catalog[j]))
        if long_ - short >= MIN_SEPARATION_NM - _SEP_EPS:
            return WavelengthAssignment({a: short, b: long_}, {a: "short", b: "long"})
    raise ValueError(f"no wavelength pair in {list(catalog)} is {MIN_SEPARATION_NM} nm apart")


@dataclass(frozen=True)
class UpstreamGrant:
    onu: int


@dataclass(frozen=True)
class VpnGrant:
    pair: tuple
    senders: tuple
    wavelengths: dict | None = None


@dataclass(frozen=True)
class BroadcastGrant:
    payload: str


@dataclass
class Slot:
    up: list = field(default_factory=list)
    down: list = field(default_factory=list)


@dataclass
class GrantMap:
    slots: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.slots)

    def slot(self, i: int) -> Slot:
        while len(self.slots) <= i:
            self.slots.append(Slot())
        return self.slots[i]

    def count(self, kind, band: str = "up") -> int:
        return sum(isinstance(g, kind) for s in self.slots for g in getattr(s, band))


@dataclass(frozen=True)
class Violation:
    slot: int
    band: str
    rule: str


def validate(g: GrantMap) -> list[Violation]:
    out = []
    for i, s in enumerate(g.slots):
        ups = [x for x in s.up if isinstance(x, UpstreamGrant)]
        vpns = [x for x in s.up if isinstance(x, VpnGrant)]
        if ups and vpns:
            out.append(Violation(i, "up", "upstream/VPN collision"))
        elif len(s.up) > 1:
            out.append(Violation(i, "up", "more than one assignment in band"))
        if any(not isinstance(x, (UpstreamGrant, VpnGrant)) for x in s.up):
            out.append(Violation(i, "up", "broadcast grant in up band"))
        if len(s.down) > 1:
            out.append(Violation(i, "down", "more than one assignment in band"))
        if any(not isinstance(x, BroadcastGrant) for x in s.down):
            out.append(Violation(i, "down", "non-broadcast grant in down band"))
        for v in vpns:
            if len(v.senders) == 2:
                lam = v.wavelengths or {}
                vals = [lam.get(o) for o in v.pair]
                if None in vals or abs(vals[0] - vals[1]) < MIN_SEPARATION_NM - _SEP_EPS:
                    out.append(Violation(i, "up", "wavelength separation"))
    return out


class Scheduler:
    """First-come-first-served DBA.

    VPN exchange units and upstream units are taken alternately from their
    queues; a slot used for VPN traffic carries no upstream.  Subclasses can
    override ``order`` to change the service discipline.
    """

    def __init__(self, mode: Mode, catalog=DEFAULT_CATALOG_NM):
        self.mode = Mode(mode)
        self.catalog = catalog

    def order(self, demands, upstream_backlog):
        vpn = deque(d for d in demands for _ in range(d.units))
        # round-robin across ONUs rather than draining one ONU first
        up = deque(_round_robin(upstream_backlog))
        while vpn or up:
            if vpn:
                yield vpn.popleft()
            if up:
                yield up.popleft()

    def schedule(self, demands, upstream_backlog=None) -> GrantMap:
        g = GrantMap()
        t = 0
        down_free = 0
        for item in self.order(demands, upstream_backlog or {}):
            if isinstance(item, int):
                g.slot(t).up.append(UpstreamGrant(item))
                t += 1
                continue
            t, down_free = self._exchange(g, item, t, down_free)
        return g

    def _exchange(self, g: GrantMap, d: TrafficDemand, t: int, down_free: int):
        pair = (d.a, d.b)
        m = self.mode
        if m is Mode.FULL_DUPLEX_PNC:
            wa = assign_wavelengths(pair, self.catalog)
            g.slot(t).up.append(VpnGrant(pair, pair, dict(wa.wavelengths)))
            return t + 1, down_free
        if m is Mode.HALF_DUPLEX_VPN:
            g.slot(t).up.append(VpnGrant(pair, (d.a,)))
            g.slot(t + 1).up.append(VpnGrant(pair, (d.b,)))
            return t + 2, down_free
        g.slot(t).up.append(UpstreamGrant(d.a))
        g.slot(t + 1).up.append(UpstreamGrant(d.b))
        if m is Mode.CONVENTIONAL_VIA_OLT:
            first = max(t + 1, down_free)
            g.slot(first).down.append(BroadcastGrant(f"{d.a}->{d.b}"))
            g.slot(first + 1).down.append(BroadcastGrant(f"{d.b}->{d.a}"))
            return t + 2, first + 2
        first = max(t + 2, down_free)
        g.slot(first).down.append(BroadcastGrant(f"{d.a}^{d.b}"))
        return t + 2, first + 1


def _round_robin(backlog):
    remaining = {onu: n for onu, n in sorted(backlog.items()) if n > 0}
    while remaining:
        for onu in list(remaining):
            yield onu
            remaining[onu] -= 1
            if not remaining[onu]:
                del remaining[onu]


def schedule(demands, upstream_backlog, mode: Mode, catalog=DEFAULT_CATALOG_NM) -> GrantMap:
    return Scheduler(mode, catalog).schedule(demands, upstream_backlog)


def vpn_slot_count(g: GrantMap) -> int:
    return sum(1 for s in g.slots if any(isinstance(x, VpnGrant) for x in s.up))


def capacity_table():
    """(mode, up, down, vpn, gain_total_pct, gain_contended_pct) per mode.

    Gains are against the family baseline: ConventionalViaOlt for the OLT
    relays, HalfDuplexVpn for the all-optical VPN modes.
    """
    rows = []
    for m in Mode:
        base = Mode.HALF_DUPLEX_VPN if m.is_vpn else Mode.CONVENTIONAL_VIA_OLT
        c = slots_per_exchange(m)
        rows.append((m.value, c.up, c.down, c.vpn,
                     capacity_gain(base, m, "total_slots"),
                     capacity_gain(base, m, "vpn_or_down_slots")))
    return rows


def total_exchange_slots(demands) -> int:
    return math.ceil(sum(d.units for d in demands))
