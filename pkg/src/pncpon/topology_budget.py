"""dB loss ledgers for inter-ONU paths through different remote-node designs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class RnVariant(str, enum.Enum):
    PROPOSED_CIRCULATOR = "ProposedCirculator"
    FBG_FEEDER_DOUBLE_PASS = "FbgFeederDoublePass"
    DUAL_DISTRIBUTION_FIBER = "DualDistributionFiber"
    OLT_LOOPBACK = "OltLoopback"


@dataclass(frozen=True)
class RnArchitecture:
    variant: RnVariant = RnVariant.PROPOSED_CIRCULATOR
    n_ports: int = 32
    circulator_loss_db: float = 1.0
    coupler_excess_db: float = 0.0
    fbg_loss_db: float = 0.0
    olt_amp_gain_db: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", RnVariant(self.variant))
        if self.n_ports < 2:
            raise ValueError("n_ports must be >= 2")
        if min(self.circulator_loss_db, self.coupler_excess_db, self.fbg_loss_db) < 0:
            raise ValueError("losses must be non-negative")

    @property
    def fiber_count(self) -> int:
        """Distribution fibers needed per ONU; the dual-fiber design pays in fiber, not dB."""
        return 2 if self.variant is RnVariant.DUAL_DISTRIBUTION_FIBER else 1


@dataclass
class LinkBudget:
    entries: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, label: str, db: float) -> "LinkBudget":
        self.entries.append((label, float(db)))
        return self

    @property
    def total_db(self) -> float:
        return math.fsum(db for _, db in self.entries)


def _split_db(arch: RnArchitecture) -> float:
    return 10.0 * math.log10(arch.n_ports) + arch.coupler_excess_db


def rn_insertion_loss(arch: RnArchitecture) -> float:
    """ONU-to-ONU insertion loss of the remote node in dB."""
    split = _split_db(arch)
    v = arch.variant
    if v is RnVariant.PROPOSED_CIRCULATOR:
        return split + 2.0 * arch.circulator_loss_db
    if v is RnVariant.FBG_FEEDER_DOUBLE_PASS:
        return 2.0 * split + arch.fbg_loss_db
    if v is RnVariant.DUAL_DISTRIBUTION_FIBER:
        return split
    if v is RnVariant.OLT_LOOPBACK:
        return 2.0 * split - arch.olt_amp_gain_db
    raise ValueError(f"unknown variant {v!r}")


def path_budget(tx_power_dbm: float, spans, arch: RnArchitecture, rx_sensitivity_dbm: float):
    """Itemised launch-to-receiver ledger and the margin over sensitivity.

    Returns ``(budget, margin_db)``; ``budget.total_db`` is the received power.
    A negative margin is recorded in ``budget.notes``.
    """
    budget = LinkBudget().add("launch", tx_power_dbm)
    for span in spans:
        budget.add(f"fiber {span.length_km:g} km", -span.atten_db_per_km * span.length_km)
    budget.add(f"remote node {arch.variant.value}", -rn_insertion_loss(arch))
    if arch.fiber_count > 1:
        budget.notes.append(f"requires {arch.fiber_count} distribution fibers")
    margin = budget.total_db - rx_sensitivity_dbm
    if margin < 0:
        budget.notes.append(f"infeasible: margin {margin:.2f} dB")
    return budget, margin


def budget_table(n_ports_list=(8, 16, 32, 64), **losses):
    """Rows of (variant, n_ports, loss_db, reduction_vs_fbg_db) sorted by variant then ports."""
    rows = []
    for variant in sorted(RnVariant, key=lambda v: v.value):
        for n in sorted(n_ports_list):
            arch = RnArchitecture(variant, n, **losses)
            fbg = RnArchitecture(RnVariant.FBG_FEEDER_DOUBLE_PASS, n, **losses)
            loss = rn_insertion_loss(arch)
            rows.append((variant.value, n, loss, rn_insertion_loss(fbg) - loss))
    return rows
