import pytest
from hypothesis import given, settings, strategies as st

from pncpon import mac
from pncpon.mac import (BroadcastGrant, GrantMap, Mode, TrafficDemand, UpstreamGrant, VpnGrant,
                        assign_wavelengths, capacity_gain, schedule, slots_per_exchange, validate,
                        vpn_slot_count)


def test_slot_costs():
    assert slots_per_exchange(Mode.CONVENTIONAL_VIA_OLT).total == 4
    assert slots_per_exchange(Mode.OLT_NETWORK_CODING).total == 3
    assert slots_per_exchange(Mode.HALF_DUPLEX_VPN).total == 2
    assert slots_per_exchange(Mode.FULL_DUPLEX_PNC).total == 1


def test_capacity_gains():
    assert capacity_gain(Mode.HALF_DUPLEX_VPN, Mode.FULL_DUPLEX_PNC, "total_slots") == 100.0
    assert capacity_gain(Mode.HALF_DUPLEX_VPN, Mode.FULL_DUPLEX_PNC, "vpn_or_down_slots") == 100.0
    assert capacity_gain(Mode.CONVENTIONAL_VIA_OLT, Mode.OLT_NETWORK_CODING, "total_slots") == pytest.approx(100 / 3)
    assert capacity_gain(Mode.CONVENTIONAL_VIA_OLT, Mode.OLT_NETWORK_CODING, "vpn_or_down_slots") == 100.0
    with pytest.raises(ValueError):
        capacity_gain(Mode.HALF_DUPLEX_VPN, Mode.FULL_DUPLEX_PNC, "bogus")


def test_capacity_table_rows():
    rows = {r[0]: r for r in mac.capacity_table()}
    assert rows["FullDuplexPnc"][4:] == (100.0, 100.0)
    assert rows["OltNetworkCoding"][4] == pytest.approx(33.333, abs=1e-3)
    assert rows["ConventionalViaOlt"][4:] == (0.0, 0.0)


def test_assign_wavelengths():
    wa = assign_wavelengths((3, 7))
    assert wa.wavelengths == {3: 1548.73, 7: 1552.00}
    assert wa.separation_nm == pytest.approx(3.27)
    with pytest.raises(ValueError):
        assign_wavelengths((1, 2), (1550.0, 1550.2, 1550.4))
    assert assign_wavelengths((1, 2), (1550.0, 1550.2, 1550.5)).separation_nm == pytest.approx(0.5)


def test_demand_validation():
    with pytest.raises(ValueError):
        TrafficDemand(1, 1)
    with pytest.raises(ValueError):
        TrafficDemand(1, 2, 0)


def test_validate_flags_collision():
    g = GrantMap()
    g.slot(0).up += [UpstreamGrant(1), VpnGrant((1, 2), (1,))]
    g.slot(1).up += [UpstreamGrant(1), UpstreamGrant(2)]
    g.slot(2).up.append(VpnGrant((1, 2), (1, 2), {1: 1550.0, 2: 1550.1}))
    g.slot(3).down += [BroadcastGrant("x"), BroadcastGrant("y")]
    rules = {(v.slot, v.rule) for v in validate(g)}
    assert rules == {(0, "upstream/VPN collision"), (1, "more than one assignment in band"),
                     (2, "wavelength separation"), (3, "more than one assignment in band")}


@pytest.mark.parametrize("mode", list(Mode))
def test_single_exchange_slot_use(mode):
    g = schedule([TrafficDemand(1, 2)], {}, mode)
    assert validate(g) == []
    cost = slots_per_exchange(mode)
    assert g.count(BroadcastGrant, "down") == cost.down
    assert g.count(UpstreamGrant) == cost.up
    assert vpn_slot_count(g) == cost.vpn


def test_olt_nc_broadcast_after_both_upstreams():
    g = schedule([TrafficDemand(1, 2)], {}, Mode.OLT_NETWORK_CODING)
    down = [i for i, s in enumerate(g.slots) if s.down]
    up = [i for i, s in enumerate(g.slots) if s.up]
    assert down == [max(up) + 1]


demands_st = st.lists(
    st.builds(TrafficDemand, a=st.integers(0, 7), b=st.integers(8, 15), units=st.integers(1, 4)),
    min_size=1, max_size=6)
backlog_st = st.dictionaries(st.integers(0, 15), st.integers(0, 5), max_size=6)


@settings(max_examples=1000, deadline=None)
@given(demands=demands_st, backlog=backlog_st)
def test_pnc_uses_half_the_vpn_slots(demands, backlog):
    half = schedule(demands, backlog, Mode.HALF_DUPLEX_VPN)
    full = schedule(demands, backlog, Mode.FULL_DUPLEX_PNC)
    assert vpn_slot_count(half) == 2 * vpn_slot_count(full)
    assert vpn_slot_count(full) == mac.total_exchange_slots(demands)


@settings(max_examples=300, deadline=None)
@given(demands=demands_st, backlog=backlog_st, mode=st.sampled_from(list(Mode)))
def test_schedules_are_valid_and_complete(demands, backlog, mode):
    g = schedule(demands, backlog, mode)
    assert validate(g) == []
    units = sum(d.units for d in demands)
    cost = slots_per_exchange(mode)
    assert g.count(UpstreamGrant) == sum(backlog.values()) + units * cost.up
    assert g.count(BroadcastGrant, "down") == units * cost.down
