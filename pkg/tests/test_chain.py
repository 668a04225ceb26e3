import math
from dataclasses import replace

import numpy as np
import pytest

from pncpon.chain import ChainConfig, own_bits, remote_bits
from pncpon.receiver import count_errors
from pncpon.waveform import nrz_shape


@pytest.fixture(scope="module")
def chain(default_cfg):
    return replace(default_cfg.chain_for(2, True), n_blocks=4)


def test_remote_pattern_orthogonal_to_local_shifts():
    cfg = ChainConfig(n_blocks=2)
    r = 2.0 * remote_bits(cfg).bits - 1
    mine = 2.0 * own_bits(cfg).bits - 1
    for k in range(127):
        assert np.dot(r, np.roll(mine, k)) == 0


def test_pattern_lengths():
    cfg = ChainConfig(n_blocks=3)
    assert len(remote_bits(cfg)) == len(own_bits(cfg)) == cfg.n_bits == 762


def test_simulate_is_seeded(chain):
    a = chain.simulate(-20.0, seed=7).decision.samples
    b = chain.simulate(-20.0, seed=7).decision.samples
    c = chain.simulate(-20.0, seed=8).decision.samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noiseless_pnc_recovers_remote_bits(chain):
    cfg = replace(chain, rise_tx=chain.rise_rx).with_receiver(
        load_thermal_noise_a_per_rthz=0.0, shot_noise_enabled=False, rbs_beat_weight=0.0)
    res = cfg.simulate(-15.0)
    assert res.residual_ratio < 1e-6
    assert count_errors(res.decision, res.reference, res.eye.threshold, res.eye.phase)[0] == 0
    assert res.eye.mu1 > res.eye.mu0


def test_half_duplex_has_no_cancellation_data(chain):
    res = replace(chain, pnc=False).simulate(-18.0, seed=1)
    assert math.isnan(res.gain) and math.isnan(res.residual_ratio)


def test_received_power_is_total_pd_power(chain):
    # noiseless eye: mean photocurrent equals responsivity times set power,
    # since the own signal is subtracted only as AC the DC level is kept
    cfg = chain.with_receiver(load_thermal_noise_a_per_rthz=0.0, shot_noise_enabled=False, rbs_beat_weight=0.0)
    res = replace(cfg, pnc=False).simulate(-10.0)
    assert res.decision.samples.mean() == pytest.approx(0.8 * 1e-4, rel=1e-3)


def test_ber_monotone_in_power(chain):
    bers = [chain.ber(p, seed=3) for p in (-26, -23, -20, -17, -14)]
    assert all(a > b for a, b in zip(bers, bers[1:]))


def test_cancellation_failure_maps_to_half(chain):
    # a search window of a fraction of a sample cannot find a lag under heavy noise
    cfg = replace(chain, search_window_bits=0.01).with_receiver(load_thermal_noise_a_per_rthz=1e-8)
    assert cfg.ber(-30.0, seed=0) == 0.5


def test_longer_own_fiber_more_backscatter(chain):
    short = replace(chain, own_fiber_km=2.0).ber(-18.0, seed=2)
    long_ = replace(chain, own_fiber_km=10.0).ber(-18.0, seed=2)
    assert long_ > short


def test_rbs_weight_hurts(chain):
    clean = chain.with_receiver(rbs_beat_weight=0.0).ber(-18.0, seed=2)
    assert chain.ber(-18.0, seed=2) > clean


def test_matched_rise_drive_shape():
    bits = own_bits(ChainConfig(n_blocks=1))
    a = nrz_shape(bits, 16, 0.3, cyclic=True)
    assert a.samples.mean() == pytest.approx(bits.bits.mean(), abs=1e-12)


def test_counted_ber_monotone_on_sweep(default_cfg):
    cfg = replace(default_cfg.chain_for(2, True), n_blocks=40)
    counted = []
    for p in np.arange(-26.0, -21.0, 0.5):
        res = cfg.simulate(float(p), seed=5)
        counted.append(count_errors(res.decision, res.reference, res.eye.threshold, res.eye.phase)[1])
    assert len(counted) == 10
    assert all(a >= b for a, b in zip(counted, counted[1:]))
