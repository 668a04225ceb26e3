import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pncpon.waveform import (BitSequence, SampledWaveform, dbm_to_mw, mw_to_dbm, nrz_shape,
                             prbs7, time_shift)


def test_prbs7_period_repeats():
    seq = prbs7(0x7F, 254).bits
    assert np.array_equal(seq[:127], seq[127:])


@pytest.mark.parametrize("seed", [1, 0x15, 0x40, 0x7F])
def test_prbs7_balance(seed):
    # 64 ones per period, counted with an independent Galois-form LFSR
    assert prbs7(seed, 127).bits.sum() == 64


def test_prbs7_zero_seed_rejected():
    with pytest.raises(ValueError):
        prbs7(0, 10)


@pytest.mark.parametrize("shift", range(1, 127))
def test_prbs7_autocorrelation_is_minus_one(shift):
    a = 1 - 2 * prbs7(0x33, 127).bits.astype(int)
    assert int(np.dot(a, np.roll(a, shift))) == -1


def test_nrz_constant_ones():
    w = nrz_shape(BitSequence([1, 1, 1]), 16, 0.0)
    assert np.all(w.samples == 1.0)


def test_nrz_plateau_at_bit_centre():
    w = nrz_shape(BitSequence([0, 1, 0]), 16, 0.25)
    assert w.samples[16 + 8] == 1.0


def test_nrz_edge_midpoint():
    w = nrz_shape(BitSequence([0, 1]), 16, 0.25)
    assert w.samples[16] == pytest.approx(0.5, abs=1e-12)


def test_nrz_rise_fraction_range():
    with pytest.raises(ValueError):
        nrz_shape(BitSequence([0, 1]), 16, 0.6)


@settings(max_examples=60, deadline=None)
@given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=40),
       rise=st.floats(0.0, 0.5), cyclic=st.booleans())
def test_nrz_bounded(bits, rise, cyclic):
    w = nrz_shape(BitSequence(bits), 8, rise, cyclic=cyclic)
    assert w.samples.min() >= 0.0 and w.samples.max() <= 1.0


def test_time_shift_zero_identity():
    w = SampledWaveform(np.random.default_rng(0).normal(size=50), 1.0)
    assert np.array_equal(time_shift(w, 0.0).samples, w.samples)


def test_time_shift_one_sample():
    x = np.random.default_rng(1).normal(size=50)
    w = SampledWaveform(x, 4.0)
    out = time_shift(w, 0.25).samples
    assert np.array_equal(out[1:], x[:-1])


def test_time_shift_half_sample_ramp():
    out = time_shift(SampledWaveform([0.0, 1.0, 2.0], 1.0), 0.5).samples
    assert out[1:] == pytest.approx([0.5, 1.5])


def test_time_shift_too_long():
    with pytest.raises(ValueError):
        time_shift(SampledWaveform([0.0, 1.0, 2.0], 1.0), 3.0)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(-10, 10), seed=st.integers(0, 1000))
def test_time_shift_round_trip(k, seed):
    x = np.random.default_rng(seed).normal(size=64)
    w = SampledWaveform(x, 2.0)
    back = time_shift(time_shift(w, k / 2.0), -k / 2.0).samples
    inner = slice(abs(k), 64 - abs(k))
    assert np.allclose(back[inner], x[inner], atol=1e-9)


def test_cyclic_fractional_shift_wraps():
    x = np.arange(8.0)
    out = time_shift(SampledWaveform(x, 1.0), 0.5, cyclic=True).samples
    assert out[0] == pytest.approx(3.5)  # halfway between x[-1]=7 and x[0]=0


def test_dbm_conversions():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(-18.0) == pytest.approx(0.015849, rel=1e-4)
    assert dbm_to_mw(mw_to_dbm(3.7)) == pytest.approx(3.7, rel=1e-12)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            mw_to_dbm(bad)


def test_waveform_rejects_nonfinite():
    with pytest.raises(ValueError):
        SampledWaveform([0.0, np.nan], 1.0)
