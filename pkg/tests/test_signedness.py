import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canrev.interpret import encode_value
from canrev.model import Endianness, IdTrace, InsufficientDataError, SignalSpec
from canrev.signedness import apply_signedness, classify_signedness

P00, P01, P10, P11 = (0, 0), (0, 1), (1, 0), (1, 1)


def test_rule1_center_empty():
    assert classify_signedness([P00, P11] * 10) is True


def test_rule1_precedes_rule2():
    # center probability and jump probability both zero
    assert classify_signedness([P11, P11, P00, P00]) is True


def test_rule2_no_jump():
    assert classify_signedness([P00, P01, P10, P11]) is False


def test_rule3_hand_simulated():
    pairs = [P00, P11] + [P11] * 16 + [P01, P01]
    # center = 2/20 = 0.1 < 0.2, one 00 -> 11 step
    assert classify_signedness(pairs) is True
    assert classify_signedness(pairs, gamma=0.1) is False


def test_too_short():
    with pytest.raises(InsufficientDataError):
        classify_signedness([P00])


@given(st.lists(st.sampled_from([P00, P01, P10, P11]), min_size=2, max_size=40))
def test_duplication_invariance(pairs):
    # appending the sequence to itself adds one transition; duplicating each frame adds none
    doubled = [p for p in pairs for _ in range(2)]
    assert classify_signedness(doubled) == classify_signedness(pairs)


def _trace(values, length, signed):
    bits = np.zeros((len(values), 64), dtype=np.uint8)
    for r, v in enumerate(values):
        bits[r, :length] = encode_value(int(v), length, signed)
    return IdTrace(1, np.arange(len(values), dtype=float), bits)


def test_sine_and_ramp_12_bit():
    t = np.arange(2000)
    spec = SignalSpec(tuple(range(12)), Endianness.BIG)
    sine = np.rint(900 * np.sin(2 * np.pi * t / 250)).astype(int)
    assert apply_signedness([spec], _trace(sine, 12, True)) == [True]
    ramp = (t * 4095) // 1999
    assert apply_signedness([spec], _trace(ramp, 12, False)) == [False]


def test_short_signals_unsigned():
    tr = _trace([0, -1, 0, -1], 2, True)
    assert apply_signedness([SignalSpec((0, 1), Endianness.BIG), SignalSpec((2,), Endianness.BIG)], tr) == [False, False]
