"""Signed / unsigned classification from the two most significant bits."""
from __future__ import annotations

import numpy as np

from .model import IdTrace, InsufficientDataError, SignalSpec


def classify_signedness(pairs, gamma: float = 0.2) -> bool:
    """True for two's complement.

    `pairs` is an (n, 2) array of (MSB, next bit) values per frame.  Signed
    signals rarely sit at the extremes (01 / 10) and cross zero via a direct
    00 -> 11 step; unsigned ones never make that jump.
    """
    pairs = np.asarray(pairs, dtype=np.uint8)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or pairs.shape[0] < 2:
        raise InsufficientDataError("signedness needs at least two (MSB, MSB-1) samples")
    b0, b1 = pairs[:, 0], pairs[:, 1]
    p_center = float(np.mean(b0 != b1))
    if p_center == 0:
        return True
    low = (b0 == 0) & (b1 == 0)
    high = (b0 == 1) & (b1 == 1)
    p_jump = float(np.mean(low[:-1] & high[1:]))
    if p_jump == 0:
        return False
    if p_center < gamma:
        return True
    return False


def apply_signedness(signals: list[SignalSpec], trace: IdTrace, gamma: float = 0.2) -> list[bool]:
    """Signedness per signal; signals of length <= 2 are unsigned by rule."""
    out = []
    for s in signals:
        if len(s) <= 2 or len(trace) < 2:
            out.append(False)
            continue
        out.append(classify_signedness(trace.bits[:, [s.bit_indices[0], s.bit_indices[1]]], gamma))
    return out
