"""Bit-to-integer translation and affine matching of signals to DID traces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import DidTrace
from .model import IdTrace, SignalSpec


class NoFitError(ValueError):
    pass


def translate_bits(bits: np.ndarray, indices, signed: bool) -> np.ndarray:
    """Integer value of the bit columns `indices` (MSB first) for every row."""
    idx = list(indices)
    L = len(idx)
    u = np.zeros(bits.shape[0], dtype=np.uint64)
    for i in idx:
        u = (u << np.uint64(1)) | bits[:, i].astype(np.uint64)
    if not signed:
        return u
    shift = np.uint64(64 - L)
    return (u << shift).view(np.int64) >> np.int64(64 - L)


@dataclass(frozen=True)
class SignalTimeSeries:
    spec: SignalSpec
    signed: bool
    timestamps: np.ndarray
    values: np.ndarray


def translate(trace: IdTrace, spec: SignalSpec, signed: bool = False) -> SignalTimeSeries:
    return SignalTimeSeries(spec, signed, trace.timestamps, translate_bits(trace.bits, spec.bit_indices, signed))


def encode_value(value: int, length: int, signed: bool) -> list[int]:
    """Inverse of translation for one value: its MSB-first bit list."""
    if signed:
        lo, hi = -(1 << (length - 1)), (1 << (length - 1)) - 1
    else:
        lo, hi = 0, (1 << length) - 1
    if not lo <= value <= hi:
        raise ValueError(f"{value} outside [{lo}, {hi}]")
    u = value & ((1 << length) - 1)
    return [(u >> (length - 1 - k)) & 1 for k in range(length)]


def interpolate_at(s: SignalTimeSeries, query_times, hold: bool = False) -> np.ndarray:
    """Piecewise-linear (or zero-order hold) resampling, clamped at the ends."""
    t = np.asarray(s.timestamps, dtype=float)
    if t.shape[0] < 2:
        raise ValueError("interpolation needs at least two samples")
    v = np.asarray(s.values).astype(float)
    q = np.asarray(query_times, dtype=float)
    if hold:
        k = np.clip(np.searchsorted(t, q, side="right") - 1, 0, len(t) - 1)
        return v[k]
    return np.interp(q, t, v)


def fit_linear(x, y) -> tuple[float, float, float]:
    """Least squares y ~ a*x + b; returns (a, b, R^2).  Constant y gives R^2 = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.shape[0] < 2:
        raise ValueError("fit needs two equal-length series of length >= 2")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0 or np.ptp(x) == 0:
        raise NoFitError("regressor is constant")
    a = float(dx @ dy) / sxx
    b = ym - a * xm
    syy = float(dy @ dy)
    if syy == 0:
        return a, b, 0.0
    resid = y - (a * x + b)
    r2 = 1.0 - float(resid @ resid) / syy
    return a, float(b), r2


@dataclass(frozen=True)
class Interpretation:
    did_label: str
    unit: str
    scale: float
    offset: float
    r_squared: float


@dataclass(frozen=True)
class MatchScore:
    did_label: str
    a: float
    b: float
    r_squared: float


def best_match(s: SignalTimeSeries, dids: list[DidTrace], hold: bool = False) -> MatchScore | None:
    """Highest-R^2 DID for one signal over their overlapping time span."""
    best = None
    if len(s.timestamps) < 2:
        return None
    t0, t1 = s.timestamps[0], s.timestamps[-1]
    for d in dids:
        sel = (d.timestamps >= t0) & (d.timestamps <= t1)
        if sel.sum() < 2:
            continue
        x = interpolate_at(s, d.timestamps[sel], hold=hold)
        y = d.values[sel]
        if np.ptp(y) == 0:
            continue
        try:
            a, b, r2 = fit_linear(x, y)
        except NoFitError:
            continue
        if best is None or r2 > best.r_squared:
            best = MatchScore(d.did_label, a, b, r2)
    return best


def match_signals(
    signals: list[SignalTimeSeries], dids: list[DidTrace], delta: float = 0.5, hold: bool = False
) -> list[Interpretation | None]:
    """Attach the best DID's label, unit and affine map where R^2 > delta."""
    units = {d.did_label: d.unit for d in dids}
    out = []
    for s in signals:
        m = best_match(s, dids, hold=hold)
        if m is not None and m.r_squared > delta:
            out.append(Interpretation(m.did_label, units[m.did_label], m.a, m.b, m.r_squared))
        else:
            out.append(None)
    return out
