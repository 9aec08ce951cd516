"""Prior-art boundary heuristics (READ, TANG, LibreCAN phase 0, constant bits).

All of them work on the forward (big endian) bit order only and share one
mandatory-cut post-pass: a cut after bit 63 and on both sides of every
constant bit.  Their signals are translated as big endian and unsigned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dbcio import MessageDefinition, SignalDefinition
from .features import flip_matrix
from .model import N_BITS, Endianness, IdTrace, SignalSpec


@dataclass(frozen=True)
class BoundaryPrediction:
    algorithm: str
    cuts: np.ndarray  # cuts[i]: a signal ends at bit i

    def __post_init__(self):
        c = np.asarray(self.cuts, dtype=bool).copy()
        if c.shape != (N_BITS,):
            raise ValueError("cuts must have 64 entries")
        c[N_BITS - 1] = True
        c.setflags(write=False)
        object.__setattr__(self, "cuts", c)

    def signals(self) -> list[SignalSpec]:
        out, start = [], 0
        for i in range(N_BITS):
            if self.cuts[i]:
                out.append(SignalSpec(tuple(range(start, i + 1)), Endianness.BIG))
                start = i + 1
        return out

    def to_message(self, arbitration_id: int) -> MessageDefinition:
        sigs = tuple(
            SignalDefinition.from_spec(f"ID{arbitration_id:X}_SIG{k}", s)
            for k, s in enumerate(self.signals())
        )
        return MessageDefinition(arbitration_id, f"ID{arbitration_id:X}", 8, sigs)


def mandatory_cuts(constant: np.ndarray) -> np.ndarray:
    constant = np.asarray(constant, dtype=bool)
    cuts = constant.copy()
    cuts[:-1] |= constant[1:]
    cuts[-1] = True
    return cuts


def flip_probabilities(trace: IdTrace) -> np.ndarray:
    if len(trace) < 2:
        return np.zeros(N_BITS)
    return flip_matrix(trace.bits).mean(axis=0)


def flip_counts(trace: IdTrace) -> np.ndarray:
    if len(trace) < 2:
        return np.zeros(N_BITS, dtype=int)
    return flip_matrix(trace.bits).sum(axis=0)


def _finish(name: str, cuts, constant) -> BoundaryPrediction:
    cuts = np.asarray(cuts, dtype=bool)
    if constant is not None:
        cuts = cuts | mandatory_cuts(constant)
    return BoundaryPrediction(name, cuts)


def baseline_constant(trace: IdTrace) -> BoundaryPrediction:
    return _finish("constant", np.zeros(N_BITS, dtype=bool), trace.constant_mask)


def _magnitude(p: float) -> float:
    return -math.inf if p <= 0 else math.ceil(math.log10(p))


def read_boundaries(flip_probs, constant=None) -> BoundaryPrediction:
    """Cut where the decimal magnitude of the flip rate drops."""
    m = [_magnitude(float(p)) for p in flip_probs]
    cuts = np.zeros(N_BITS, dtype=bool)
    for i in range(N_BITS - 1):
        cuts[i] = m[i] > m[i + 1]
    return _finish("read", cuts, constant)


def tang_boundaries(flip_counts_, constant=None) -> BoundaryPrediction:
    """Repeatedly take the busiest unassigned bit as an LSB and absorb bits to
    its left while their counts strictly decrease."""
    counts = np.asarray(flip_counts_, dtype=float)
    active = counts > 0 if constant is None else ~np.asarray(constant, dtype=bool)
    assigned = ~active.copy()
    cuts = np.zeros(N_BITS, dtype=bool)
    starts = np.zeros(N_BITS, dtype=bool)
    while not assigned.all():
        free = np.nonzero(~assigned)[0]
        lsb = int(free[np.argmax(counts[free])])  # ties -> lowest index
        assigned[lsb] = True
        cuts[lsb] = True
        k = lsb
        while k - 1 >= 0 and not assigned[k - 1] and counts[k - 1] < counts[k]:
            k -= 1
            assigned[k] = True
        starts[k] = True
    # a signal start means the bit before it ends a signal
    cuts[:-1] |= starts[1:]
    return _finish("tang", cuts, constant)


def librecan_boundaries(flip_probs, T: float = 0.2, constant=None) -> BoundaryPrediction:
    p = np.asarray(flip_probs, dtype=float)
    cuts = np.zeros(N_BITS, dtype=bool)
    cuts[:-1] = (p[:-1] > 0) & (p[1:] < T * p[:-1])
    return _finish("librecan", cuts, constant)


def run_baseline(name: str, trace: IdTrace) -> BoundaryPrediction:
    const = trace.constant_mask
    if name == "constant":
        return baseline_constant(trace)
    if name == "read":
        return read_boundaries(flip_probabilities(trace), const)
    if name == "tang":
        return tang_boundaries(flip_counts(trace), const)
    if name == "librecan":
        return librecan_boundaries(flip_probabilities(trace), constant=const)
    raise KeyError(name)


BASELINES = ("constant", "read", "tang", "librecan")
