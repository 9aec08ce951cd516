"""Bit-flip statistics and per-gap feature vectors.

A feature row describes the gap between a condensed bit and the next kept
bit in the chosen byte order.  Columns 0-4 are the local flip features of
the left bit, 5-9 those of the right bit (relative to *its* successor), and
10-14 the componentwise difference right - left.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .dbcio import MessageDefinition
from .model import Endianness, IdTrace, InsufficientDataError, ordering_sequence, successor

N_LOCAL = 5
N_FEATURES = 15
FEATURE_NAMES = (
    "p_flip",
    "p_fi_given_fnext",
    "p_fnext_given_fi",
    "p_nfi_given_nfnext",
    "p_nfnext_given_nfi",
)
# column of P(F_next | F_i) for the left bit and for the right bit
P_NEXT_GIVEN_I = 2
P_NEXTNEXT_GIVEN_NEXT = N_LOCAL + 2


@dataclass(frozen=True)
class LocalFeatures:
    p_flip: float
    p_fi_given_fnext: float
    p_fnext_given_fi: float
    p_nfi_given_nfnext: float
    p_nfnext_given_nfi: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.p_flip,
                self.p_fi_given_fnext,
                self.p_fnext_given_fi,
                self.p_nfi_given_nfnext,
                self.p_nfnext_given_nfi,
            ]
        )


@dataclass(frozen=True)
class CondensedTrace:
    source_id: int
    ordering: Endianness
    kept_positions: tuple[int, ...]
    bits: np.ndarray

    @property
    def m(self) -> int:
        return len(self.kept_positions)

    def as_trace(self) -> IdTrace:
        """Re-pack the kept columns into a left-aligned 64-bit pseudo trace."""
        full = np.zeros((self.bits.shape[0], 64), dtype=np.uint8)
        full[:, : self.m] = self.bits
        return IdTrace(self.source_id, np.arange(self.bits.shape[0], dtype=float), full)


def flip_matrix(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[0] < 2:
        raise InsufficientDataError("flip statistics need at least two frames")
    return bits[1:] != bits[:-1]


def flip_series(trace: IdTrace, i: int) -> np.ndarray:
    return flip_matrix(trace.bits[:, i])


def _cond(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # empty conditioning event -> 0
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _local_block(fi: np.ndarray, fn: np.ndarray) -> np.ndarray:
    """Local features for column pairs; fi, fn are (n-1, k) flip matrices."""
    fi = fi.astype(bool)
    fn = fn.astype(bool)
    n = fi.shape[0]
    c_i = fi.sum(axis=0)
    c_n = fn.sum(axis=0)
    both = (fi & fn).sum(axis=0)
    neither = (~fi & ~fn).sum(axis=0)
    return np.stack(
        [
            c_i / n,
            _cond(both, c_n),
            _cond(both, c_i),
            _cond(neither, n - c_n),
            _cond(neither, n - c_i),
        ],
        axis=1,
    )


def local_features(flips_i, flips_next) -> LocalFeatures:
    fi = np.asarray(flips_i, dtype=bool).reshape(-1, 1)
    fn = np.asarray(flips_next, dtype=bool).reshape(-1, 1)
    if fi.shape != fn.shape or fi.shape[0] < 1:
        raise ValueError("flip sequences must share a length >= 1")
    return LocalFeatures(*(float(x) for x in _local_block(fi, fn)[0]))


def condense(trace: IdTrace, e: Endianness) -> CondensedTrace:
    """Drop bits constant over the whole trace, keeping the rest in `e` order."""
    if len(trace) < 2:
        raise InsufficientDataError("condensing needs at least two frames")
    const = trace.constant_mask
    kept = tuple(i for i in ordering_sequence(e) if not const[i])
    bits = trace.bits[:, list(kept)] if kept else np.zeros((len(trace), 0), dtype=np.uint8)
    return CondensedTrace(trace.arbitration_id, e, kept, bits)


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows for condensed positions 0..m-2; ``has_next[k]`` is False when the
    right bit of gap k has no successor of its own (its block is zero-filled)."""

    ct: CondensedTrace
    X: np.ndarray
    has_next: np.ndarray

    @property
    def left_bits(self) -> tuple[int, ...]:
        return self.ct.kept_positions[: self.X.shape[0]]

    def __len__(self) -> int:
        return self.X.shape[0]


def feature_matrix(ct: CondensedTrace) -> FeatureMatrix:
    m = ct.m
    if m < 2:
        return FeatureMatrix(ct, np.zeros((0, N_FEATURES)), np.zeros(0, dtype=bool))
    F = flip_matrix(ct.bits)
    local = _local_block(F[:, :-1], F[:, 1:])  # (m-1, 5): gap k = (k, k+1)
    nxt = np.zeros_like(local)
    nxt[:-1] = local[1:]
    has_next = np.ones(m - 1, dtype=bool)
    has_next[-1] = False
    X = np.hstack([local, nxt, nxt - local])
    return FeatureMatrix(ct, X, has_next)


def truth_fragments(truth: MessageDefinition) -> dict[int, int]:
    """Map bit -> fragment id, splitting little endian signals at byte edges.

    Under the forward bit order a little endian signal is a run of per-byte
    pieces, so each piece is labelled as its own signal.
    """
    owner = {}
    k = 0
    for s in truth.signals:
        split = s.endianness is Endianness.LITTLE
        last_byte = None
        for i in s.bit_indices:
            if last_byte is None or (split and i // 8 != last_byte):
                k += 1
                last_byte = i // 8
            owner[i] = k
    return owner


def label_vector(ct: CondensedTrace, truth: MessageDefinition) -> np.ndarray:
    """True at condensed position k when kept bits k and k+1 lie in different
    truth fragments; bits no truth signal claims are their own fragment."""
    if truth is None:
        raise KeyError(f"no ground truth for id 0x{ct.source_id:X}")
    owner = truth_fragments(truth)
    kp = ct.kept_positions
    frag = [owner.get(i, -1 - i) for i in kp]
    return np.array([frag[k] != frag[k + 1] for k in range(len(kp) - 1)], dtype=bool)


def obvious_mask(ct: CondensedTrace) -> np.ndarray:
    """True at positions whose gap skipped removed constant bits."""
    kp = ct.kept_positions
    return np.array(
        [successor(kp[k], ct.ordering) != kp[k + 1] for k in range(len(kp) - 1)], dtype=bool
    )


def features_csv(rows: list[tuple[int, FeatureMatrix, np.ndarray | None]]) -> str:
    """CSV dump ``id,bit,ordering,f1..f15,label`` (label blank when unknown)."""
    buf = io.StringIO()
    buf.write("id,bit,ordering," + ",".join(f"f{k}" for k in range(1, 16)) + ",label\n")
    for ident, fm, labels in rows:
        for k, bit in enumerate(fm.left_bits):
            vals = ",".join(f"{x:.6g}" for x in fm.X[k])
            lab = "" if labels is None else str(int(labels[k]))
            buf.write(f"0x{ident:X},{bit},{fm.ct.ordering},{vals},{lab}\n")
    return buf.getvalue()
