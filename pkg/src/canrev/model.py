"""Core CAN domain types and the two payload bit orderings.

Bit ``B0`` is the most significant bit of byte 0; bit ``B63`` is the least
significant bit of byte 7.  Every module works in this numbering; only
:mod:`canrev.dbcio` converts to DBC start-bit numbers.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

N_BITS = 64
N_BYTES = 8


class MalformedFrameError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class Endianness(enum.Enum):
    BIG = "big"
    LITTLE = "little"

    def __str__(self) -> str:
        return self.value


@lru_cache(maxsize=None)
def ordering_sequence(e: Endianness) -> tuple[int, ...]:
    """MSB-first traversal of the 64 payload bits under byte order `e`.

    BIG walks bytes 0..7, LITTLE walks bytes 7..0; bits inside a byte are
    always visited MSB first.
    """
    if e is Endianness.BIG:
        byte_order = range(N_BYTES)
    else:
        byte_order = range(N_BYTES - 1, -1, -1)
    return tuple(8 * j + k for j in byte_order for k in range(8))


@lru_cache(maxsize=None)
def _position_index(e: Endianness) -> tuple[int, ...]:
    seq = ordering_sequence(e)
    pos = [0] * N_BITS
    for p, i in enumerate(seq):
        pos[i] = p
    return tuple(pos)


def sequence_position(i: int, e: Endianness) -> int:
    return _position_index(e)[i]


def successor(i: int, e: Endianness) -> int | None:
    """Bit that follows `i` in ``ordering_sequence(e)``, or None at the end."""
    if not 0 <= i < N_BITS:
        raise ValueError(f"bit index out of range: {i}")
    if i % 8 != 7:
        return i + 1
    j = i // 8
    if e is Endianness.BIG:
        return 8 * (j + 1) if j < N_BYTES - 1 else None
    return 8 * (j - 1) if j > 0 else None


def walk(msb: int, length: int, e: Endianness) -> tuple[int, ...] | None:
    """Bit indices of a `length`-bit signal starting at `msb`, or None if it overflows."""
    out = [msb]
    cur = msb
    for _ in range(length - 1):
        cur = successor(cur, e)
        if cur is None:
            return None
        out.append(cur)
    return tuple(out)


def pad_payload(data: bytes | Sequence[int]) -> np.ndarray:
    """Expand up to 8 bytes MSB-first into a zero-padded 64-bit uint8 vector."""
    data = bytes(data)
    if len(data) > N_BYTES:
        raise MalformedFrameError(f"payload has {len(data)} bytes; at most 8 allowed")
    buf = np.zeros(N_BYTES, dtype=np.uint8)
    buf[: len(data)] = np.frombuffer(data, dtype=np.uint8)
    return np.unpackbits(buf)


def bits_to_bytes(bits: np.ndarray, length: int = N_BYTES) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()[:length]


@dataclass(frozen=True)
class CanFrame:
    timestamp: float
    arbitration_id: int
    data: bytes
    interface: str = "can0"
    extended: bool = False

    def __post_init__(self):
        if len(self.data) > N_BYTES:
            raise MalformedFrameError(f"payload has {len(self.data)} bytes; at most 8 allowed")
        limit = 1 << (29 if self.extended else 11)
        if not 0 <= self.arbitration_id < limit:
            raise MalformedFrameError(f"arbitration id 0x{self.arbitration_id:X} exceeds its width")

    @property
    def original_length(self) -> int:
        return len(self.data)

    @property
    def payload_bits(self) -> np.ndarray:
        return pad_payload(self.data)


@dataclass(frozen=True)
class IdTrace:
    """Time series of padded 64-bit payloads for one arbitration ID."""

    arbitration_id: int
    timestamps: np.ndarray
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != N_BITS:
            raise ValueError("bits must be an n x 64 matrix")
        if bits.shape[0] < 1 or bits.shape[0] != ts.shape[0]:
            raise ValueError("trace needs n >= 1 rows matching its timestamps")
        if np.any(np.diff(ts) < 0):
            raise ValueError("timestamps must be sorted")
        ts.setflags(write=False)
        bits.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return self.bits.shape[0]

    @property
    def constant_mask(self) -> np.ndarray:
        """True for bits that never change over the whole trace."""
        return np.all(self.bits == self.bits[0], axis=0)

    @property
    def is_constant(self) -> bool:
        return bool(self.constant_mask.all())

    @classmethod
    def from_payloads(cls, arbitration_id: int, timestamps, payloads) -> "IdTrace":
        bits = np.array([pad_payload(p) for p in payloads], dtype=np.uint8).reshape(-1, N_BITS)
        return cls(arbitration_id, np.asarray(timestamps, dtype=float), bits)


@dataclass(frozen=True)
class SignalSpec:
    """Ordered MSB->LSB bit indices of one signal plus its byte order."""

    bit_indices: tuple[int, ...]
    endianness: Endianness = Endianness.BIG

    def __post_init__(self):
        idx = tuple(int(i) for i in self.bit_indices)
        if not idx:
            raise ValueError("a signal needs at least one bit")
        if len(set(idx)) != len(idx) or not all(0 <= i < N_BITS for i in idx):
            raise ValueError(f"invalid bit indices {idx}")
        for a, b in zip(idx, idx[1:]):
            if successor(a, self.endianness) != b:
                raise ValueError(f"bits {a}->{b} are not adjacent under {self.endianness}")
        object.__setattr__(self, "bit_indices", idx)

    @property
    def msb(self) -> int:
        return self.bit_indices[0]

    @property
    def lsb(self) -> int:
        return self.bit_indices[-1]

    def __len__(self) -> int:
        return len(self.bit_indices)

    @property
    def bytes_spanned(self) -> frozenset[int]:
        return frozenset(i // 8 for i in self.bit_indices)
