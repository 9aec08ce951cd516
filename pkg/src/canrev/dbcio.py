"""Read and write the BO_/SG_ subset of the DBC format.

Internally a signal is anchored at its MSB in payload bit numbering (B0 =
MSB of byte 0).  DBC numbers bits LSB-first inside each byte, and anchors
Motorola (big endian) signals at the MSB and Intel (little endian) signals
at the LSB.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from .model import Endianness, N_BITS, SignalSpec, walk


class DbcError(ValueError):
    pass


def dbc_bit(i: int) -> int:
    """Map a payload bit index to DBC numbering; the map is its own inverse."""
    return 8 * (i // 8) + (7 - i % 8)


internal_bit = dbc_bit


@dataclass(frozen=True)
class SignalDefinition:
    name: str
    start_bit: int  # MSB, payload numbering
    length: int
    endianness: Endianness = Endianness.BIG
    signed: bool = False
    scale: float = 1.0
    offset: float = 0.0
    unit: str = ""
    comment: str = ""

    def __post_init__(self):
        if not 1 <= self.length <= N_BITS:
            raise DbcError(f"{self.name}: length {self.length} outside 1..64")
        if walk(self.start_bit, self.length, self.endianness) is None:
            raise DbcError(f"{self.name}: {self.length} bits from bit {self.start_bit} overflow the payload")

    @property
    def bit_indices(self) -> tuple[int, ...]:
        return walk(self.start_bit, self.length, self.endianness)

    @property
    def spec(self) -> SignalSpec:
        return SignalSpec(self.bit_indices, self.endianness)

    @property
    def lsb(self) -> int:
        return self.bit_indices[-1]

    def raw_range(self) -> tuple[int, int]:
        if self.signed:
            return -(1 << (self.length - 1)), (1 << (self.length - 1)) - 1
        return 0, (1 << self.length) - 1

    def physical_range(self) -> tuple[float, float]:
        lo, hi = self.raw_range()
        a, b = lo * self.scale + self.offset, hi * self.scale + self.offset
        return (a, b) if a <= b else (b, a)

    @classmethod
    def from_spec(cls, name: str, spec: SignalSpec, **kw) -> "SignalDefinition":
        return cls(name, spec.msb, len(spec), spec.endianness, **kw)


@dataclass(frozen=True)
class MessageDefinition:
    arbitration_id: int
    name: str
    dlc: int = 8
    signals: tuple[SignalDefinition, ...] = field(default=())
    sender: str = "Vector__XXX"

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))

    def validate(self) -> None:
        owner: dict[int, str] = {}
        byte_order: dict[int, tuple[Endianness, str]] = {}
        for s in self.signals:
            idx = s.bit_indices
            for i in idx:
                if i in owner:
                    raise DbcError(
                        f"message 0x{self.arbitration_id:X}: signals {owner[i]} and {s.name} overlap at bit {i}"
                    )
                owner[i] = s.name
            if len({i // 8 for i in idx}) > 1:
                for j in {i // 8 for i in idx}:
                    prev = byte_order.get(j)
                    if prev and prev[0] is not s.endianness:
                        raise DbcError(
                            f"message 0x{self.arbitration_id:X}: byte {j} mixes {prev[1]} and {s.name} byte orders"
                        )
                    byte_order[j] = (s.endianness, s.name)

    def signal(self, name: str) -> SignalDefinition:
        for s in self.signals:
            if s.name == name:
                return s
        raise KeyError(name)


def to_dbc_start_bit(sig: SignalDefinition) -> int:
    if sig.endianness is Endianness.BIG:
        return dbc_bit(sig.start_bit)
    return dbc_bit(sig.lsb)


def from_dbc_start_bit(start: int, length: int, endianness: Endianness) -> int:
    """Inverse of :func:`to_dbc_start_bit`: the internal MSB index."""
    anchor = internal_bit(start)
    if endianness is Endianness.BIG:
        return anchor
    # walk LITTLE order backwards from the LSB
    cur = anchor
    for _ in range(length - 1):
        j, k = divmod(cur, 8)
        if k > 0:
            cur -= 1
        elif j < 7:
            cur = 8 * (j + 1) + 7
        else:
            raise DbcError(f"little endian signal at DBC bit {start} with length {length} overflows")
    return cur


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


_EXTENDED_FLAG = 0x80000000


def write_dbc(messages: Iterable[MessageDefinition], header: str | None = None) -> str:
    messages = list(messages)
    for m in messages:
        m.validate()
    out = [f'VERSION "{header or ""}"', "", "", "NS_ :", "", "BS_:", "", "BU_: Vector__XXX", ""]
    comments = []
    for m in sorted(messages, key=lambda m: m.arbitration_id):
        ident = m.arbitration_id | _EXTENDED_FLAG if m.arbitration_id > 0x7FF else m.arbitration_id
        out.append(f"BO_ {ident} {m.name}: {m.dlc} {m.sender}")
        for s in m.signals:
            order = "0" if s.endianness is Endianness.BIG else "1"
            sign = "-" if s.signed else "+"
            lo, hi = s.physical_range()
            out.append(
                f" SG_ {s.name} : {to_dbc_start_bit(s)}|{s.length}@{order}{sign} "
                f"({_num(s.scale)},{_num(s.offset)}) [{_num(lo)}|{_num(hi)}] "
                f'"{s.unit}" Vector__XXX'
            )
            if s.comment:
                comments.append(f'CM_ SG_ {ident} {s.name} "{s.comment}";')
        out.append("")
    out.extend(comments)
    return "\n".join(out).rstrip("\n") + "\n"


_BO_RE = re.compile(r"^BO_\s+(\d+)\s+(\w+)\s*:\s*(\d+)\s+(\S+)\s*$")
_SG_RE = re.compile(
    r'^SG_\s+(\w+)\s*:\s*(\d+)\|(\d+)@([01])([+-])\s*\(([^,]+),([^)]+)\)\s*'
    r'\[([^|]+)\|([^\]]+)\]\s*"([^"]*)"\s*(.*)$'
)
_CM_RE = re.compile(r'^CM_\s+SG_\s+(\d+)\s+(\w+)\s+"([^"]*)"\s*;\s*$')


def read_dbc(text: str) -> list[MessageDefinition]:
    """Parse BO_/SG_ (and CM_ SG_ comments); every other stanza is ignored."""
    msgs: list[dict] = []
    comments: dict[tuple[int, str], str] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("BO_ "):
            m = _BO_RE.match(line)
            if not m:
                raise DbcError(f"line {lineno}: malformed BO_ line: {raw!r}")
            ident = int(m[1])
            current = dict(raw_id=ident, name=m[2], dlc=int(m[3]), sender=m[4], signals=[])
            msgs.append(current)
        elif line.startswith("SG_ "):
            m = _SG_RE.match(line)
            if not m or current is None:
                raise DbcError(f"line {lineno}: malformed SG_ line: {raw!r}")
            name, start, length = m[1], int(m[2]), int(m[3])
            e = Endianness.BIG if m[4] == "0" else Endianness.LITTLE
            try:
                msb = from_dbc_start_bit(start, length, e)
                sig = SignalDefinition(
                    name, msb, length, e, m[5] == "-", float(m[6]), float(m[7]), m[10]
                )
            except (DbcError, ValueError) as exc:
                raise DbcError(f"line {lineno}: {exc}") from exc
            current["signals"].append(sig)
        elif line.startswith("CM_ SG_"):
            m = _CM_RE.match(line)
            if m:
                comments[(int(m[1]), m[2])] = m[3]
        elif line and not line.startswith(("SG_", "BO_")) and current is not None and not raw[:1].isspace():
            current = None
    out = []
    for d in msgs:
        sigs = [
            replace(s, comment=comments.get((d["raw_id"], s.name), "")) for s in d["signals"]
        ]
        ident = d["raw_id"] & ~_EXTENDED_FLAG
        msg = MessageDefinition(ident, d["name"], d["dlc"], tuple(sigs), d["sender"])
        msg.validate()
        out.append(msg)
    return out


def messages_by_id(messages: Iterable[MessageDefinition]) -> dict[int, MessageDefinition]:
    return {m.arbitration_id: m for m in messages}
