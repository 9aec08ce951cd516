"""Parse candump ASCII logs into per-ID traces and pull labelled diagnostic traces."""
from __future__ import annotations

import csv
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable

import numpy as np

from .model import CanFrame, IdTrace, MalformedFrameError, N_BITS, pad_payload

log = logging.getLogger(__name__)

_CANDUMP_RE = re.compile(
    r"^\((?P<ts>\d+(?:\.\d+)?)\)\s+(?P<iface>\S+)\s+(?P<id>[0-9A-Fa-f]{1,8})#(?P<data>[0-9A-Fa-f]*)\s*$"
)


class CandumpError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str = "malformed candump line"):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class DidFormatError(ValueError):
    pass


@dataclass
class CanLog:
    frames: list[CanFrame]
    source_name: str = "<memory>"
    malformed: list[tuple[int, str]] = field(default_factory=list)
    data_lines: int = 0

    def __post_init__(self):
        # stable sort keeps duplicate timestamps in input order
        if any(b.timestamp < a.timestamp for a, b in zip(self.frames, self.frames[1:])):
            self.frames = sorted(self.frames, key=lambda f: f.timestamp)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class DidTrace:
    did_label: str
    unit: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if ts.shape != vals.shape:
            raise ValueError("timestamps and values differ in length")
        if np.any(np.diff(ts) <= 0):
            raise ValueError(f"DID {self.did_label}: timestamps must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"DID {self.did_label}: non-finite value")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class DidDecodeRule:
    """value = (a_num / a_den) * raw + b, raw = big-endian integer of the data bytes.

    Data bytes follow the ``[len, service, pid]`` header of a single-frame
    response.  ``n_bytes`` of None takes the count from the length byte.
    """

    response_id: int
    service_byte: int
    pid: int
    label: str
    unit: str
    a_num: int
    a_den: int
    b: float
    n_bytes: int | None = None

    def decode(self, data: bytes) -> float:
        if len(data) < 3:
            raise MalformedFrameError("diagnostic response shorter than its header")
        n = self.n_bytes if self.n_bytes is not None else data[0] - 2
        if n < 1 or 3 + n > len(data):
            raise MalformedFrameError(
                f"{self.label}: rule needs {n} data bytes but payload has {len(data) - 3}"
            )
        raw = int.from_bytes(data[3 : 3 + n], "big")
        return float(Fraction(self.a_num, self.a_den) * raw) + self.b

    def matches(self, frame: CanFrame) -> bool:
        d = frame.data
        return (
            frame.arbitration_id == self.response_id
            and len(d) >= 3
            and d[1] == self.service_byte
            and d[2] == self.pid
        )


def _lines(stream: IO[str] | str | Iterable[str]) -> Iterable[str]:
    if isinstance(stream, str):
        return io.StringIO(stream)
    return stream


def parse_candump(stream, source_name: str = "<memory>", strict: bool = False) -> CanLog:
    """Parse ``(<sec>.<frac>) <iface> <HEXID>#<HEXDATA>`` lines.

    Blank lines and ``#`` comments are skipped.  Malformed lines are counted
    in ``CanLog.malformed``; with `strict` the first one raises CandumpError.
    """
    frames: list[CanFrame] = []
    malformed: list[tuple[int, str]] = []
    data_lines = 0
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        data_lines += 1
        m = _CANDUMP_RE.match(line)
        try:
            if m is None:
                raise CandumpError(lineno, line)
            hexdata = m["data"]
            if len(hexdata) % 2 or len(hexdata) > 16:
                raise CandumpError(lineno, line, "payload must be 0-8 whole bytes")
            hexid = m["id"]
            frames.append(
                CanFrame(
                    timestamp=float(m["ts"]),
                    arbitration_id=int(hexid, 16),
                    data=bytes.fromhex(hexdata),
                    interface=m["iface"],
                    extended=len(hexid) > 3,
                )
            )
        except (CandumpError, MalformedFrameError) as exc:
            if strict:
                if isinstance(exc, CandumpError):
                    raise
                raise CandumpError(lineno, line, str(exc)) from exc
            malformed.append((lineno, line))
    if malformed:
        log.warning("%s: skipped %d malformed line(s)", source_name, len(malformed))
    return CanLog(frames, source_name, malformed, data_lines)


def serialize_candump(log_: CanLog, header: str | None = None) -> str:
    out = []
    if header:
        out.extend(f"# {h}" for h in header.splitlines())
    for f in log_.frames:
        ident = f"{f.arbitration_id:08X}" if f.extended else f"{f.arbitration_id:03X}"
        out.append(f"({f.timestamp:.6f}) {f.interface} {ident}#{f.data.hex().upper()}")
    return "\n".join(out) + "\n"


def partition_traces(log_: CanLog) -> dict[int, IdTrace]:
    """Group frames by arbitration ID, preserving time order, into IdTraces."""
    groups: dict[int, list[CanFrame]] = defaultdict(list)
    for f in log_.frames:
        groups[f.arbitration_id].append(f)
    traces = {}
    for ident in sorted(groups):
        fs = groups[ident]
        bits = np.empty((len(fs), N_BITS), dtype=np.uint8)
        for k, f in enumerate(fs):
            bits[k] = pad_payload(f.data)
        traces[ident] = IdTrace(ident, np.array([f.timestamp for f in fs]), bits)
    return traces


def constant_ids(traces: dict[int, IdTrace]) -> list[int]:
    return [i for i, t in traces.items() if t.is_constant]


def extract_did_traces(
    log_: CanLog, rules: list[DidDecodeRule], errors: list[str] | None = None
) -> list[DidTrace]:
    """Decode every diagnostic response matched by `rules` into one DidTrace per label.

    Per-frame decode failures are appended to `errors` (if given) and skipped.
    Responses sharing a timestamp keep the first decoded value.
    """
    if not rules:
        raise ValueError("at least one DID rule is required")
    samples: dict[tuple[str, str], dict[float, float]] = {}
    for f in log_.frames:
        for rule in rules:
            if not rule.matches(f):
                continue
            try:
                value = rule.decode(f.data)
            except MalformedFrameError as exc:
                if errors is not None:
                    errors.append(f"t={f.timestamp:.6f} id=0x{f.arbitration_id:X}: {exc}")
                break
            samples.setdefault((rule.label, rule.unit), {}).setdefault(f.timestamp, value)
            break
    out = []
    for (label, unit), by_t in sorted(samples.items()):
        ts = np.array(sorted(by_t))
        out.append(DidTrace(label, unit, ts, np.array([by_t[t] for t in ts])))
    return out


def strip_diagnostics(log_: CanLog, rules: list[DidDecodeRule]) -> tuple[CanLog, int]:
    """Drop frames claimed by `rules`; returns the reduced log and the drop count."""
    kept = [f for f in log_.frames if not any(r.matches(f) for r in rules)]
    stripped = CanLog(kept, log_.source_name, list(log_.malformed), log_.data_lines)
    return stripped, len(log_.frames) - len(kept)


def _int(token: str) -> int:
    return int(token, 0)


def load_did_rules(stream) -> list[DidDecodeRule]:
    """Rule lines: ``response_id service pid label unit a_num a_den b [n_bytes]``.

    A unit of ``-`` stands for the empty unit.
    """
    rules = []
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) not in (8, 9):
            raise DidFormatError(f"line {lineno}: expected 8 or 9 fields, got {len(tok)}")
        try:
            rules.append(
                DidDecodeRule(
                    response_id=_int(tok[0]),
                    service_byte=_int(tok[1]),
                    pid=_int(tok[2]),
                    label=tok[3],
                    unit="" if tok[4] == "-" else tok[4],
                    a_num=_int(tok[5]),
                    a_den=_int(tok[6]),
                    b=float(tok[7]),
                    n_bytes=_int(tok[8]) if len(tok) == 9 else None,
                )
            )
        except ValueError as exc:
            raise DidFormatError(f"line {lineno}: {exc}") from exc
        if rules[-1].a_den == 0:
            raise DidFormatError(f"line {lineno}: zero denominator")
    return rules


def default_did_rules() -> list[DidDecodeRule]:
    from importlib.resources import files

    return load_did_rules(files("canrev.data").joinpath("default_did_rules.txt").read_text())


def load_did_csv(stream) -> list[DidTrace]:
    """Read ``timestamp,label,unit,value`` rows into time-sorted per-label traces."""
    lines = [ln for ln in _lines(stream) if not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return []
    if [h.strip() for h in header] != ["timestamp", "label", "unit", "value"]:
        raise DidFormatError(f"bad DID CSV header: {header}")
    rows: dict[tuple[str, str], list[tuple[float, float]]] = defaultdict(list)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise DidFormatError(f"row {lineno}: expected 4 columns")
        try:
            t, v = float(row[0]), float(row[3])
        except ValueError as exc:
            raise DidFormatError(f"row {lineno}: {exc}") from exc
        rows[(row[1], row[2])].append((t, v))
    out = []
    for (label, unit), pts in sorted(rows.items()):
        pts.sort(key=lambda p: p[0])
        ts = np.array([p[0] for p in pts])
        vals = np.array([p[1] for p in pts])
        out.append(DidTrace(label, unit, ts, vals))
    return out


def write_did_csv(traces: list[DidTrace], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", "label", "unit", "value"])
    for tr in traces:
        for t, v in zip(tr.timestamps, tr.values):
            w.writerow([f"{t:.6f}", tr.did_label, tr.unit, repr(float(v))])
    return buf.getvalue()
