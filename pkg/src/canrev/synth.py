"""Synthetic CAN logs from ground-truth message definitions.

A corpus recipe is a DBC fragment (``BO_``/``SG_`` lines) plus directives::

    GEN_ <msg> <signal> <kind> [key=value ...] <seed>
    RATE_ <msg> <hz>
    DURATION_ <seconds>
    DID_ <msg> <signal> <label> <unit> <a> <b> <rate_hz> <sigma>

Generators emit physical values; they are mapped to raw integers through
the signal's scale and offset and packed with the exact inverse of
:func:`canrev.interpret.translate_bits`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dbcio import DbcError, MessageDefinition, SignalDefinition, read_dbc
from .ingest import CanLog, DidTrace
from .model import N_BITS, CanFrame, bits_to_bytes

KINDS = ("counter", "ramp", "sine", "random-walk", "categorical", "constant")
JITTER = 0.01  # fraction of the frame period


class RecipeError(ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


class GeneratorRangeError(ValueError):
    pass


@dataclass(frozen=True)
class SignalGenerator:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {', '.join(KINDS)}")

    def p(self, key, default=None):
        v = self.params.get(key, default)
        if v is None:
            raise ValueError(f"{self.kind} generator needs parameter {key!r}")
        return v

    def sample(self, t: np.ndarray, sig: SignalDefinition, rng: np.random.Generator) -> np.ndarray:
        """Physical values at frame times `t`."""
        n = len(t)
        k = self.kind
        if k == "constant":
            return np.full(n, float(self.p("value", 0.0)))
        if k == "counter":
            lo, hi = sig.raw_range()
            step = int(self.p("step", 1))
            start = int(self.p("start", lo))
            raw = lo + (start - lo + step * np.arange(n)) % (hi - lo + 1)
            return raw * sig.scale + sig.offset
        if k == "sine":
            c, a = float(self.p("center", 0.0)), float(self.p("amplitude"))
            period, phase = float(self.p("period")), float(self.p("phase", 0.0))
            return c + a * np.sin(2 * math.pi * t / period + phase)
        if k == "ramp":
            lo, hi, period = float(self.p("lo")), float(self.p("hi")), float(self.p("period"))
            x = (t / period) % 1.0
            return lo + (hi - lo) * (1.0 - np.abs(2.0 * x - 1.0))
        if k == "random-walk":
            lo, hi = float(self.p("lo")), float(self.p("hi"))
            step = float(self.p("step"))
            x = float(self.p("start", (lo + hi) / 2))
            out = np.empty(n)
            steps = rng.normal(0.0, step, size=n)
            for j in range(n):
                x += steps[j]
                # reflect at the walls
                if x > hi:
                    x = 2 * hi - x
                if x < lo:
                    x = 2 * lo - x
                x = min(max(x, lo), hi)
                out[j] = x
            return out
        # categorical: hold a value, switch to a different one at random times
        values = [float(v) for v in self.p("values")]
        dwell = float(self.p("dwell", 1.0))
        dt = float(np.median(np.diff(t))) if n > 1 else 1.0
        p_switch = min(1.0, dt / dwell)
        cur = int(rng.integers(len(values)))
        out = np.empty(n)
        switches = rng.random(n) < p_switch
        picks = rng.integers(1, max(len(values), 2), size=n)
        for j in range(n):
            if switches[j] and len(values) > 1:
                cur = (cur + int(picks[j])) % len(values)
            out[j] = values[cur]
        return out


def to_raw(sig: SignalDefinition, phys: np.ndarray, where: str = "") -> np.ndarray:
    raw = np.rint((np.asarray(phys, dtype=float) - sig.offset) / sig.scale).astype(np.int64)
    lo, hi = sig.raw_range()
    bad = (raw < lo) | (raw > hi)
    if bad.any():
        v = int(raw[np.argmax(bad)])
        raise GeneratorRangeError(f"signal {where or sig.name}: raw value {v} outside [{lo}, {hi}]")
    return raw


def pack_signals(n: int, signals: list[tuple[SignalDefinition, np.ndarray]]) -> np.ndarray:
    """n x 64 bit matrix with each raw series written at its bit indices."""
    bits = np.zeros((n, N_BITS), dtype=np.uint8)
    for sig, raw in signals:
        L = sig.length
        u = np.asarray(raw, dtype=np.int64).astype(np.uint64) & np.uint64((1 << L) - 1)
        for k, i in enumerate(sig.bit_indices):
            bits[:, i] = ((u >> np.uint64(L - 1 - k)) & np.uint64(1)).astype(np.uint8)
    return bits


def _round_us(t: np.ndarray) -> np.ndarray:
    # the candump text has microsecond resolution; keep exactly what is written
    return np.array([float(f"{x:.6f}") for x in t])


def frame_times(period: float, n: int, rng: np.random.Generator) -> np.ndarray:
    t0 = rng.uniform(0.0, period)
    jitter = rng.uniform(-JITTER * period, JITTER * period, size=n)
    return _round_us(t0 + period * np.arange(n) + jitter)


@dataclass
class MessageTrack:
    message: MessageDefinition
    timestamps: np.ndarray
    physical: dict[str, np.ndarray]
    raw: dict[str, np.ndarray]


def generate_tracks(defs, generators, duration: float, rates: dict[str, float], seed: int = 0) -> list[MessageTrack]:
    tracks = []
    for m in sorted(defs, key=lambda m: m.arbitration_id):
        rate = rates.get(m.name)
        if rate is None or rate <= 0:
            raise ValueError(f"message {m.name}: rate must be > 0")
        period = 1.0 / rate
        n = int(round(duration * rate))
        t = frame_times(period, n, np.random.default_rng([seed, m.arbitration_id]))
        phys, raw = {}, {}
        for s in m.signals:
            g = generators.get((m.name, s.name))
            if g is None:
                raise ValueError(f"signal {m.name}.{s.name} has no generator")
            rng = np.random.default_rng([seed, g.seed])
            r = to_raw(s, g.sample(t, s, rng), f"{m.name}.{s.name}")
            raw[s.name] = r
            phys[s.name] = r * s.scale + s.offset
        tracks.append(MessageTrack(m, t, phys, raw))
    return tracks


def tracks_to_log(tracks: list[MessageTrack], source_name: str = "<synth>") -> CanLog:
    frames = []
    for tr in tracks:
        m = tr.message
        bits = pack_signals(len(tr.timestamps), [(s, tr.raw[s.name]) for s in m.signals])
        ext = m.arbitration_id > 0x7FF
        for k, t in enumerate(tr.timestamps):
            frames.append(CanFrame(float(t), m.arbitration_id, bits_to_bytes(bits[k], m.dlc), extended=ext))
    frames.sort(key=lambda f: (f.timestamp, f.arbitration_id))
    return CanLog(frames, source_name, data_lines=len(frames))


def generate_log(defs, generators, duration: float, rates: dict[str, float], seed: int = 0) -> CanLog:
    """Deterministic log with every signal of `defs` driven by its generator."""
    return tracks_to_log(generate_tracks(defs, generators, duration, rates, seed))


@dataclass(frozen=True)
class DidSpec:
    message: str
    signal: str
    label: str
    unit: str
    a: float = 1.0
    b: float = 0.0
    rate: float = 5.0
    sigma: float = 0.0


def generate_did_traces(tracks: list[MessageTrack], specs: list[DidSpec], seed: int = 0) -> list[DidTrace]:
    """DID samples = a * physical + b (+ noise) on a regular grid inside the signal's span."""
    by_name = {tr.message.name: tr for tr in tracks}
    out = []
    for k, d in enumerate(specs):
        tr = by_name.get(d.message)
        if tr is None or d.signal not in tr.physical:
            raise ValueError(f"DID {d.label}: unknown signal {d.message}.{d.signal}")
        t = tr.timestamps
        step = 1.0 / d.rate
        q = _round_us(np.arange(t[0] + step / 2, t[-1], step))
        v = d.a * np.interp(q, t, tr.physical[d.signal]) + d.b
        if d.sigma > 0:
            v = v + np.random.default_rng([seed, 0xD1D, k]).normal(0.0, d.sigma, size=len(v))
        out.append(DidTrace(d.label, d.unit, q, v))
    return out


@dataclass
class Recipe:
    messages: list[MessageDefinition]
    generators: dict[tuple[str, str], SignalGenerator]
    rates: dict[str, float]
    duration: float
    dids: list[DidSpec]


def _value(tok: str):
    if "|" in tok:
        return [float(x) for x in tok.split("|")]
    try:
        return float(tok)
    except ValueError:
        return tok


def parse_recipe(text: str) -> Recipe:
    lines = text.splitlines()
    dbc_lines = []
    directives = []
    for lineno, raw in enumerate(lines, start=1):
        s = raw.strip()
        if s.startswith(("GEN_", "RATE_", "DURATION_", "DID_")):
            directives.append((lineno, s.split()))
            dbc_lines.append("")
        elif s.startswith("#"):
            dbc_lines.append("")
        else:
            dbc_lines.append(raw)
    try:
        messages = read_dbc("\n".join(dbc_lines))
    except DbcError as exc:
        raise RecipeError(None, str(exc)) from exc
    sigs = {(m.name, s.name) for m in messages for s in m.signals}
    names = {m.name for m in messages}
    gens, rates, dids = {}, {}, []
    duration = None
    for lineno, tok in directives:
        head = tok[0]
        try:
            if head == "GEN_":
                if len(tok) < 5:
                    raise ValueError("GEN_ needs <msg> <signal> <kind> [params] <seed>")
                key = (tok[1], tok[2])
                if key not in sigs:
                    raise ValueError(f"unknown signal {tok[1]}.{tok[2]}")
                params = {}
                for kv in tok[4:-1]:
                    if "=" not in kv:
                        raise ValueError(f"parameter {kv!r} is not key=value")
                    k, v = kv.split("=", 1)
                    params[k] = _value(v)
                gens[key] = SignalGenerator(tok[3], params, int(tok[-1]))
            elif head == "RATE_":
                if len(tok) != 3 or tok[1] not in names:
                    raise ValueError("RATE_ needs a known message and a rate")
                rates[tok[1]] = float(tok[2])
                if rates[tok[1]] <= 0:
                    raise ValueError("rate must be > 0")
            elif head == "DURATION_":
                duration = float(tok[1])
                if duration <= 0:
                    raise ValueError("duration must be > 0")
            else:
                if len(tok) != 9:
                    raise ValueError("DID_ needs <msg> <signal> <label> <unit> <a> <b> <rate_hz> <sigma>")
                if (tok[1], tok[2]) not in sigs:
                    raise ValueError(f"unknown signal {tok[1]}.{tok[2]}")
                unit = "" if tok[4] == "-" else tok[4]
                dids.append(DidSpec(tok[1], tok[2], tok[3], unit, *(float(x) for x in tok[5:9])))
        except (ValueError, IndexError) as exc:
            raise RecipeError(lineno, str(exc)) from exc
    for m in messages:
        if m.name not in rates:
            raise RecipeError(None, f"message {m.name} has no RATE_ line")
        for s in m.signals:
            if (m.name, s.name) not in gens:
                raise RecipeError(None, f"signal {m.name}.{s.name} has no GEN_ line")
    if duration is None:
        raise RecipeError(None, "recipe has no DURATION_ line")
    return Recipe(messages, gens, rates, duration, dids)


def default_recipe_text() -> str:
    from importlib.resources import files

    return files("canrev.data").joinpath("default_recipe.txt").read_text()


@dataclass
class Corpus:
    recipe: Recipe
    tracks: list[MessageTrack]
    log: CanLog
    dids: list[DidTrace]

    @property
    def messages(self) -> list[MessageDefinition]:
        return self.recipe.messages


def synthesize(recipe: Recipe | str | None = None, seed: int = 0) -> Corpus:
    if recipe is None:
        recipe = default_recipe_text()
    if isinstance(recipe, str):
        recipe = parse_recipe(recipe)
    tracks = generate_tracks(recipe.messages, recipe.generators, recipe.duration, recipe.rates, seed)
    return Corpus(recipe, tracks, tracks_to_log(tracks), generate_did_traces(tracks, recipe.dids, seed))
