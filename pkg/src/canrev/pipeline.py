"""Per-ID decoding: boundaries, byte order, signedness, then interpretation."""
from __future__ import annotations

import io
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .boundary import ForestClassifier, HeuristicClassifier, boundary_probabilities
from .dbcio import MessageDefinition, SignalDefinition
from .endian import Tokenization, optimize
from .ingest import CanLog, DidTrace, partition_traces
from .interpret import Interpretation, best_match, translate
from .model import N_BITS, IdTrace, SignalSpec
from .signedness import apply_signedness

LOW_CONFIDENCE_FRAMES = 100


@dataclass(frozen=True)
class PipelineConfig:
    alpha1: float = 0.01
    alpha2: float = 0.5
    beta: float = 0.6
    gamma: float = 0.2
    delta: float = 0.5
    hold: bool = False  # zero-order hold instead of linear interpolation

    def __post_init__(self):
        for k, v in asdict(self).items():
            if k != "hold" and not 0.0 <= v <= 1.0:
                raise ValueError(f"{k}={v} outside [0, 1]")

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in asdict(self).items())


@dataclass
class DecodedSignal:
    name: str
    spec: SignalSpec
    signed: bool
    interpretation: Interpretation | None = None
    best_label: str = ""
    best_r2: float = float("nan")

    def definition(self) -> SignalDefinition:
        it = self.interpretation
        kw = dict(signed=self.signed)
        if it is not None:
            kw.update(scale=it.scale, offset=it.offset, unit=it.unit, comment=f"{it.did_label} r2={it.r_squared:.6f}")
        return SignalDefinition.from_spec(self.name, self.spec, **kw)


@dataclass
class IdResult:
    arbitration_id: int
    n_frames: int
    dlc: int
    constant: np.ndarray
    tokenization: Tokenization | None
    signals: list[DecodedSignal] = field(default_factory=list)

    @property
    def low_confidence(self) -> bool:
        return self.n_frames < LOW_CONFIDENCE_FRAMES

    def message(self) -> MessageDefinition:
        return MessageDefinition(
            self.arbitration_id, f"ID{self.arbitration_id:X}", self.dlc, tuple(s.definition() for s in self.signals)
        )

    def all_specs_message(self) -> MessageDefinition:
        """Every tokenized signal, constant ones included (for evaluation)."""
        if self.tokenization is None:
            return MessageDefinition(self.arbitration_id, f"ID{self.arbitration_id:X}", self.dlc)
        by_msb = {s.spec.msb: s for s in self.signals}
        sigs = []
        for k, spec in enumerate(self.tokenization.signals):
            d = by_msb.get(spec.msb)
            sigs.append(d.definition() if d else SignalDefinition.from_spec(f"C{k}", spec))
        return MessageDefinition(self.arbitration_id, f"ID{self.arbitration_id:X}", self.dlc, tuple(sigs))


def make_classifier(choice: str, cfg: PipelineConfig):
    if choice == "heuristic":
        return HeuristicClassifier(cfg.alpha1, cfg.alpha2)
    if choice.startswith("forest:"):
        from .forest import ForestModel

        with open(choice.split(":", 1)[1]) as fh:
            return ForestClassifier(ForestModel.loads(fh.read()))
    raise ValueError(f"unknown classifier {choice!r}; use heuristic or forest:<model-file>")


def constant_ranges(constant: np.ndarray) -> list[tuple[int, int]]:
    out, start = [], None
    for i in range(N_BITS):
        if constant[i] and start is None:
            start = i
        if start is not None and (not constant[i] or i == N_BITS - 1):
            end = i if constant[i] else i - 1
            out.append((start, end))
            start = None
    return out


def _sanitize(label: str) -> str:
    s = re.sub(r"\W", "_", label)
    return s if s and not s[0].isdigit() else f"D_{s}"


def tokenize(trace: IdTrace, classifier, cfg: PipelineConfig) -> Tokenization:
    return optimize(boundary_probabilities(trace, classifier), cfg.beta)


def decode_trace(trace: IdTrace, classifier, cfg: PipelineConfig, dids: list[DidTrace] = (), dlc: int = 8) -> IdResult:
    n = len(trace)
    const = trace.constant_mask if n >= 2 else np.ones(N_BITS, dtype=bool)
    res = IdResult(trace.arbitration_id, n, dlc, const, None)
    if n < 2 or const.all():
        return res
    tok = tokenize(trace, classifier, cfg)
    res.tokenization = tok
    live = [s for s in tok.signals if not const[list(s.bit_indices)].all()]
    signed = apply_signedness(live, trace, cfg.gamma)
    used: dict[str, int] = {}
    for k, (spec, sg) in enumerate(zip(live, signed)):
        ts = translate(trace, spec, sg)
        m = best_match(ts, list(dids), hold=cfg.hold) if dids else None
        name = f"ID{trace.arbitration_id:X}_SIG{k}"
        it = None
        if m is not None and m.r_squared > cfg.delta:
            unit = next(d.unit for d in dids if d.did_label == m.did_label)
            it = Interpretation(m.did_label, unit, m.a, m.b, m.r_squared)
            base = _sanitize(m.did_label)
            used[base] = used.get(base, 0) + 1
            name = base if used[base] == 1 else f"{base}_{used[base]}"
        res.signals.append(
            DecodedSignal(name, spec, sg, it, m.did_label if m else "", m.r_squared if m else float("nan"))
        )
    return res


@dataclass
class DecodeResult:
    results: list[IdResult]
    config: PipelineConfig
    classifier_name: str
    source: str = ""

    def messages(self) -> list[MessageDefinition]:
        return [r.message() for r in self.results if r.signals]


def decode_log(
    log: CanLog, classifier, cfg: PipelineConfig, dids: list[DidTrace] = (), jobs: int = 1, classifier_name: str = ""
) -> DecodeResult:
    traces = partition_traces(log)
    dlc: dict[int, int] = {}
    for f in log.frames:
        dlc[f.arbitration_id] = max(dlc.get(f.arbitration_id, 0), len(f.data))

    def run(ident):
        return decode_trace(traces[ident], classifier, cfg, dids, dlc[ident])

    ids = sorted(traces)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(run, ids))
    else:
        results = [run(i) for i in ids]
    return DecodeResult(results, cfg, classifier_name or getattr(classifier, "name", ""), log.source_name)


def run_header(result: DecodeResult, seed: int) -> str:
    return f"canrev {__version__} seed={seed} classifier={result.classifier_name} {result.config.describe()}"


def match_csv(result: DecodeResult) -> str:
    buf = io.StringIO()
    buf.write("id,signal,did_label,a,b,r2,matched\n")
    for r in result.results:
        for s in r.signals:
            it = s.interpretation
            if it is not None:
                buf.write(f"0x{r.arbitration_id:X},{s.name},{it.did_label},{it.scale!r},{it.offset!r},{it.r_squared:.9f},1\n")
            elif s.best_label:
                buf.write(f"0x{r.arbitration_id:X},{s.name},{s.best_label},,,{s.best_r2:.9f},0\n")
    return buf.getvalue()


def render_report(result: DecodeResult, seed: int = 0) -> str:
    out = [f"# {run_header(result, seed)}", f"# source: {result.source}", ""]
    out.append(f"ids decoded: {len(result.results)}")
    low = [r for r in result.results if r.low_confidence]
    out.append(
        "low-confidence ids (< %d frames): %s"
        % (LOW_CONFIDENCE_FRAMES, ", ".join(f"0x{r.arbitration_id:X}({r.n_frames})" for r in low) or "none")
    )
    out.append("")
    out.append("constant bit ranges:")
    for r in result.results:
        rng = ", ".join(f"{a}-{b}" if a != b else f"{a}" for a, b in constant_ranges(r.constant))
        out.append(f"  0x{r.arbitration_id:X}: {rng or 'none'}")
    out.append("")
    out.append("signals:")
    for r in result.results:
        for s in r.signals:
            d = s.definition()
            out.append(
                f"  0x{r.arbitration_id:X} {s.name}: msb={d.start_bit} len={d.length} {d.endianness} "
                f"{'signed' if s.signed else 'unsigned'}"
            )
    out.append("")
    out.append("did matches:")
    out.append(match_csv(result).rstrip("\n"))
    return "\n".join(out) + "\n"
