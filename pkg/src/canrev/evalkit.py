"""Boundary precision/recall/F and mean l1 signal error against ground truth."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .dbcio import MessageDefinition, SignalDefinition
from .features import condense, label_vector, truth_fragments
from .interpret import translate_bits
from .model import N_BITS, Endianness, IdTrace, SignalSpec

REGIMES = ("c", "f-", "f+")


def fragment_ids(msg: MessageDefinition | None) -> np.ndarray:
    """Byte-split fragment id per bit; unclaimed bits are singletons."""
    owner = truth_fragments(msg) if msg is not None else {}
    return np.array([owner.get(i, -1 - i) for i in range(N_BITS)])


def full_boundary_flags(msg: MessageDefinition | None) -> np.ndarray:
    """flags[i]: bit i and bit i+1 (forward order) lie in different fragments."""
    frag = fragment_ids(msg)
    flags = np.ones(N_BITS, dtype=bool)
    flags[:-1] = frag[:-1] != frag[1:]
    return flags


def regime_positions(trace: IdTrace, regime: str) -> np.ndarray:
    """Scored full-trace bit positions for f- / f+."""
    const = trace.constant_mask
    if regime == "f+":
        return np.nonzero(~const)[0]
    if regime == "f-":
        return np.array([i for i in range(N_BITS - 1) if not const[i] and not const[i + 1]], dtype=int)
    raise ValueError(f"unknown regime {regime!r}; expected one of {', '.join(REGIMES)}")


def regime_labels(msg: MessageDefinition | None, trace: IdTrace, regime: str) -> np.ndarray:
    if regime == "c":
        ct = condense(trace, Endianness.BIG)
        m = msg if msg is not None else MessageDefinition(trace.arbitration_id, "EMPTY")
        return label_vector(ct, m)
    return full_boundary_flags(msg)[regime_positions(trace, regime)]


@dataclass
class BoundaryScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "BoundaryScore") -> "BoundaryScore":
        return BoundaryScore(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f_score(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def score_flags(pred, truth) -> BoundaryScore:
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth cover different positions")
    return BoundaryScore(
        int((pred & truth).sum()), int((pred & ~truth).sum()), int((~pred & truth).sum()), int((~pred & ~truth).sum())
    )


def boundary_metrics(pred: MessageDefinition | None, truth: MessageDefinition, trace: IdTrace, regime: str) -> BoundaryScore:
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {', '.join(REGIMES)}")
    if truth.arbitration_id != trace.arbitration_id:
        raise ValueError(f"truth 0x{truth.arbitration_id:X} does not describe trace 0x{trace.arbitration_id:X}")
    if len(trace) < 2:
        return BoundaryScore()
    return score_flags(regime_labels(pred, trace, regime), regime_labels(truth, trace, regime))


def trim_constant_msbs(spec: SignalSpec, constant: np.ndarray) -> SignalSpec:
    """Drop leading bits that never change; a signal keeps at least one bit."""
    idx = list(spec.bit_indices)
    while len(idx) > 1 and constant[idx[0]]:
        idx.pop(0)
    return SignalSpec(tuple(idx), spec.endianness)


def normalized(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def _series(trace: IdTrace, sig: SignalDefinition, spec: SignalSpec | None = None) -> np.ndarray:
    spec = spec or sig.spec
    return normalized(translate_bits(trace.bits, spec.bit_indices, sig.signed).astype(float))


@dataclass
class SignalErrorReport:
    raw: float
    pairs: int
    eta: dict[str, str | None] = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return self.raw / self.pairs if self.pairs else 0.0

    def __add__(self, other: "SignalErrorReport") -> "SignalErrorReport":
        return SignalErrorReport(self.raw + other.raw, self.pairs + other.pairs, {**self.eta, **other.eta})


def mean_l1_error(truth: MessageDefinition, pred: MessageDefinition | None, trace: IdTrace) -> SignalErrorReport:
    """Normalized per-step l1 distance between true signals and the predicted
    signal holding each one's MSB; unmatched predictions count against zero.

    Signals constant over the trace carry no information and are skipped on
    both sides; truth signals are first trimmed of constant leading bits.
    """
    if len(trace) < 2:
        return SignalErrorReport(0.0, 0)
    const = trace.constant_mask
    preds = [s for s in (pred.signals if pred else ()) if not const[list(s.bit_indices)].all()]
    holder = {}
    for s in preds:
        for i in s.bit_indices:
            holder[i] = s
    raw, pairs, eta, used = 0.0, 0, {}, set()
    for s in truth.signals:
        if const[list(s.bit_indices)].all():
            continue
        spec = trim_constant_msbs(s.spec, const)
        x = _series(trace, s, spec)
        p = holder.get(spec.msb)
        y = _series(trace, p) if p is not None else np.zeros_like(x)
        raw += float(np.mean(np.abs(x - y)))
        pairs += 1
        eta[s.name] = p.name if p is not None else None
        if p is not None:
            used.add(p.name)
    for p in preds:
        if p.name not in used:
            raw += float(np.mean(_series(trace, p)))
            pairs += 1
    key = f"0x{truth.arbitration_id:X}"
    return SignalErrorReport(raw, pairs, {f"{key}.{k}": v for k, v in eta.items()})


def container(pred: MessageDefinition | None, bit: int) -> SignalDefinition | None:
    for s in pred.signals if pred else ():
        if bit in s.bit_indices:
            return s
    return None


def endianness_recovery(truth: MessageDefinition, pred: MessageDefinition | None, trace: IdTrace) -> tuple[int, int]:
    """(hits, total) over truth signals still spanning bytes after MSB trimming."""
    const = trace.constant_mask
    hits = total = 0
    for s in truth.signals:
        spec = trim_constant_msbs(s.spec, const)
        if len(spec.bytes_spanned) < 2:
            continue
        total += 1
        p = container(pred, spec.msb)
        if p is not None and len(p.spec.bytes_spanned) > 1 and p.endianness is s.endianness:
            hits += 1
    return hits, total


def crosses_zero(trace: IdTrace, sig: SignalDefinition) -> bool:
    if not sig.signed:
        return False
    v = translate_bits(trace.bits, sig.bit_indices, True)
    return bool((v < 0).any() and (v >= 0).any())


def signedness_accuracy(truth: MessageDefinition, pred: MessageDefinition | None, trace: IdTrace, zero_crossing_only=True):
    hits = total = 0
    const = trace.constant_mask
    for s in truth.signals:
        if const[list(s.bit_indices)].all() or len(s.spec) <= 2:
            continue
        if zero_crossing_only and not crosses_zero(trace, s):
            continue
        total += 1
        p = container(pred, trim_constant_msbs(s.spec, const).msb)
        if p is not None and p.signed == s.signed:
            hits += 1
    return hits, total


@dataclass
class EvalTable:
    boundary: dict[tuple[str, str], BoundaryScore] = field(default_factory=dict)
    l1: dict[str, SignalErrorReport] = field(default_factory=dict)

    def add(self, algorithm: str, regime: str, score: BoundaryScore) -> None:
        key = (algorithm, regime)
        self.boundary[key] = self.boundary.get(key, BoundaryScore()) + score

    def add_l1(self, algorithm: str, rep: SignalErrorReport) -> None:
        self.l1[algorithm] = self.l1.get(algorithm, SignalErrorReport(0.0, 0)) + rep

    def boundary_csv(self) -> str:
        buf = io.StringIO()
        buf.write("algorithm,regime,precision,recall,f_score,tp,fp,fn\n")
        for (alg, reg), s in self.boundary.items():
            buf.write(f"{alg},{reg},{s.precision:.4f},{s.recall:.4f},{s.f_score:.4f},{s.tp},{s.fp},{s.fn}\n")
        return buf.getvalue()

    def l1_csv(self) -> str:
        buf = io.StringIO()
        buf.write("algorithm,l1_raw,l1_mean,pairs\n")
        for alg, r in self.l1.items():
            buf.write(f"{alg},{r.raw:.6f},{r.mean:.6f},{r.pairs}\n")
        return buf.getvalue()

    def text(self) -> str:
        algs = list(dict.fromkeys(a for a, _ in self.boundary))
        regs = list(dict.fromkeys(r for _, r in self.boundary))
        cols = [f"{r} {m}" for r in regs for m in ("P", "R", "F")] + (["l1"] if self.l1 else [])
        w = max([len(a) for a in algs + list(self.l1)] + [9])
        lines = [f"{'algorithm':<{w}} " + " ".join(f"{c:>7}" for c in cols)]
        for a in algs or list(self.l1):
            cells = []
            for r in regs:
                s = self.boundary.get((a, r), BoundaryScore())
                cells += [f"{100 * s.precision:7.1f}", f"{100 * s.recall:7.1f}", f"{100 * s.f_score:7.1f}"]
            if self.l1:
                rep = self.l1.get(a)
                cells.append(f"{rep.mean:7.4f}" if rep else f"{'-':>7}")
            lines.append(f"{a:<{w}} " + " ".join(cells))
        return "\n".join(lines) + "\n"
