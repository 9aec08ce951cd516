"""Per-bit signal-boundary (cut) probabilities under both byte orders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dbcio import MessageDefinition
from .features import (
    P_NEXT_GIVEN_I,
    P_NEXTNEXT_GIVEN_NEXT,
    FeatureMatrix,
    condense,
    feature_matrix,
    label_vector,
    obvious_mask,
)
from .forest import ForestModel, ForestParams, train_forest
from .model import N_BITS, Endianness, IdTrace, successor

MANDATORY = np.inf  # marker for a forced cut; never summed

# nonobvious-positive : negative : obvious-positive
CLASS_WEIGHTS = (8.0, 4.0, 1.0)


def heuristic_boundary(p_next_given_i, p_nextnext_given_next=None, alpha1=0.01, alpha2=0.5) -> bool:
    """Cut after bit i when its successor rarely flips with it, or when the
    successor is far more tied to its own successor than to bit i."""
    if p_next_given_i < alpha1:
        return True
    if p_nextnext_given_next is None:
        return False
    return (p_nextnext_given_next - p_next_given_i) > alpha2


@dataclass(frozen=True)
class HeuristicClassifier:
    alpha1: float = 0.01
    alpha2: float = 0.5
    name: str = "heuristic"

    def predict(self, fm: FeatureMatrix) -> np.ndarray:
        a = fm.X[:, P_NEXT_GIVEN_I]
        b = fm.X[:, P_NEXTNEXT_GIVEN_NEXT]
        cut = (a < self.alpha1) | (fm.has_next & ((b - a) > self.alpha2))
        return cut.astype(float)


@dataclass(frozen=True)
class ForestClassifier:
    model: ForestModel
    name: str = "forest"

    def predict(self, fm: FeatureMatrix) -> np.ndarray:
        return self.model.predict_proba(fm.X)


@dataclass(frozen=True)
class BoundaryProbabilities:
    """``f[e][i]``: cut likelihood after bit i in byte order e, MANDATORY at forced cuts."""

    big: np.ndarray
    little: np.ndarray

    def __getitem__(self, e: Endianness) -> np.ndarray:
        return self.big if e is Endianness.BIG else self.little

    @classmethod
    def from_arrays(cls, big, little) -> "BoundaryProbabilities":
        b = np.asarray(big, dtype=float).copy()
        l = np.asarray(little, dtype=float).copy()
        b.setflags(write=False)
        l.setflags(write=False)
        return cls(b, l)


def mandatory_mask(constant: np.ndarray, e: Endianness) -> np.ndarray:
    out = np.zeros(N_BITS, dtype=bool)
    for i in range(N_BITS):
        nxt = successor(i, e)
        out[i] = constant[i] or nxt is None or constant[nxt]
    return out


def boundary_probabilities(trace: IdTrace, classifier) -> BoundaryProbabilities:
    const = trace.constant_mask
    out = {}
    for e in Endianness:
        f = np.full(N_BITS, MANDATORY)
        fm = feature_matrix(condense(trace, e))
        if len(fm):
            f[list(fm.left_bits)] = classifier.predict(fm)
        f[mandatory_mask(const, e)] = MANDATORY
        out[e] = f
    return BoundaryProbabilities.from_arrays(out[Endianness.BIG], out[Endianness.LITTLE])


def training_rows(trace: IdTrace, truth: MessageDefinition, e: Endianness = Endianness.BIG):
    """Features, labels and 8:4:1 weights from one labelled trace."""
    ct = condense(trace, e)
    fm = feature_matrix(ct)
    if not len(fm):
        return fm.X, np.zeros(0, dtype=bool), np.zeros(0)
    y = label_vector(ct, truth)
    obvious = obvious_mask(ct)
    nonobv_pos, neg, obv_pos = CLASS_WEIGHTS
    w = np.where(~y, neg, np.where(obvious, obv_pos, nonobv_pos))
    return fm.X, y, w


def train_boundary_forest(pairs, params: ForestParams | None = None) -> ForestModel:
    """Fit a forest on (IdTrace, MessageDefinition) pairs."""
    Xs, ys, ws = [], [], []
    for trace, truth in pairs:
        if len(trace) < 2:
            continue
        X, y, w = training_rows(trace, truth)
        Xs.append(X)
        ys.append(y)
        ws.append(w)
    if not Xs:
        raise ValueError("no labelled training rows")
    X = np.vstack(Xs)
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    model = train_forest(X, y, w, params)
    model.metadata.update(rows=len(y), positives=int(y.sum()))
    return model
