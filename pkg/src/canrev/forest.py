"""A small random forest of weighted-Gini CART trees.

Determinism rules: splits use midpoints between consecutive distinct feature
values; equal gains go to the lowest feature index, then the lowest
threshold.  Bootstrap draws are uniform with replacement and their
multiplicities multiply the sample weights.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int = 5
    min_samples_leaf: int = 3
    max_features: int | None = None  # None -> ceil(sqrt(n_features))
    bootstrap: bool = True
    seed: int = 0

    def features_per_split(self, n_features: int) -> int:
        if self.max_features is None:
            return max(1, math.isqrt(n_features))
        return min(self.max_features, n_features)


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)  # -1 at leaves
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    leaf_p: list[float] = field(default_factory=list)

    def add(self, feature=-1, threshold=0.0, left=-1, right=-1, leaf_p=0.0) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(left)
        self.right.append(right)
        self.leaf_p.append(leaf_p)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feat = np.asarray(self.feature)
        thr = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            f = feat[node]
            inner = f >= 0
            if not inner.any():
                break
            rows = np.nonzero(inner)[0]
            go_left = X[rows, f[rows]] <= thr[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
        return np.asarray(self.leaf_p)[node]

    def depth(self) -> int:
        def d(k):
            if self.feature[k] < 0:
                return 0
            return 1 + max(d(self.left[k]), d(self.right[k]))

        return d(0)


def gini(w_pos: float, w_tot: float) -> float:
    if w_tot <= 0:
        return 0.0
    p = w_pos / w_tot
    return 2.0 * p * (1.0 - p)


def best_split(X, y, w, features, min_leaf):
    """Return (gain, feature, threshold) of the best weighted-Gini split or None."""
    W = w.sum()
    Wp = (w * y).sum()
    parent = W * gini(Wp, W)
    best = None
    n = X.shape[0]
    for f in sorted(features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cw = np.cumsum(w[order])
        cp = np.cumsum((w * y)[order])
        # candidate cut after sorted position k: left = [0..k]
        k = np.arange(n - 1)
        ok = (xs[:-1] < xs[1:]) & (k + 1 >= min_leaf) & (n - k - 1 >= min_leaf)
        if not ok.any():
            continue
        k = k[ok]
        wl, pl = cw[k], cp[k]
        wr, pr = W - wl, Wp - pl
        with np.errstate(divide="ignore", invalid="ignore"):
            gl = np.where(wl > 0, 2 * pl * (wl - pl) / np.where(wl > 0, wl, 1), 0.0)
            gr = np.where(wr > 0, 2 * pr * (wr - pr) / np.where(wr > 0, wr, 1), 0.0)
        gains = parent - (gl + gr)
        j = int(np.argmax(gains))  # first max -> lowest threshold
        g = float(gains[j])
        if g > 1e-12 and (best is None or g > best[0]):
            thr = 0.5 * (xs[k[j]] + xs[k[j] + 1])
            best = (g, f, float(thr))
    return best


def fit_tree(X, y, w, params: ForestParams, rng: np.random.Generator) -> Tree:
    tree = Tree()
    n_feat = X.shape[1]
    n_try = params.features_per_split(n_feat)

    def grow(idx, depth):
        wi, yi = w[idx], y[idx]
        W = wi.sum()
        p = float((wi * yi).sum() / W) if W > 0 else 0.0
        node = tree.add(leaf_p=p)
        if depth >= params.max_depth or p in (0.0, 1.0) or len(idx) < 2 * params.min_samples_leaf:
            return node
        feats = rng.choice(n_feat, size=n_try, replace=False)
        split = best_split(X[idx], yi, wi, feats.tolist(), params.min_samples_leaf)
        if split is None:
            return node
        _, f, thr = split
        mask = X[idx, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = grow(idx[mask], depth + 1)
        tree.right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.nonzero(w > 0)[0], 0)
    return tree


@dataclass
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    n_features: int
    metadata: dict = field(default_factory=dict)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] == 0:
            return np.zeros(0)
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def dumps(self) -> str:
        p = self.params
        meta = " ".join(f"{k}={v}" for k, v in sorted(self.metadata.items()))
        lines = [
            f"# canrev-forest v{FORMAT_VERSION}",
            f"# n_trees={len(self.trees)} max_depth={p.max_depth} min_samples_leaf={p.min_samples_leaf} "
            f"max_features={p.features_per_split(self.n_features)} bootstrap={int(p.bootstrap)} "
            f"seed={p.seed} n_features={self.n_features}",
        ]
        if meta:
            lines.append(f"# {meta}")
        lines.append("tree,node,feature,threshold,left,right,leaf_p")
        for ti, t in enumerate(self.trees):
            for k in range(len(t.feature)):
                lines.append(
                    f"{ti},{k},{t.feature[k]},{t.threshold[k]!r},{t.left[k]},{t.right[k]},{t.leaf_p[k]!r}"
                )
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    @classmethod
    def loads(cls, text: str) -> "ForestModel":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# canrev-forest v"):
            raise ValueError("not a canrev forest model file")
        version = int(lines[0].rsplit("v", 1)[1])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        hdr = dict(kv.split("=", 1) for kv in lines[1][2:].split())
        meta = {}
        trees: dict[int, Tree] = {}
        for ln in lines[2:]:
            if ln.startswith("#"):
                meta.update(kv.split("=", 1) for kv in ln[2:].split())
                continue
            if ln.startswith("tree,") or not ln.strip():
                continue
            ti, k, f, thr, l, r, p = ln.split(",")
            t = trees.setdefault(int(ti), Tree())
            if int(k) != len(t.feature):
                raise ValueError(f"model nodes out of order at tree {ti} node {k}")
            t.add(int(f), float(thr), int(l), int(r), float(p))
        params = ForestParams(
            n_trees=int(hdr["n_trees"]),
            max_depth=int(hdr["max_depth"]),
            min_samples_leaf=int(hdr["min_samples_leaf"]),
            max_features=int(hdr["max_features"]),
            bootstrap=bool(int(hdr["bootstrap"])),
            seed=int(hdr["seed"]),
        )
        return cls([trees[k] for k in sorted(trees)], params, int(hdr["n_features"]), meta)


def train_forest(X, y, sample_weight=None, params: ForestParams | None = None) -> ForestModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(float)
    params = params or ForestParams()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if len(np.unique(y)) < 2:
        raise ValueError("training set has a single class")
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    rng = np.random.default_rng(params.seed)
    trees = []
    n = len(y)
    for _ in range(params.n_trees):
        if params.bootstrap:
            counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
            wt = w * counts
        else:
            wt = w
        trees.append(fit_tree(X, y, wt, params, rng))
    return ForestModel(trees, params, X.shape[1])
