"""Leaf-wise gradient-boosted decision trees with a second-order objective.

Binary logistic loss.  Each boosting round fits one regression tree on the
gradient/hessian statistics (g = p - y, h = p(1-p)); trees grow leaf-wise,
always splitting the candidate leaf with the highest gain

    gain = 1/2 * [ G_L^2/(H_L+sigma) + G_R^2/(H_R+sigma)
                   - (G_L+G_R)^2/(H_L+H_R+sigma) ] - delta

until no split has positive gain, the leaf budget is reached, or a child
would fall below ``min_samples_leaf``.  Leaf weight is -G/(H+sigma); the
prediction is sigmoid(base_score + learning_rate * sum of tree outputs).

Everything is exact greedy over sorted unique feature values, with midpoint
thresholds and deterministic tie-breaking (lowest feature index, then lowest
threshold), so a fixed configuration always yields a bit-identical model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateLabels, EmptyTrainingSet, FeatureDimError


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 5
    leaf_penalty: float = 0.0  # per-leaf cost subtracted from every split gain
    l2_weight: float = 1.0     # L2 penalty on leaf weights
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.leaf_penalty < 0 or self.l2_weight < 0:
            raise ValueError("penalty parameters must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "learning_rate": self.learning_rate,
            "max_leaves": self.max_leaves,
            "min_samples_leaf": self.min_samples_leaf,
            "leaf_penalty": self.leaf_penalty,
            "l2_weight": self.l2_weight,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        return cls(
            n_trees=int(payload["n_trees"]),
            learning_rate=float(payload["learning_rate"]),
            max_leaves=int(payload["max_leaves"]),
            min_samples_leaf=int(payload["min_samples_leaf"]),
            leaf_penalty=float(payload["leaf_penalty"]),
            l2_weight=float(payload["l2_weight"]),
            seed=int(payload["seed"]),
        )


def split_gain(g_left: float, h_left: float, g_right: float, h_right: float,
               l2_weight: float, leaf_penalty: float) -> float:
    """Gain of one candidate split; exposed for direct unit testing."""
    def score(g: float, h: float) -> float:
        return g * g / (h + l2_weight) if h + l2_weight > 0 else 0.0
    parent = score(g_left + g_right, h_left + h_right)
    return 0.5 * (score(g_left, h_left) + score(g_right, h_right) - parent) - leaf_penalty


@dataclass
class DecisionTree:
    """Flat array representation; node 0 is the root, feature -1 marks a leaf."""

    feature: np.ndarray    # int32; -1 for leaves
    threshold: np.ndarray  # float64; NaN for leaves
    left: np.ndarray       # int32 child ids; -1 for leaves
    right: np.ndarray
    value: np.ndarray      # float64 leaf weights; 0 for internal nodes

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [None if np.isnan(t) else t for t in self.threshold.tolist()],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DecisionTree":
        threshold = np.asarray(
            [np.nan if t is None else t for t in payload["threshold"]], dtype=np.float64
        )
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int32),
            threshold=threshold,
            left=np.asarray(payload["left"], dtype=np.int32),
            right=np.asarray(payload["right"], dtype=np.int32),
            value=np.asarray(payload["value"], dtype=np.float64),
        )


class _TreeBuilder:
    """Grows one tree leaf-wise on fixed g/h statistics."""

    def __init__(self, X: np.ndarray, g: np.ndarray, h: np.ndarray,
                 max_leaves: int, min_samples_leaf: int, l2_weight: float, leaf_penalty: float):
        self.X = X
        self.g = g
        self.h = h
        self.max_leaves = max_leaves
        self.min_samples_leaf = min_samples_leaf
        self.l2_weight = l2_weight
        self.leaf_penalty = leaf_penalty

        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        # candidate split per current leaf: node id -> (gain, feat, thr, left_rows, right_rows)
        self.candidates: dict[int, tuple[float, int, float, np.ndarray, np.ndarray]] = {}

    def _new_node(self, rows: np.ndarray) -> int:
        node = len(self.feature)
        g_sum = float(self.g[rows].sum())
        h_sum = float(self.h[rows].sum())
        denom = h_sum + self.l2_weight
        self.feature.append(-1)
        self.threshold.append(float("nan"))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(-g_sum / denom if denom > 0.0 else 0.0)  # guard infinite leaf weights
        best = self._best_split(rows)
        if best is not None:
            self.candidates[node] = best
        return node

    def _best_split(self, rows: np.ndarray) -> tuple[float, int, float, np.ndarray, np.ndarray] | None:
        m = len(rows)
        msl = self.min_samples_leaf
        if m < 2 * msl:
            return None
        Xs = self.X[rows]                                  # (m, d)
        order = np.argsort(Xs, axis=0, kind="stable")
        vals = np.take_along_axis(Xs, order, axis=0)
        gs = np.take_along_axis(np.broadcast_to(self.g[rows][:, None], Xs.shape), order, axis=0)
        hs = np.take_along_axis(np.broadcast_to(self.h[rows][:, None], Xs.shape), order, axis=0)
        GL = np.cumsum(gs, axis=0)[:-1]                    # (m-1, d): left stats at each boundary
        HL = np.cumsum(hs, axis=0)[:-1]
        G = float(self.g[rows].sum())
        H = float(self.h[rows].sum())
        GR = G - GL
        HR = H - HL

        sigma = self.l2_weight
        with np.errstate(divide="ignore", invalid="ignore"):
            parent_score = G * G / (H + sigma) if H + sigma > 0 else 0.0
            gain = 0.5 * (GL**2 / (HL + sigma) + GR**2 / (HR + sigma) - parent_score) - self.leaf_penalty

        boundary_ok = vals[1:] != vals[:-1]                # only between distinct values
        k = np.arange(1, m)[:, None]                       # left child size at each boundary
        size_ok = (k >= msl) & (m - k >= msl)
        gain = np.where(boundary_ok & size_ok & np.isfinite(gain), gain, -np.inf)

        best_per_feature = gain.max(axis=0)
        feat = int(np.argmax(best_per_feature))            # first max: lowest feature index
        best_gain = float(best_per_feature[feat])
        if not best_gain > 0.0:
            return None
        pos = int(np.argmax(gain[:, feat]))                # first max: lowest threshold
        thr = float((vals[pos, feat] + vals[pos + 1, feat]) / 2.0)
        left_rows = rows[order[: pos + 1, feat]]
        right_rows = rows[order[pos + 1 :, feat]]
        return best_gain, feat, thr, left_rows, right_rows

    def build(self, rows: np.ndarray) -> DecisionTree:
        self._new_node(rows)
        n_leaves = 1
        while n_leaves < self.max_leaves and self.candidates:
            # highest gain; ties resolved toward the earliest-created leaf
            node = min(self.candidates, key=lambda nid: (-self.candidates[nid][0], nid))
            gain, feat, thr, left_rows, right_rows = self.candidates.pop(node)
            self.feature[node] = feat
            self.threshold[node] = thr
            self.value[node] = 0.0
            self.left[node] = self._new_node(left_rows)
            self.right[node] = self._new_node(right_rows)
            n_leaves += 1
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
        )


def build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, *, max_leaves: int,
               min_samples_leaf: int = 1, l2_weight: float = 0.0, leaf_penalty: float = 0.0) -> DecisionTree:
    """Grow a single tree on explicit gradient statistics.

    ``max_leaves`` may be 1 here (a bare stump root), which the ensemble-level
    config forbids but is useful for testing leaf-weight arithmetic.
    """
    builder = _TreeBuilder(
        np.asarray(X, dtype=np.float64), np.asarray(g, dtype=np.float64), np.asarray(h, dtype=np.float64),
        max_leaves=max(1, max_leaves), min_samples_leaf=min_samples_leaf,
        l2_weight=l2_weight, leaf_penalty=leaf_penalty,
    )
    return builder.build(np.arange(len(X)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(y: np.ndarray, scores: np.ndarray) -> float:
    """Mean unregularized logistic loss at raw (pre-sigmoid) scores."""
    return float(np.mean(np.logaddexp(0.0, scores) - y * scores))


@dataclass
class Ensemble:
    trees: list[DecisionTree]
    base_score: float
    config: TrainConfig
    n_features: int
    train_losses: list[float] = field(default_factory=list)  # loss after each round

    @property
    def total_leaves(self) -> int:
        return sum(t.n_leaves for t in self.trees)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise FeatureDimError(f"expected {self.n_features} features, got shape {X.shape}")
        scores = np.full(len(X), self.base_score, dtype=np.float64)
        for tree in self.trees:
            scores += self.config.learning_rate * tree.predict(X)
        return scores

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.raw_scores(X))

    def to_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "n_features": self.n_features,
            "config": self.config.to_dict(),
            "train_losses": self.train_losses,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Ensemble":
        return cls(
            trees=[DecisionTree.from_dict(t) for t in payload["trees"]],
            base_score=float(payload["base_score"]),
            config=TrainConfig.from_dict(payload["config"]),
            n_features=int(payload["n_features"]),
            train_losses=[float(x) for x in payload.get("train_losses", [])],
        )


def train(X: np.ndarray, y: Sequence[int] | np.ndarray, config: TrainConfig = TrainConfig()) -> Ensemble:
    """Fit a boosted ensemble on dense features and binary labels."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d feature matrix")
    if len(X) != len(y):
        raise ValueError("X and y must have equal length")
    if len(X) < 2:
        raise EmptyTrainingSet(f"need at least 2 samples, got {len(X)}")
    mean = float(y.mean())
    if mean <= 0.0 or mean >= 1.0:
        raise DegenerateLabels("training labels must contain both classes")

    base_score = float(np.log(mean / (1.0 - mean)))
    scores = np.full(len(X), base_score, dtype=np.float64)
    model = Ensemble(trees=[], base_score=base_score, config=config, n_features=X.shape[1])

    rows = np.arange(len(X))
    for _ in range(config.n_trees):
        p = _sigmoid(scores)
        g = p - y
        h = p * (1.0 - p)
        builder = _TreeBuilder(
            X, g, h,
            max_leaves=config.max_leaves, min_samples_leaf=config.min_samples_leaf,
            l2_weight=config.l2_weight, leaf_penalty=config.leaf_penalty,
        )
        tree = builder.build(rows)
        model.trees.append(tree)
        scores += config.learning_rate * tree.predict(X)
        model.train_losses.append(logistic_loss(y, scores))
    return model


def predict(model: Ensemble, x: np.ndarray) -> float:
    """Probability for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise FeatureDimError("predict expects a single 1-d feature vector")
    return float(model.predict_proba(x[None, :])[0])
