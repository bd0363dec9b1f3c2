"""Binary gradient boosted regression trees with logistic loss.

Second-order boosting: per instance gradient g = p - y and hessian
h = p(1-p); leaf weight is the L1-soft-thresholded, L2-damped optimum
-sign(G) * max(|G| - alpha, 0) / (H + lambda); a split is accepted only
when 0.5*[G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma
is positive. Split search is exact greedy over sorted feature values (the
corpora here are small enough that histogram approximations buy nothing and
would break the brute-force split oracle used in tests).

Node-level gradient/hessian totals use math.fsum, so training is bit-stable
under any permutation of the training rows (when feature values are unique).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDataWarning,
    DimensionMismatchError,
    FingerprintMismatchError,
    InvalidParamsError,
    ModelFormatError,
    NotRecordedError,
)

_FORMAT_TAG = "gbt-v1"


@dataclass(frozen=True)
class GBTParams:
    learning_rate: float = 0.3
    n_rounds: int = 100
    max_depth: int = 3
    min_loss_reduction: float = 0.0
    l2_weight: float = 1.0
    l1_weight: float = 0.0
    min_child_weight: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidParamsError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.n_rounds < 0:
            raise InvalidParamsError(f"n_rounds must be >= 0, got {self.n_rounds}")
        if self.max_depth < 1:
            raise InvalidParamsError(f"max_depth must be >= 1, got {self.max_depth}")
        for name in ("min_loss_reduction", "l2_weight", "l1_weight", "min_child_weight"):
            if getattr(self, name) < 0.0:
                raise InvalidParamsError(f"{name} must be >= 0, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "n_rounds": self.n_rounds,
            "max_depth": self.max_depth,
            "min_loss_reduction": self.min_loss_reduction,
            "l2_weight": self.l2_weight,
            "l1_weight": self.l1_weight,
            "min_child_weight": self.min_child_weight,
            "seed": self.seed,
        }


@dataclass
class RegressionTree:
    """Flat node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray

    def leaf_ids(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.intp)
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                return node
            rows = np.flatnonzero(internal)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] < self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])

    def leaf_weights(self, X: np.ndarray) -> np.ndarray:
        return self.weight[self.leaf_ids(X)]

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "weight": self.weight.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.intp),
            threshold=np.asarray(data["threshold"], dtype=float),
            left=np.asarray(data["left"], dtype=np.intp),
            right=np.asarray(data["right"], dtype=np.intp),
            weight=np.asarray(data["weight"], dtype=float),
        )


@dataclass
class GBTModel:
    trees: list[RegressionTree]
    params: GBTParams
    n_features: int
    base_score: float = 0.0
    loss_curve: list[float] | None = None
    degenerate: bool = False


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _mean_log_loss(y: np.ndarray, margin: np.ndarray) -> float:
    # log(1 + e^F) - y*F, computed stably
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def _leaf_weight(G: float, H: float, l1: float, l2: float) -> float:
    numer = max(abs(G) - l1, 0.0)
    if numer == 0.0 or H + l2 <= 0.0:
        return 0.0
    return -math.copysign(numer, G) / (H + l2)


class _TreeBuilder:
    """Grows one tree; split search vectorized across features."""

    def __init__(self, X: np.ndarray, order: np.ndarray, g: np.ndarray, h: np.ndarray,
                 params: GBTParams):
        self.X = X
        self.order = order  # (n, d) row ids sorted per feature, stable
        self.g = g
        self.h = h
        self.params = params
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.weight: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.weight.append(0.0)
        return len(self.feature) - 1

    def build(self) -> RegressionTree:
        root = self._new_node()
        mask = np.ones(len(self.X), dtype=bool)
        self._grow(root, mask, depth=0)
        return RegressionTree(
            feature=np.asarray(self.feature, dtype=np.intp),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.intp),
            right=np.asarray(self.right, dtype=np.intp),
            weight=np.asarray(self.weight, dtype=float),
        )

    def _grow(self, node: int, mask: np.ndarray, depth: int) -> None:
        G = math.fsum(self.g[mask])
        H = math.fsum(self.h[mask])
        n_node = int(mask.sum())
        if depth >= self.params.max_depth or n_node < 2:
            self.weight[node] = _leaf_weight(G, H, self.params.l1_weight, self.params.l2_weight)
            return
        found = self._best_split(mask, G, H)
        if found is None:
            self.weight[node] = _leaf_weight(G, H, self.params.l1_weight, self.params.l2_weight)
            return
        feat, thr = found
        self.feature[node] = feat
        self.threshold[node] = thr
        left_mask = mask & (self.X[:, feat] < thr)
        right_mask = mask & ~(self.X[:, feat] < thr)
        left_id = self._new_node()
        right_id = self._new_node()
        self.left[node] = left_id
        self.right[node] = right_id
        self._grow(left_id, left_mask, depth + 1)
        self._grow(right_id, right_mask, depth + 1)

    def _best_split(self, mask: np.ndarray, G: float, H: float) -> tuple[int, float] | None:
        l2 = self.params.l2_weight
        gamma = self.params.min_loss_reduction
        mcw = self.params.min_child_weight
        n_node = int(mask.sum())
        d = self.X.shape[1]
        # per-feature sorted row ids restricted to this node
        valid = mask[self.order]                    # (n, d)
        rows = self.order.T[valid.T].reshape(d, n_node)
        xs = self.X[rows, np.arange(d)[:, None]]    # (d, n_node) sorted values
        gl = np.cumsum(self.g[rows], axis=1)[:, :-1]
        hl = np.cumsum(self.h[rows], axis=1)[:, :-1]
        gr = G - gl
        hr = H - hl
        splittable = xs[:, :-1] < xs[:, 1:]
        if mcw > 0.0:
            splittable &= (hl >= mcw) & (hr >= mcw)
        parent_term = G * G / (H + l2) if H + l2 > 0 else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent_term) - gamma
        gain[~splittable] = -np.inf
        # l2 = 0 with saturated probabilities can zero a child hessian sum
        np.nan_to_num(gain, copy=False, nan=-np.inf, posinf=-np.inf)
        # within a feature, argmax picks the first (= lowest threshold);
        # across features, argmax picks the lowest feature index
        per_feature_pos = np.argmax(gain, axis=1)
        per_feature_gain = gain[np.arange(d), per_feature_pos]
        feat = int(np.argmax(per_feature_gain))
        best_gain = float(per_feature_gain[feat])
        if not best_gain > 0.0:
            return None
        pos = int(per_feature_pos[feat])
        thr = (float(xs[feat, pos]) + float(xs[feat, pos + 1])) / 2.0
        return feat, thr


def train_binary(
    features: np.ndarray,
    targets: np.ndarray,
    params: GBTParams,
    record_loss: bool = True,
) -> GBTModel:
    """Fit the boosted ensemble; deterministic given params.

    Single-class targets with n_rounds > 0 cannot support boosting: a
    base-rate-only model (smoothed log-odds intercept, no trees) is returned
    with a DegenerateDataWarning instead of failing.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ValueError("targets must be a vector matching the feature rows")
    if not np.isfinite(X).all():
        raise ValueError("missing or non-finite feature values are not supported")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("targets must be binary 0/1")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")

    if params.n_rounds > 0 and (y.min() == y.max()):
        warnings.warn(
            "single-class targets: returning a base-rate-only model",
            DegenerateDataWarning,
            stacklevel=2,
        )
        n = len(y)
        rate = (y.sum() + 0.5) / (n + 1.0)
        return GBTModel(
            trees=[],
            params=params,
            n_features=X.shape[1],
            base_score=math.log(rate / (1.0 - rate)),
            loss_curve=[] if record_loss else None,
            degenerate=True,
        )

    order = np.argsort(X, axis=0, kind="stable")
    margin = np.full(X.shape[0], 0.0)
    trees: list[RegressionTree] = []
    curve: list[float] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree = _TreeBuilder(X, order, g, h, params).build()
        trees.append(tree)
        margin = margin + params.learning_rate * tree.leaf_weights(X)
        if record_loss:
            curve.append(_mean_log_loss(y, margin))
    return GBTModel(
        trees=trees,
        params=params,
        n_features=X.shape[1],
        base_score=0.0,
        loss_curve=curve if record_loss else None,
    )


def predict_margin(model: GBTModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"expected (n, {model.n_features}) features, got {X.shape}"
        )
    margin = np.full(len(X), model.base_score)
    for tree in model.trees:
        margin += model.params.learning_rate * tree.leaf_weights(X)
    return margin


def predict_proba(model: GBTModel, x: np.ndarray) -> float:
    """Probability for a single feature vector; strictly inside (0, 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise DimensionMismatchError(
            f"expected a vector of length {model.n_features}, got shape {x.shape}"
        )
    p = float(_sigmoid(predict_margin(model, x[None, :]))[0])
    eps = 1e-15
    return min(max(p, eps), 1.0 - eps)


def predict_proba_batch(model: GBTModel, X: np.ndarray) -> np.ndarray:
    p = _sigmoid(predict_margin(model, X))
    eps = 1e-15
    return np.clip(p, eps, 1.0 - eps)


def training_loss_curve(model: GBTModel) -> list[float]:
    """Per-round mean logistic loss on the training set."""
    if model.loss_curve is None:
        raise NotRecordedError("model was trained with record_loss=False")
    return list(model.loss_curve)


def model_to_dict(model: GBTModel, embedding_fingerprint: str | None = None) -> dict:
    return {
        "format": _FORMAT_TAG,
        "params": model.params.to_dict(),
        "n_features": model.n_features,
        "base_score": model.base_score,
        "degenerate": model.degenerate,
        "embedding_fingerprint": embedding_fingerprint,
        "trees": [tree.to_dict() for tree in model.trees],
    }


def model_from_dict(data: dict, expected_fingerprint: str | None = None) -> GBTModel:
    if data.get("format") != _FORMAT_TAG:
        raise ModelFormatError(f"unknown model format {data.get('format')!r}")
    stored = data.get("embedding_fingerprint")
    if expected_fingerprint is not None and stored is not None and stored != expected_fingerprint:
        raise FingerprintMismatchError(
            f"model was trained with embedding {stored}, expected {expected_fingerprint}"
        )
    return GBTModel(
        trees=[RegressionTree.from_dict(t) for t in data["trees"]],
        params=GBTParams(**data["params"]),
        n_features=int(data["n_features"]),
        base_score=float(data["base_score"]),
        loss_curve=None,
        degenerate=bool(data.get("degenerate", False)),
    )


def save_model(model: GBTModel, path: str | Path, embedding_fingerprint: str | None = None) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model, embedding_fingerprint), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path, expected_fingerprint: str | None = None) -> GBTModel:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(data, expected_fingerprint)
