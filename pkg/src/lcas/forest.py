"""Bagged decision trees over fuzzified feature vectors.

Each tree fits a bootstrap resample of the training set with greedy Gini
splits over a random feature subset per node. Prediction is a majority vote
across trees; ties break by fixed priority LK > LCL > LCR, the least
action-implying class. Trees live in packed flat arrays so a whole forest
traverses in one kernel call at tick rate.

Training is deterministic: bootstrap draws and per-node feature subsets
come from counter-based streams keyed on the model seed, so the same data
and seed always produce the same serialized model.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from lcas import kernels, rng
from lcas.features import CLASS_NAMES

N_CLASSES = 3


@dataclass(frozen=True)
class ForestParams:
    tree_count: int = 100
    max_depth: int = 12
    min_leaf: int = 5
    mtry: int = 0  # 0 means ceil(sqrt(dim)) at fit time
    seed: int = 0

    def __post_init__(self):
        if self.tree_count < 1:
            raise ValueError("tree_count must be at least 1")
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be at least 1")

    def to_dict(self):
        return {"tree_count": self.tree_count, "max_depth": self.max_depth,
                "min_leaf": self.min_leaf, "mtry": self.mtry,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class LayoutMismatchError(ValueError):
    """Input vector does not match the layout the model was trained on."""


class ForestModel:
    """Packed forest: per-node arrays plus tree start offsets.

    feat[i] is the split feature of node i or -1 at a leaf; thr the split
    threshold (descend left when value <= thr); left/right are children
    relative to the owning tree's base; leaf holds the class at leaves.
    """

    def __init__(self, feat, thr, left, right, leaf, offsets, layout, params,
                 driver_id=""):
        self.feat = np.asarray(feat, dtype=np.int32)
        self.thr = np.asarray(thr, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.leaf = np.asarray(leaf, dtype=np.int32)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.layout = list(layout)
        self.params = params
        self.driver_id = driver_id

    @property
    def tree_count(self):
        return self.offsets.size - 1

    @property
    def width(self):
        return len(self.layout)

    def to_dict(self):
        return {
            "layout": self.layout,
            "params": self.params.to_dict(),
            "driver_id": self.driver_id,
            "offsets": [int(v) for v in self.offsets],
            "feat": [int(v) for v in self.feat],
            "thr": [float(v) for v in self.thr],
            "left": [int(v) for v in self.left],
            "right": [int(v) for v in self.right],
            "leaf": [int(v) for v in self.leaf],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["feat"], d["thr"], d["left"], d["right"], d["leaf"],
                   d["offsets"], d["layout"], ForestParams.from_dict(d["params"]),
                   d.get("driver_id", ""))


def train(x, y, params, layout=None, driver_id=""):
    """Fit a forest on (n, dim) vectors with integer class labels."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int32)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2-D array")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must match the sample count")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise ValueError("labels must be in 0..%d" % (N_CLASSES - 1))
    n, dim = x.shape
    if layout is None:
        layout = ["x%d" % j for j in range(dim)]
    if len(layout) != dim:
        raise LayoutMismatchError("layout names %d features, data has %d"
                                  % (len(layout), dim))
    if np.unique(y).size < 2:
        warnings.warn("training data has a single class; the forest will "
                      "predict it unconditionally")
    mtry = params.mtry if params.mtry > 0 else int(np.ceil(np.sqrt(dim)))
    mtry = min(mtry, dim)

    counters = np.arange(n, dtype=np.uint64)
    feat_parts, thr_parts, left_parts, right_parts, leaf_parts = [], [], [], [], []
    offsets = [0]
    for t in range(params.tree_count):
        sample = rng.randint_array(n, counters, params.seed,
                                   rng.STREAM_BOOTSTRAP, t)
        tree_seed = rng.u64(params.seed, rng.STREAM_TREE, t)
        feat, thr, left, right, leaf = kernels.tree_build(
            x, y, sample, N_CLASSES, params.max_depth, params.min_leaf,
            mtry, tree_seed)
        feat_parts.append(np.asarray(feat, dtype=np.int32))
        thr_parts.append(np.asarray(thr, dtype=np.float64))
        left_parts.append(np.asarray(left, dtype=np.int32))
        right_parts.append(np.asarray(right, dtype=np.int32))
        leaf_parts.append(np.asarray(leaf, dtype=np.int32))
        offsets.append(offsets[-1] + feat_parts[-1].size)

    return ForestModel(
        np.concatenate(feat_parts), np.concatenate(thr_parts),
        np.concatenate(left_parts), np.concatenate(right_parts),
        np.concatenate(leaf_parts), np.asarray(offsets, dtype=np.int64),
        layout, params, driver_id)


def predict_batch(model, x):
    """(classes, votes) for rows of fuzzified vectors."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.width:
        raise LayoutMismatchError(
            "expected %d-wide vectors, got shape %r" % (model.width, x.shape))
    votes = kernels.forest_votes(model.feat, model.thr, model.left,
                                 model.right, model.leaf, model.offsets,
                                 x, N_CLASSES)
    return np.argmax(votes, axis=1).astype(np.int64), votes


def predict(model, mv):
    """Single-vector prediction: (class, vote counts by class name)."""
    classes, votes = predict_batch(model, np.asarray(mv, dtype=np.float64)
                                   .reshape(1, -1))
    counts = {CLASS_NAMES[k]: int(votes[0, k]) for k in range(N_CLASSES)}
    return int(classes[0]), counts


class Smoother:
    """Sliding-window majority over raw predictions.

    Ties keep the previous smoothed class, which also damps oscillation
    right at a class boundary.
    """

    def __init__(self, window=10, initial=0):
        if window < 1:
            raise ValueError("window must be at least 1")
        self.window = window
        self._buf = []
        self._current = initial

    def push(self, cls):
        self._buf.append(int(cls))
        if len(self._buf) > self.window:
            self._buf.pop(0)
        counts = [0] * N_CLASSES
        for c in self._buf:
            counts[c] += 1
        best = max(counts)
        winners = [k for k, c in enumerate(counts) if c == best]
        if len(winners) == 1:
            self._current = winners[0]
        return self._current

    @property
    def current(self):
        return self._current
