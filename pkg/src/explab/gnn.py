"""A small message-passing graph classifier in numpy.

Layer ``l`` computes ``relu(H W_self^T + (A H) W_nbr^T + b)`` with sum
aggregation over neighbors; the graph embedding is the mean over nodes and a
linear head produces the logits. Gradients are derived by hand.

Graphs are processed as one block-diagonal batch. Sparse products run over
CSR rows in node-index order, so results are bit-reproducible.
"""

from __future__ import annotations

import csv
import functools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ShapeMismatch
from .graph import Explanation, Graph, LabeledGraph


class GnnParams:
    """Named weight arrays of the classifier."""

    def __init__(self, arrays: dict[str, np.ndarray], layers: int):
        self.arrays = arrays
        self.layers = layers

    @property
    def feat_dim(self) -> int:
        return self.arrays["W_self.0"].shape[1]

    @property
    def num_classes(self) -> int:
        return self.arrays["W_out"].shape[0]

    def __getitem__(self, name):
        return self.arrays[name]

    def names(self) -> list[str]:
        return list(self.arrays)

    def copy(self) -> "GnnParams":
        return GnnParams({k: v.copy() for k, v in self.arrays.items()}, self.layers)

    def zeros_like(self) -> "GnnParams":
        return GnnParams({k: np.zeros_like(v) for k, v in self.arrays.items()}, self.layers)

    def to_json_dict(self) -> dict:
        return {"layers": self.layers,
                "arrays": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in self.arrays.items()}}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GnnParams":
        arrays = {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in d["arrays"].items()}
        return cls(arrays, int(d["layers"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)

    def array_equal(self, other: "GnnParams") -> bool:
        return self.names() == other.names() and all(
            np.array_equal(self[k], other[k]) for k in self.names())


def init_params(feat_dim: int, hidden: int = 20, layers: int = 3, num_classes: int = 2, rng=None) -> GnnParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(rng)

    def glorot(rows, cols):
        lim = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-lim, lim, size=(rows, cols))

    arrays = {}
    prev = feat_dim
    for l in range(layers):
        arrays[f"W_self.{l}"] = glorot(hidden, prev)
        arrays[f"W_nbr.{l}"] = glorot(hidden, prev)
        arrays[f"b.{l}"] = np.zeros(hidden)
        prev = hidden
    arrays["W_out"] = glorot(num_classes, prev)
    arrays["b_out"] = np.zeros(num_classes)
    return GnnParams(arrays, layers)


@dataclass
class Batch:
    adj: sp.csr_matrix      # block-diagonal adjacency, N x N
    feats: np.ndarray       # N x feat_dim
    pool: sp.csr_matrix     # G x N mean-readout matrix
    labels: np.ndarray      # G
    weights: np.ndarray     # G, per-graph loss weights


def make_batch(graphs: Sequence[Graph], labels=None, weights=None) -> Batch:
    sizes = [g.node_count for g in graphs]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    rows, cols = [], []
    for g, off in zip(graphs, offsets):
        for u, v in g.sorted_edges():
            rows += [u + off, v + off]
            cols += [v + off, u + off]
    N = int(offsets[-1])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(N, N))
    adj.sort_indices()
    feats = np.vstack([g.features for g in graphs]) if graphs else np.zeros((0, 1))
    prow, pcol, pval = [], [], []
    for i, (g, off) in enumerate(zip(graphs, offsets)):
        n = max(g.node_count, 1)
        prow += [i] * g.node_count
        pcol += list(range(off, off + g.node_count))
        pval += [1.0 / n] * g.node_count
    pool = sp.csr_matrix((pval, (prow, pcol)), shape=(len(graphs), N))
    labels = np.zeros(len(graphs), dtype=int) if labels is None else np.asarray(labels, dtype=int)
    weights = np.ones(len(graphs)) if weights is None else np.asarray(weights, dtype=float)
    return Batch(adj, feats, pool, labels, weights)


def _forward(params: GnnParams, batch: Batch):
    if batch.feats.shape[1] != params.feat_dim:
        raise ShapeMismatch(f"graph feat_dim {batch.feats.shape[1]} != model {params.feat_dim}")
    H = batch.feats
    cache = []
    for l in range(params.layers):
        M = batch.adj @ H
        Z = H @ params[f"W_self.{l}"].T + M @ params[f"W_nbr.{l}"].T + params[f"b.{l}"]
        cache.append((H, M, Z))
        H = np.maximum(Z, 0.0)
    R = batch.pool @ H
    logits = R @ params["W_out"].T + params["b_out"]
    return logits, R, cache


def forward(params: GnnParams, g: Graph) -> np.ndarray:
    return _forward(params, make_batch([g]))[0][0]


def forward_batch(params: GnnParams, graphs: Sequence[Graph]) -> np.ndarray:
    return _forward(params, make_batch(graphs))[0]


def _log_softmax(logits):
    shift = logits - logits.max(axis=1, keepdims=True)
    return shift - np.log(np.exp(shift).sum(axis=1, keepdims=True))


def batch_loss_and_grad(params: GnnParams, batch: Batch) -> tuple[float, GnnParams]:
    """Weighted sum of per-graph cross-entropies and its gradient."""
    logits, R, cache = _forward(params, batch)
    logp = _log_softmax(logits)
    G = len(batch.labels)
    ce = -logp[np.arange(G), batch.labels]
    loss = float(np.dot(batch.weights, ce))

    grad = params.zeros_like()
    dlogits = np.exp(logp)
    dlogits[np.arange(G), batch.labels] -= 1.0
    dlogits *= batch.weights[:, None]
    grad.arrays["W_out"] = dlogits.T @ R
    grad.arrays["b_out"] = dlogits.sum(axis=0)
    dH = batch.pool.T @ (dlogits @ params["W_out"])
    for l in reversed(range(params.layers)):
        H_prev, M, Z = cache[l]
        dZ = dH * (Z > 0)
        grad.arrays[f"W_self.{l}"] = dZ.T @ H_prev
        grad.arrays[f"W_nbr.{l}"] = dZ.T @ M
        grad.arrays[f"b.{l}"] = dZ.sum(axis=0)
        if l > 0:
            # A is symmetric, so A^T dZ = A dZ
            dH = dZ @ params[f"W_self.{l}"] + batch.adj @ (dZ @ params[f"W_nbr.{l}"])
    return loss, grad


def loss_weights(flags: Sequence[bool], lam: float) -> np.ndarray:
    """Mean CE over originals plus ``lam`` times mean CE over augmented graphs."""
    flags = np.asarray(flags, dtype=bool)
    w = np.zeros(len(flags))
    n_aug, n_orig = int(flags.sum()), int((~flags).sum())
    if n_orig:
        w[~flags] = 1.0 / n_orig
    if n_aug:
        w[flags] = lam / n_aug
    return w


def loss_and_grad(params: GnnParams, batch: Sequence[tuple[LabeledGraph, bool]], lam: float):
    if not batch:
        raise ValueError("batch must be nonempty")
    weights = loss_weights([aug for _, aug in batch], lam)
    # zero-weight graphs contribute nothing; leaving them out keeps lam = 0 bit-exact
    keep = [i for i in range(len(batch)) if weights[i] != 0.0] or list(range(len(batch)))
    graphs = [batch[i][0].graph for i in keep]
    labels = [batch[i][0].label for i in keep]
    return batch_loss_and_grad(params, make_batch(graphs, labels, weights[keep]))


class Adam:
    def __init__(self, params: GnnParams, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: GnnParams, grad: GnnParams) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k in params.names():
            g = grad[k]
            m = self.m.arrays[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            v = self.v.arrays[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params.arrays[k] = params[k] - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainConfig:
    lam: float = 0.5
    e_w: int = 100
    e_s: int = 100
    M: int = 2
    lr: float = 1e-3
    seed: int = 0
    hidden: int = 20
    layers: int = 3

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.e_w < 0 or self.e_s < 0 or self.M < 0:
            raise ValueError("epoch counts and M must be nonnegative")
        if self.lr <= 0 or self.hidden < 1 or self.layers < 1:
            raise ValueError("lr, hidden and layers must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown train keys {sorted(unknown)}")
        return cls(**d)


def predict(params: GnnParams, graphs: Sequence[Graph]) -> np.ndarray:
    return np.argmax(forward_batch(params, graphs), axis=1)


def accuracy(params: GnnParams, test: Sequence[LabeledGraph]) -> float:
    if not test:
        raise ValueError("test set must be nonempty")
    pred = predict(params, [lg.graph for lg in test])
    return float(np.mean(pred == np.array([lg.label for lg in test])))


Augmenter = Callable[[LabeledGraph, Explanation, np.random.Generator], LabeledGraph]


def _run_phase(params, batch, epochs, lr, log, phase, train_lgs, test):
    opt = Adam(params, lr=lr)
    train_batch = make_batch([lg.graph for lg in train_lgs]) if log is not None else None
    for epoch in range(epochs):
        loss, grad = batch_loss_and_grad(params, batch)
        if log is not None:
            row = {"phase": phase, "epoch": epoch, "loss": loss,
                   "train_acc": float(np.mean(np.argmax(_forward(params, train_batch)[0], axis=1)
                                              == np.array([lg.label for lg in train_lgs])))}
            row["test_acc"] = accuracy(params, test) if test else float("nan")
            log.append(row)
        opt.step(params, grad)
    return params


def train(data: Sequence[tuple[LabeledGraph, Explanation]], cfg: TrainConfig,
          augmenter: Optional[Augmenter] = None, test: Sequence[LabeledGraph] = (),
          log: Optional[list] = None) -> GnnParams:
    """Two-phase explanation-assisted training.

    Phase one fits cross-entropy on the originals for ``e_w`` epochs. Then
    ``M`` augmented copies of every training graph are drawn, the model is
    re-initialized (to the same initial weights) and phase two minimizes the
    combined loss for ``e_s`` epochs. With ``e_s == 0`` the phase-one model
    is returned.
    """
    if not data:
        raise ValueError("training data must be nonempty")
    originals = [lg for lg, _ in data]
    feat_dim = originals[0].graph.feat_dim
    num_classes = max(2, 1 + max(lg.label for lg in originals))
    init_seed, aug_seed = np.random.SeedSequence(cfg.seed).spawn(2)

    def fresh():
        return init_params(feat_dim, cfg.hidden, cfg.layers, num_classes, np.random.default_rng(init_seed))

    base = make_batch([lg.graph for lg in originals], [lg.label for lg in originals],
                      loss_weights([False] * len(originals), 0.0))
    params = _run_phase(fresh(), base, cfg.e_w, cfg.lr, log, "pretrain", originals, test)
    if cfg.e_s == 0:
        return params

    rng = np.random.default_rng(aug_seed)
    augmented = []
    if augmenter is not None and cfg.M > 0 and cfg.lam > 0:
        for lg, expl in data:
            for _ in range(cfg.M):
                augmented.append(augmenter(lg, expl, rng))
    batch_items = [(lg, False) for lg in originals] + [(lg, True) for lg in augmented]
    full = make_batch([lg.graph for lg, _ in batch_items], [lg.label for lg, _ in batch_items],
                      loss_weights([a for _, a in batch_items], cfg.lam))
    return _run_phase(fresh(), full, cfg.e_s, cfg.lr, log, "train", originals, test)


def write_history_csv(log: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["phase", "epoch", "loss", "train_acc", "test_acc"])
        w.writeheader()
        for row in log:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
