"""Teacher representations: a built-in GAE and file ingestion of external ones."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import DimensionError, NonFiniteError, Optimizer, make_rng, relu
from .graph import Graph, sample_non_edges

TAGS = ("teacher", "student", "positional")


@dataclass
class TrainConfig:
    lr: float = 5e-3
    weight_decay: float = 5e-4
    epochs: int = 200
    seed: int = 0
    optimizer: str = "adam"


@dataclass
class EmbeddingSet:
    matrix: np.ndarray
    tag: str = "teacher"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise DimensionError("embedding matrix must be 2-D")
        if self.tag not in TAGS:
            raise ValueError(f"unknown provenance tag {self.tag!r}")
        bad = ~np.isfinite(self.matrix)
        if bad.any():
            raise NonFiniteError(f"non-finite embedding entry in row {int(np.argwhere(bad)[0, 0])}")

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def dim(self):
        return self.matrix.shape[1]


def save_embeddings(e: EmbeddingSet, path):
    with open(path, "w") as fh:
        fh.write(f"{e.n} {e.dim} {e.tag}\n")
        np.savetxt(fh, e.matrix, fmt="%.17g")


def load_embeddings(path, n_nodes=None, tag=None) -> EmbeddingSet:
    """Read the text embedding format: header ``n d tag`` then ``n`` rows.

    ``n_nodes`` (from the dataset) is checked against the row count.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: header must be 'n d tag'")
        n, d, file_tag = int(header[0]), int(header[1]), header[2]
        rows = []
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != d:
                raise ValueError(f"{path}:{lineno}: expected {d} values, got {len(parts)}")
            row = np.array(parts, dtype=np.float64)
            if not np.all(np.isfinite(row)):
                raise NonFiniteError(f"{path}: non-finite value in row {len(rows)} (line {lineno})")
            rows.append(row)
    if len(rows) != n:
        raise ValueError(f"{path}: header says {n} rows, found {len(rows)}")
    if n_nodes is not None and n != n_nodes:
        raise ValueError(f"{path}: {n} embedding rows but the graph has {n_nodes} nodes")
    return EmbeddingSet(np.vstack(rows).reshape(n, d), tag or file_tag)


def standardize(e: EmbeddingSet) -> EmbeddingSet:
    """Per-dimension zero mean / unit variance. Constant dimensions become zeros."""
    mean = e.matrix.mean(axis=0)
    std = e.matrix.std(axis=0)
    flat = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    safe = np.where(flat, 1.0, std)
    z = (e.matrix - mean) / safe
    z[:, flat] = 0.0
    return EmbeddingSet(z, e.tag, mean, std)


# --------------------------------------------------------------------------
# GCN encoder
# --------------------------------------------------------------------------

def normalized_adjacency(n_nodes, edges) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 as CSR."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([e[:, 0], e[:, 1], np.arange(n_nodes)])
    cols = np.concatenate([e[:, 1], e[:, 0], np.arange(n_nodes)])
    a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_nodes, n_nodes))
    a.sum_duplicates()
    a.data[:] = 1.0
    d = np.asarray(a.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(d)
    return sp.csr_matrix(sp.diags(dinv) @ a @ sp.diags(dinv))


class GcnEncoder:
    """Bias-free GCN, ReLU between layers: H = Â relu(Â relu(Â X W1) W2) W3."""

    def __init__(self, weights):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[0] != self.weights[i - 1].shape[1]:
                raise DimensionError(f"GCN layer {i} input dim mismatch")
        self._adj_key = None
        self._adj = None

    @classmethod
    def init(cls, in_dim, hidden=256, out_dim=64, n_layers=3, seed=0):
        rng = make_rng(seed, 0)
        dims = [in_dim] + [hidden] * (n_layers - 1) + [out_dim]
        ws = []
        for a, b in zip(dims[:-1], dims[1:]):
            lim = np.sqrt(6.0 / (a + b))
            ws.append(rng.uniform(-lim, lim, size=(a, b)))
        return cls(ws)

    @property
    def out_dim(self):
        return self.weights[-1].shape[1]

    def adjacency(self, g: Graph):
        key = (g.n_nodes, g.edges.shape[0], hash(g.edges.tobytes()))
        if key != self._adj_key:
            self._adj = normalized_adjacency(g.n_nodes, g.edges)
            self._adj_key = key
        return self._adj

    def forward(self, g: Graph, X=None):
        X = g.features if X is None else np.asarray(X, dtype=np.float64)
        if X.shape != (g.n_nodes, self.weights[0].shape[0]):
            raise DimensionError(
                f"features {X.shape} do not match ({g.n_nodes}, {self.weights[0].shape[0]})")
        A = self.adjacency(g)
        inputs, pre = [], []
        h = X
        for i, w in enumerate(self.weights):
            inputs.append(h)
            z = A @ (h @ w)
            pre.append(z)
            h = z if i == len(self.weights) - 1 else relu(z)
        return h, (A, inputs, pre)

    def backward(self, tape, upstream):
        """Return ``(weight_grads, feature_grad)`` for dL/dH = ``upstream``."""
        A, inputs, pre = tape
        g = upstream
        grads = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                g = g * (pre[i] > 0)
            ag = A.T @ g
            grads[i] = inputs[i].T @ ag
            g = ag @ self.weights[i].T
        return grads, g


def gcn_forward(enc: GcnEncoder, g: Graph, X=None) -> EmbeddingSet:
    return EmbeddingSet(enc.forward(g, X)[0], "teacher")


def _bce_with_logits(s, y):
    return np.maximum(s, 0) - s * y + np.log1p(np.exp(-np.abs(s)))


def gae_loss_and_grad(H, pos, neg):
    """Mean BCE of sigmoid(h_u . h_v) and its gradient wrt H."""
    pairs = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    s = np.einsum("ij,ij->i", H[pairs[:, 0]], H[pairs[:, 1]])
    loss = _bce_with_logits(s, y).mean()
    coef = (1.0 / (1.0 + np.exp(-s)) - y) / len(pairs)
    n = H.shape[0]
    C = sp.csr_matrix((np.concatenate([coef, coef]),
                       (np.concatenate([pairs[:, 0], pairs[:, 1]]),
                        np.concatenate([pairs[:, 1], pairs[:, 0]]))), shape=(n, n))
    return loss, C @ H


@dataclass
class GaeResult:
    encoder: GcnEncoder
    embeddings: EmbeddingSet
    losses: list = field(default_factory=list)


def train_gae(g: Graph, config: TrainConfig | None = None, hidden=256, out_dim=64,
              n_layers=3) -> GaeResult:
    """Graph autoencoder on ``g``'s edges with fresh uniform negatives each epoch.

    ``losses[0]`` is the loss at initialisation, ``losses[k]`` after epoch k.
    """
    config = config or TrainConfig()
    if g.n_edges == 0:
        raise ValueError("GAE training needs at least one edge")
    enc = GcnEncoder.init(g.n_features, hidden, out_dim, n_layers, seed=config.seed)
    opt = Optimizer(config.optimizer, lr=config.lr, weight_decay=config.weight_decay)
    rng = make_rng(config.seed, 1)
    forbidden = g.edge_set()
    losses = []
    for epoch in range(config.epochs + 1):
        neg = sample_non_edges(g.n_nodes, g.n_edges, forbidden, rng)
        H, tape = enc.forward(g)
        loss, dH = gae_loss_and_grad(H, g.edges, neg)
        if not np.isfinite(loss):
            raise NonFiniteError(
                f"GAE loss diverged at epoch {epoch} (lr={config.lr}); try a smaller learning rate")
        losses.append(float(loss))
        if epoch == config.epochs:
            break
        grads, _ = enc.backward(tape, dH)
        opt.step(enc.weights, grads, [f"W{i}" for i in range(len(grads))])
    H, _ = enc.forward(g)
    return GaeResult(enc, EmbeddingSet(H, "teacher"), losses)
