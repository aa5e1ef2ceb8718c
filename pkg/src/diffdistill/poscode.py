"""DeepWalk positional features: uniform random walks + skip-gram with negative sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import make_rng
from .graph import Graph


@dataclass
class PositionalFeatures:
    matrix: np.ndarray
    walks_per_node: int = 3
    walk_length: int = 20
    window: int = 5
    losses: list = field(default_factory=list)   # mean batch loss, per epoch

    @property
    def dim(self):
        return self.matrix.shape[1]


def random_walks(g: Graph, walks_per_node=3, length=20, seed=0):
    """``walks_per_node`` rounds of one walk from every node, uniform transitions.

    Walks from isolated nodes stop at length 1.
    """
    if length < 1:
        raise ValueError("walk length must be >= 1")
    rng = make_rng(seed, 0)
    deg = g.degrees()
    walks = []
    for _ in range(walks_per_node):
        cur = np.arange(g.n_nodes)
        steps = [cur]
        alive = deg[cur] > 0
        for _ in range(length - 1):
            r = rng.random(g.n_nodes)
            nxt = cur.copy()
            c = cur[alive]
            nxt[alive] = g.indices[g.indptr[c] + (r[alive] * deg[c]).astype(np.int64)]
            cur = nxt
            steps.append(cur)
        block = np.stack(steps, axis=1)
        for v in range(g.n_nodes):
            walks.append(block[v] if alive[v] else block[v, :1])
    return walks


def _context_pairs(walks, window):
    centers, contexts = [], []
    full = [w for w in walks if len(w) > 1]
    by_len = {}
    for w in full:
        by_len.setdefault(len(w), []).append(w)
    for L, ws in by_len.items():
        W = np.stack(ws)
        for off in range(1, window + 1):
            if off >= L:
                break
            a, b = W[:, :-off].ravel(), W[:, off:].ravel()
            centers.extend((a, b))
            contexts.extend((b, a))
    if not centers:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def _scatter_add(target, rows, values):
    # sparse one-hot transpose product: much faster than np.add.at for row sums
    n = len(rows)
    sel = sp.csr_matrix((np.ones(n), (rows, np.arange(n))), shape=(target.shape[0], n))
    touched = np.unique(rows)
    target[touched] += (sel[touched] @ values)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_skipgram(walks, n_nodes, dim=64, window=5, negatives=5, epochs=5, lr=0.025,
                   seed=0, batch_size=2048) -> PositionalFeatures:
    """Skip-gram with negative sampling over node co-occurrences in ``walks``.

    Mini-batched SGD; the learning rate decays linearly to ``lr * 1e-4`` over
    all batches. Negatives follow the unigram distribution raised to 0.75.
    Batches hold at most ``n_nodes`` pairs: updates of a node that repeats
    within a batch are summed, and on small graphs large batches diverge.
    """
    rng = make_rng(seed, 0)
    emb = (rng.random((n_nodes, dim)) - 0.5) / dim
    ctx = np.zeros((n_nodes, dim))
    centers, contexts = _context_pairs(walks, window)
    if len(centers) == 0:
        raise ValueError("skip-gram needs at least one walk of length >= 2")
    counts = np.bincount(np.concatenate(walks), minlength=n_nodes).astype(np.float64)
    noise = counts ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    n_pairs = len(centers)
    batch_size = max(1, min(batch_size, n_nodes))
    n_batches = -(-n_pairs // batch_size)
    total = max(1, epochs * n_batches)
    losses = []
    step = 0
    for _ in range(epochs):
        perm = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for bi in range(n_batches):
            idx = perm[bi * batch_size:(bi + 1) * batch_size]
            c, o = centers[idx], contexts[idx]
            neg = np.searchsorted(noise_cdf, rng.random((len(idx), negatives)))
            neg = np.minimum(neg, n_nodes - 1)
            alpha = lr * max(1e-4, 1.0 - step / total)
            step += 1

            vc = emb[c]                                     # (b, d)
            targets = np.concatenate([o[:, None], neg], 1)  # (b, 1+k)
            vt = ctx[targets]                               # (b, 1+k, d)
            score = np.einsum("bd,bkd->bk", vc, vt)
            label = np.zeros_like(score)
            label[:, 0] = 1.0
            p = _sigmoid(score)
            eps = 1e-12
            epoch_loss += -(np.log(p[:, 0] + eps).sum() + np.log(1 - p[:, 1:] + eps).sum())
            coef = label - p                                # d(log-lik)/d(score)
            g_center = np.einsum("bk,bkd->bd", coef, vt)
            g_ctx = coef[:, :, None] * vc[:, None, :]
            _scatter_add(emb, c, alpha * g_center)
            _scatter_add(ctx, targets.ravel(), alpha * g_ctx.reshape(-1, dim))
        losses.append(epoch_loss / n_pairs)
    return PositionalFeatures(emb, window=window, losses=losses)


def deepwalk(g: Graph, dim=64, walks_per_node=3, walk_length=20, window=5,
             negatives=5, epochs=5, lr=0.025, seed=0) -> PositionalFeatures:
    walks = random_walks(g, walks_per_node, walk_length, seed)
    pf = train_skipgram(walks, g.n_nodes, dim=dim, window=window, negatives=negatives,
                        epochs=epochs, lr=lr, seed=seed)
    pf.walks_per_node, pf.walk_length = walks_per_node, walk_length
    return pf


def inductive_positional(pf: PositionalFeatures, g: Graph, unobserved) -> PositionalFeatures:
    """Give each unobserved node the mean positional row of its observed
    neighbours in ``g`` (zeros when it has none)."""
    hidden = np.zeros(g.n_nodes, dtype=bool)
    hidden[np.asarray(unobserved, dtype=np.int64)] = True
    out = pf.matrix.copy()
    for u in np.flatnonzero(hidden):
        nb = g.neighbors(u)
        nb = nb[~hidden[nb]]
        out[u] = pf.matrix[nb].mean(axis=0) if len(nb) else 0.0
    return PositionalFeatures(out, pf.walks_per_node, pf.walk_length, pf.window, list(pf.losses))
