"""Downstream evaluation: probes, link prediction, robustness sweeps, projections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata, spearmanr

from .core import make_rng, mlp_backward, mlp_forward
from .graph import EdgeSplit, LabelSplit


@dataclass
class EvalResult:
    metric: str
    values: list
    config: dict = field(default_factory=dict)

    @property
    def mean(self):
        return float(np.mean(self.values))

    @property
    def std(self):
        return float(np.std(self.values))


def micro_f1(pred, truth) -> float:
    """Pooled TP/(TP + (FP+FN)/2); identical to accuracy for single-label data."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth lengths differ")
    if pred.size == 0:
        raise ValueError("micro_f1 of an empty set")
    tp = np.sum(pred == truth)
    fp = fn = pred.size - tp
    return float(2 * tp / (2 * tp + fp + fn))


# --------------------------------------------------------------------------
# logistic-regression probe
# --------------------------------------------------------------------------

@dataclass
class LogRegHead:
    weight: np.ndarray
    bias: np.ndarray
    l2: float = 1e-4

    def predict(self, Z):
        return np.argmax(Z @ self.weight + self.bias, axis=1)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def smoothness_step(Z, l2=0.0):
    """1/L for mean softmax cross-entropy on [Z, 1]; L = lambda_max(Z1^T Z1)/(2n) + l2."""
    Z1 = np.concatenate([Z, np.ones((Z.shape[0], 1))], axis=1)
    lam = np.linalg.eigvalsh(Z1.T @ Z1 / Z.shape[0])[-1]
    return 1.0 / (0.5 * lam + l2)


def fit_logreg(Z, y, n_classes, Zval=None, yval=None, lr="auto", iters=1000, l2=1e-4, seed=0,
               check_every=10) -> LogRegHead:
    """Full-batch Nesterov-accelerated gradient descent on softmax
    cross-entropy + L2.

    ``lr="auto"`` uses 1/L, the largest step with guaranteed descent. With
    validation data the iterate with the best validation micro-F1 is kept.
    """
    rng = make_rng(seed, 0)
    if lr == "auto":
        lr = smoothness_step(Z, l2)
    d = Z.shape[1]
    W = 0.01 * rng.standard_normal((d, n_classes))
    b = np.zeros(n_classes)
    Wm, bm = W.copy(), b.copy()          # look-ahead point
    Y = np.eye(n_classes)[y]
    n = len(y)
    best, best_f1 = (W.copy(), b.copy()), -1.0
    for it in range(iters):
        G = (_softmax(Z @ Wm + bm) - Y) / n
        W_new = Wm - lr * (Z.T @ G + l2 * Wm)
        b_new = bm - lr * G.sum(axis=0)
        mom = it / (it + 3.0)
        Wm = W_new + mom * (W_new - W)
        bm = b_new + mom * (b_new - b)
        W, b = W_new, b_new
        if Zval is not None and ((it + 1) % check_every == 0 or it == iters - 1):
            f1 = micro_f1(np.argmax(Zval @ W + b, axis=1), yval)
            if f1 > best_f1:
                best, best_f1 = (W.copy(), b.copy()), f1
    if Zval is None:
        best = (W, b)
    return LogRegHead(best[0], best[1], l2)


def eval_node_classification(emb, labels, split: LabelSplit, runs=5, seed=0, **probe) -> EvalResult:
    """Test micro-F1 of a logistic-regression probe, repeated over ``runs`` seeds."""
    Z = getattr(emb, "matrix", emb)
    labels = np.asarray(labels)
    if labels is None or len(labels) != Z.shape[0]:
        raise ValueError("labels must cover every embedding row")
    if len(np.unique(labels[split.train])) < 2:
        raise ValueError("training split contains a single class")
    k = int(labels.max()) + 1
    vals = []
    for r in range(runs):
        head = fit_logreg(Z[split.train], labels[split.train], k, Z[split.val], labels[split.val],
                          seed=seed * 1000 + r, **probe)
        vals.append(micro_f1(head.predict(Z[split.test]), labels[split.test]))
    return EvalResult("micro_f1", vals, {"runs": runs, "seed": seed, **probe})


# --------------------------------------------------------------------------
# link prediction
# --------------------------------------------------------------------------

def auc_roc(pos_scores, neg_scores) -> float:
    """Mann-Whitney rank statistic with tie-averaged ranks."""
    pos_scores, neg_scores = np.asarray(pos_scores), np.asarray(neg_scores)
    if len(pos_scores) == 0 or len(neg_scores) == 0:
        raise ValueError("AUC needs positive and negative samples")
    ranks = rankdata(np.concatenate([pos_scores, neg_scores]))
    n_pos, n_neg = len(pos_scores), len(neg_scores)
    return float((ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def edge_scores(Z, pairs):
    return np.einsum("ij,ij->i", Z[pairs[:, 0]], Z[pairs[:, 1]])


def eval_link_prediction(emb, split: EdgeSplit) -> EvalResult:
    Z = getattr(emb, "matrix", emb)
    if len(split.test_pos) == 0:
        raise ValueError("empty test split")
    auc = auc_roc(edge_scores(Z, split.test_pos), edge_scores(Z, split.test_neg))
    return EvalResult("auc_roc", [auc])


# --------------------------------------------------------------------------
# robustness
# --------------------------------------------------------------------------

def gaussian_perturb(X, alpha, seed=0):
    """(1 - alpha) X + alpha eps with eps ~ N(0, I)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0:
        return X.copy()
    eps = make_rng(seed, 21).standard_normal(X.shape)
    return (1.0 - alpha) * X + alpha * eps


def gaussian_robustness(embed, features, labels, split, alphas, seed=0, runs=5):
    """``embed`` maps a feature matrix to node representations."""
    out = []
    for a in alphas:
        Z = embed(gaussian_perturb(features, a, seed))
        res = eval_node_classification(Z, labels, split, runs=runs, seed=seed)
        res.config["alpha"] = a
        res.config["attack"] = "gaussian"
        out.append(res)
    return out


def fgsm_direction(stu, teacher, features, positional):
    """sign of d/dx of ||stu([x, pf]) - h_tea||^2, restricted to the attribute block."""
    H = getattr(teacher, "matrix", teacher)
    X = np.concatenate([features, positional], axis=1)
    out, tape = mlp_forward(stu, X)
    _, gx = mlp_backward(stu, tape, 2.0 * (out - H))
    return np.sign(gx[:, :features.shape[1]])


def fgsm_robustness(stu, teacher, features, positional, labels, split, alphas, seed=0, runs=5):
    direction = fgsm_direction(stu, teacher, features, positional)
    out = []
    for a in alphas:
        Xa = features + a * direction if a else features.copy()
        Z = stu(np.concatenate([Xa, positional], axis=1))
        res = eval_node_classification(Z, labels, split, runs=runs, seed=seed)
        res.config["alpha"] = a
        res.config["attack"] = "fgsm"
        out.append(res)
    return out


# --------------------------------------------------------------------------
# projection
# --------------------------------------------------------------------------

def _top_eigvec(C, rng, iters=10000, tol=1e-15):
    v = rng.standard_normal(C.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = C @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return v
        w /= nrm
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            return w
        v = w
    return v


def pca_2d_export(emb, labels=None, seed=0):
    """Top-2 principal components by power iteration with deflation.

    Returns ``(rows, components, explained_variance)``; ``rows`` are
    ``(x, y, label)`` tuples.
    """
    Z = getattr(emb, "matrix", emb)
    if Z.shape[0] < 2:
        raise ValueError("PCA needs at least two rows")
    Zc = Z - Z.mean(axis=0)
    C = Zc.T @ Zc / (Z.shape[0] - 1)
    rng = make_rng(seed, 0)
    v1 = _top_eigvec(C, rng)
    C2 = C - (v1 @ C @ v1) * np.outer(v1, v1)
    v2 = _top_eigvec(C2, rng)
    v2 -= (v2 @ v1) * v1
    v2 /= np.linalg.norm(v2)
    comps = np.stack([v1, v2])
    var = np.array([v1 @ C @ v1, v2 @ C @ v2])
    if var[1] > var[0]:
        comps, var = comps[::-1], var[::-1]
    P = Zc @ comps.T
    labs = np.full(len(P), -1) if labels is None else np.asarray(labels)
    rows = [(float(x), float(y), int(l)) for (x, y), l in zip(P, labs)]
    return rows, comps, var


def rank_correlation(a, b) -> float:
    """Spearman correlation; NaN when either sequence is constant."""
    if np.ptp(np.asarray(a, dtype=np.float64)) == 0 or np.ptp(np.asarray(b, dtype=np.float64)) == 0:
        return float("nan")
    return float(spearmanr(a, b).statistic)


def count_inversions(seq, direction="non-increasing") -> int:
    """Adjacent steps that violate the stated monotone direction."""
    d = np.diff(np.asarray(seq, dtype=np.float64))
    return int(np.sum(d > 0) if direction == "non-increasing" else np.sum(d < 0))
