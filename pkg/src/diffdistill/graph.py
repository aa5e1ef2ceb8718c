"""Graph data model, plain-text ingestion, SBM generator, edge/node splits."""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import make_rng


class GraphFormatError(ValueError):
    pass


def _canonical_edges(edges, n_nodes):
    """Sorted unique (u<v) pairs with self-loops removed."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n_nodes):
        raise GraphFormatError(f"edge endpoint out of range [0, {n_nodes})")
    e = e[e[:, 0] != e[:, 1]]
    e = np.sort(e, axis=1)
    if len(e):
        e = np.unique(e, axis=0)
    return e


@dataclass
class Graph:
    n_nodes: int
    edges: np.ndarray                    # (m, 2), u < v, unique
    features: np.ndarray                 # (n, f)
    labels: np.ndarray | None = None     # (n,) int
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.edges = _canonical_edges(self.edges, self.n_nodes)
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] != self.n_nodes:
            raise GraphFormatError(
                f"feature matrix has {self.features.shape[0]} rows for {self.n_nodes} nodes")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n_nodes,):
                raise GraphFormatError(f"{len(self.labels)} labels for {self.n_nodes} nodes")
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n_nodes), out=self.indptr[1:])
        self.indices = dst

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return 0 if self.labels is None else int(self.labels.max()) + 1

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degrees(self):
        return np.diff(self.indptr)

    def edge_set(self):
        return set(map(tuple, self.edges.tolist()))

    def with_features(self, features) -> "Graph":
        return Graph(self.n_nodes, self.edges, features, self.labels)

    def with_edges(self, edges) -> "Graph":
        return Graph(self.n_nodes, edges, self.features, self.labels)


# --------------------------------------------------------------------------
# file IO
# --------------------------------------------------------------------------

def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path)


def read_features(path) -> np.ndarray:
    rows, width = [], None
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise GraphFormatError(
                    f"{path}:{lineno}: ragged feature row ({len(parts)} values, expected {width})")
            try:
                rows.append(np.array(parts, dtype=np.float64))
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise GraphFormatError(f"{path}: no feature rows")
    return np.vstack(rows)


def read_edges(path, n_nodes):
    pairs = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {line.strip()!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id") from None
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise GraphFormatError(
                    f"{path}:{lineno}: node id out of range for {n_nodes} nodes")
            pairs.append((u, v))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_labels(path, n_nodes):
    labels = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                labels.append(int(s))
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: bad label {s!r}") from None
    if len(labels) != n_nodes:
        raise GraphFormatError(f"{path}: {len(labels)} labels for {n_nodes} nodes")
    return np.array(labels, dtype=np.int64)


def load_graph(edge_path, feature_path, label_path=None) -> Graph:
    features = read_features(feature_path)
    n = features.shape[0]
    edges = read_edges(edge_path, n)
    labels = read_labels(label_path, n) if label_path else None
    return Graph(n, edges, features, labels)


def write_graph(g: Graph, out_dir, name="graph"):
    """Write edge/feature/label files plus a manifest; return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / f"{name}.edges", g.edges, fmt="%d")
    np.savetxt(out / f"{name}.features", g.features, fmt="%.17g")
    entries = {"name": name, "edges": f"{name}.edges", "features": f"{name}.features"}
    if g.labels is not None:
        np.savetxt(out / f"{name}.labels", g.labels, fmt="%d")
        entries["labels"] = f"{name}.labels"
    path = out / f"{name}.manifest"
    write_kv(path, entries)
    return path


def read_kv(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise GraphFormatError(f"{path}:{lineno}: expected key=value")
            k, v = s.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_kv(path, entries: dict):
    with open(path, "w") as fh:
        for k, v in entries.items():
            fh.write(f"{k}={v}\n")


@dataclass
class LabelSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def load_dataset(manifest_path):
    """Load a dataset manifest. Returns ``(graph, label_split_or_None)``."""
    manifest_path = Path(manifest_path)
    kv = read_kv(manifest_path)
    base = manifest_path.parent
    for key in ("edges", "features"):
        if key not in kv:
            raise GraphFormatError(f"{manifest_path}: manifest lacks '{key}'")
    g = load_graph(base / kv["edges"], base / kv["features"],
                   base / kv["labels"] if "labels" in kv else None)
    split = read_split_file(base / kv["splits"], g.n_nodes) if "splits" in kv else None
    return g, split


def read_split_file(path, n_nodes) -> LabelSplit:
    """One token per node: train, val, test or none."""
    tags = [s.strip() for s in open(path) if s.strip()]
    if len(tags) != n_nodes:
        raise GraphFormatError(f"{path}: {len(tags)} split tags for {n_nodes} nodes")
    bad = set(tags) - {"train", "val", "test", "none"}
    if bad:
        raise GraphFormatError(f"{path}: unknown split tags {sorted(bad)}")
    tags = np.array(tags)
    return LabelSplit(*(np.flatnonzero(tags == k) for k in ("train", "val", "test")))


def write_split_file(path, split: LabelSplit, n_nodes):
    tags = np.array(["none"] * n_nodes, dtype=object)
    tags[split.train], tags[split.val], tags[split.test] = "train", "val", "test"
    Path(path).write_text("\n".join(tags) + "\n")


def import_linqs(cites_path, content_path, out_dir, name="cora"):
    """Convert the LINQS citation format (``.cites`` / ``.content``) into
    the plain edge/feature/label layout. Class ids follow sorted label names."""
    ids, feats, names = [], [], []
    with _open_text(content_path) as fh:
        for line in fh:
            parts = line.split()
            if parts:
                ids.append(parts[0])
                feats.append(np.array(parts[1:-1], dtype=np.float64))
                names.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    classes = sorted(set(names))
    labels = np.array([classes.index(c) for c in names])
    pairs = []
    with _open_text(cites_path) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) == 2 and parts[0] in index and parts[1] in index:
                pairs.append((index[parts[0]], index[parts[1]]))
    g = Graph(len(ids), np.array(pairs), np.vstack(feats), labels)
    return write_graph(g, out_dir, name)


# --------------------------------------------------------------------------
# statistics & generators
# --------------------------------------------------------------------------

def homophily_rate(g: Graph) -> float:
    if g.labels is None:
        raise ValueError("homophily_rate needs node labels")
    if g.n_edges == 0:
        raise ValueError("homophily_rate needs at least one edge")
    lab = g.labels
    return float(np.mean(lab[g.edges[:, 0]] == lab[g.edges[:, 1]]))


def generate_sbm(n_per_block, blocks, p_in, p_out, feature_dim, signal, seed) -> Graph:
    """Stochastic block model with Gaussian class-mean features.

    Node ``i`` belongs to block ``i // n_per_block``; its feature row is the
    block mean (entries ~ N(0, signal^2)) plus standard normal noise.
    """
    for p in (p_in, p_out):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    rng = make_rng(seed, 0)
    n = n_per_block * blocks
    labels = np.repeat(np.arange(blocks), n_per_block)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    frng = make_rng(seed, 1)
    means = frng.standard_normal((blocks, feature_dim)) * signal
    features = means[labels] + frng.standard_normal((n, feature_dim))
    return Graph(n, edges, features, labels)


# --------------------------------------------------------------------------
# splits
# --------------------------------------------------------------------------

@dataclass
class EdgeSplit:
    train: np.ndarray
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray


def sample_non_edges(n_nodes, count, forbidden: set, rng):
    """``count`` distinct (u<v) pairs that are neither self-loops nor in ``forbidden``."""
    max_pairs = n_nodes * (n_nodes - 1) // 2
    if count > max_pairs - len(forbidden):
        raise ValueError("not enough non-edges to sample from")
    out, seen = [], set()
    while len(out) < count:
        need = count - len(out)
        cand = rng.integers(0, n_nodes, size=(2 * need + 8, 2))
        for u, v in cand.tolist():
            if u == v:
                continue
            if u > v:
                u, v = v, u
            if (u, v) in forbidden or (u, v) in seen:
                continue
            seen.add((u, v))
            out.append((u, v))
            if len(out) == count:
                break
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def split_edges(g: Graph, train_frac=0.85, seed=0) -> EdgeSplit:
    """Positives: ``train_frac`` for training, the rest split 1:2 into
    validation and test. Each held-out split gets as many sampled non-edges."""
    m = g.n_edges
    if m < 10:
        raise ValueError(f"split_edges needs at least 10 edges, graph has {m}")
    rng = make_rng(seed, 0)
    perm = rng.permutation(m)
    n_train = int(round(train_frac * m))
    rest = m - n_train
    n_val = int(round(rest / 3))
    e = g.edges[perm]
    train, val_pos, test_pos = e[:n_train], e[n_train:n_train + n_val], e[n_train + n_val:]
    negs = sample_non_edges(g.n_nodes, len(val_pos) + len(test_pos), g.edge_set(), rng)
    return EdgeSplit(train, val_pos, negs[:len(val_pos)], test_pos, negs[len(val_pos):])


def stratified_split(labels, fractions=(0.6, 0.2, 0.2), seed=0) -> LabelSplit:
    """Per-class random split of node ids into train/val/test."""
    rng = make_rng(seed, 0)
    labels = np.asarray(labels)
    parts = ([], [], [])
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_tr = int(round(fractions[0] * len(idx)))
        n_va = int(round(fractions[1] * len(idx)))
        parts[0].append(idx[:n_tr])
        parts[1].append(idx[n_tr:n_tr + n_va])
        parts[2].append(idx[n_tr + n_va:])
    return LabelSplit(*(np.sort(np.concatenate(p)) for p in parts))


@dataclass
class NodeSplit:
    observed: np.ndarray
    unobserved: np.ndarray
    labels: LabelSplit


def split_nodes_inductive(g: Graph, unobserved_frac=0.2, seed=0, label_split=None):
    """Hide a fraction of the test nodes. Returns ``(NodeSplit, pruned_graph)``;
    the pruned graph drops every edge touching an unobserved node."""
    if g.labels is None:
        raise ValueError("inductive split needs node labels")
    if label_split is None:
        label_split = stratified_split(g.labels, seed=seed)
    rng = make_rng(seed, 1)
    test = rng.permutation(label_split.test)
    n_unobs = int(round(unobserved_frac * len(test)))
    unobs = np.sort(test[:n_unobs])
    mask = np.zeros(g.n_nodes, dtype=bool)
    mask[unobs] = True
    observed = np.flatnonzero(~mask)
    keep = ~(mask[g.edges[:, 0]] | mask[g.edges[:, 1]])
    return NodeSplit(observed, unobs, label_split), g.with_edges(g.edges[keep])
