import numpy as np
import pytest

from diffdistill.core import NonFiniteError, make_rng
from diffdistill.evaluate import auc_roc, eval_link_prediction
from diffdistill.graph import Graph, generate_sbm, split_edges
from diffdistill.teacher import (EmbeddingSet, GcnEncoder, TrainConfig, gae_loss_and_grad, gcn_forward,
                                 load_embeddings, normalized_adjacency, save_embeddings, standardize, train_gae)

from _oracles import central_diff, rel_err


def test_normalized_adjacency_dense_oracle(tiny_sbm):
    n = tiny_sbm.n_nodes
    A = np.eye(n)
    for u, v in tiny_sbm.edges:
        A[u, v] = A[v, u] = 1.0
    d = A.sum(1)
    expected = A / np.sqrt(np.outer(d, d))
    np.testing.assert_allclose(normalized_adjacency(n, tiny_sbm.edges).toarray(), expected, atol=1e-15)


def test_edgeless_graph_is_rowwise_mlp():
    X = make_rng(0, 0).standard_normal((4, 3))
    g = Graph(4, np.empty((0, 2), dtype=np.int64), X)
    enc = GcnEncoder.init(3, hidden=5, out_dim=2, n_layers=2, seed=1)
    H = gcn_forward(enc, g).matrix
    np.testing.assert_allclose(H, np.maximum(X @ enc.weights[0], 0) @ enc.weights[1], atol=1e-14)


def test_isomorphic_nodes_match():
    # nodes 0 and 1 both hang off node 2 and share features
    X = np.array([[1.0, 2.0], [1.0, 2.0], [0.5, -1.0], [3.0, 0.0]])
    g = Graph(4, np.array([[0, 2], [1, 2], [2, 3]]), X)
    H = gcn_forward(GcnEncoder.init(2, 6, 3, seed=0), g).matrix
    np.testing.assert_array_equal(H[0], H[1])


def test_permutation_equivariance(small_sbm):
    enc = GcnEncoder.init(small_sbm.n_features, 16, 4, seed=2)
    perm = make_rng(1, 0).permutation(small_sbm.n_nodes)
    inv = np.argsort(perm)
    g2 = Graph(small_sbm.n_nodes, inv[small_sbm.edges], small_sbm.features[perm])
    H = enc.forward(small_sbm)[0]
    H2 = GcnEncoder(enc.weights).forward(g2)[0]
    np.testing.assert_allclose(H2, H[perm], atol=1e-12)


def test_gcn_gradient_finite_differences(tiny_sbm):
    enc = GcnEncoder.init(tiny_sbm.n_features, 5, 3, n_layers=3, seed=0)
    head = make_rng(2, 0).standard_normal((tiny_sbm.n_nodes, 3))
    X = tiny_sbm.features.copy()
    H, tape = enc.forward(tiny_sbm, X)
    grads, gX = enc.backward(tape, head)
    f = lambda: float(np.sum(head * enc.forward(tiny_sbm, X)[0]))
    for w, gw in zip(enc.weights, grads):
        assert rel_err(gw, central_diff(f, w)) < 1e-4
    assert rel_err(gX, central_diff(f, X)) < 1e-4


def test_gae_loss_gradient_finite_differences(tiny_sbm):
    rng = make_rng(0, 0)
    H = rng.standard_normal((tiny_sbm.n_nodes, 3))
    neg = np.array([[0, 29], [3, 17], [5, 20]])
    _, dH = gae_loss_and_grad(H, tiny_sbm.edges, neg)
    fd = central_diff(lambda: gae_loss_and_grad(H, tiny_sbm.edges, neg)[0], H)
    assert rel_err(dH, fd) < 1e-6


def test_gae_trains_and_is_reproducible(tiny_sbm):
    cfg = TrainConfig(epochs=5, seed=1)
    a = train_gae(tiny_sbm, cfg, hidden=8, out_dim=4)
    assert a.losses[1] < a.losses[0]
    b = train_gae(tiny_sbm, cfg, hidden=8, out_dim=4)
    assert np.array_equal(a.embeddings.matrix, b.embeddings.matrix)


def test_gae_link_prediction_on_two_blocks():
    # Edges are independent given the blocks, so scoring pairs by "same block"
    # is Bayes-optimal; its AUC (about 0.75 here) is the ceiling for any model.
    g = generate_sbm(100, 2, 0.2, 0.01, 16, 1.0, seed=0)
    split = split_edges(g, seed=0)
    res = train_gae(g.with_edges(split.train), TrainConfig(epochs=200, seed=0), hidden=64, out_dim=16)
    auc = eval_link_prediction(res.embeddings, split).mean
    same = lambda p: (g.labels[p[:, 0]] == g.labels[p[:, 1]]).astype(float)
    ceiling = auc_roc(same(split.test_pos), same(split.test_neg))
    assert 0.70 < ceiling < 0.80
    assert auc > ceiling - 0.05


def test_gae_needs_edges():
    with pytest.raises(ValueError):
        train_gae(Graph(3, np.empty((0, 2)), np.zeros((3, 2))))


def test_embedding_roundtrip_bit_identical(tmp_path):
    M = make_rng(0, 0).standard_normal((7, 3)) * 1e-3
    save_embeddings(EmbeddingSet(M, "positional"), tmp_path / "e")
    back = load_embeddings(tmp_path / "e", n_nodes=7)
    assert back.tag == "positional" and np.array_equal(back.matrix, M)


def test_embedding_row_count_mismatch(tmp_path):
    save_embeddings(EmbeddingSet(np.ones((3, 2))), tmp_path / "e")
    with pytest.raises(ValueError, match="3 embedding rows"):
        load_embeddings(tmp_path / "e", n_nodes=4)
    (tmp_path / "f").write_text("4 2 teacher\n1 2\n3 4\n")
    with pytest.raises(ValueError, match="header says 4"):
        load_embeddings(tmp_path / "f")


def test_embedding_nan_names_row(tmp_path):
    (tmp_path / "e").write_text("3 2 teacher\n1 2\n3 nan\n5 6\n")
    with pytest.raises(NonFiniteError, match="row 1"):
        load_embeddings(tmp_path / "e")
    with pytest.raises(NonFiniteError, match="row 2"):
        EmbeddingSet(np.array([[0.0], [1.0], [np.inf]]))


def test_standardize_properties():
    M = make_rng(0, 0).standard_normal((50, 4)) * [1, 5, 0.1, 2] + [3, -1, 0, 7]
    M[:, 2] = 4.2
    z = standardize(EmbeddingSet(M)).matrix
    np.testing.assert_allclose(z[:, [0, 1, 3]].mean(0), 0, atol=1e-12)
    np.testing.assert_allclose(z[:, [0, 1, 3]].var(0), 1, atol=1e-12)
    assert not z[:, 2].any()
    zz = standardize(EmbeddingSet(z)).matrix
    np.testing.assert_allclose(zz, z, atol=1e-12)
