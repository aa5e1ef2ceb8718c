import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffdistill.core import (DimensionError, Mlp, NonFiniteError, Optimizer, StaleTapeError,
                              gaussian_vector, load_checkpoint, make_rng, mlp_backward, mlp_forward,
                              optimizer_step, save_checkpoint)

from _oracles import central_diff, rel_err, straight_line_mlp


def test_identity_net_forward():
    m = Mlp([np.eye(2)], [np.zeros(2)])
    y, _ = mlp_forward(m, np.array([1.0, 2.0]))
    assert np.array_equal(y, [1.0, 2.0])


def test_zero_net_gives_zero():
    m = Mlp.zeros([3, 5, 2])
    assert np.array_equal(m(np.array([4.0, -1.0, 7.0])), np.zeros(2))


def test_forward_matches_straight_line_oracle():
    m = Mlp.init([4, 6, 3], make_rng(1, 0))
    for b in m.biases:
        b[:] = make_rng(2, 0).standard_normal(b.shape)
    x = make_rng(3, 0).standard_normal((5, 4))
    np.testing.assert_allclose(m(x), straight_line_mlp(m.weights, m.biases, x), rtol=1e-13, atol=1e-13)


def test_batch_rows_equal_single_rows():
    m = Mlp.init([4, 6, 3], make_rng(1, 0))
    x = make_rng(3, 0).standard_normal((5, 4))
    batch = m(x)
    for i in range(5):
        np.testing.assert_allclose(batch[i], m(x[i]), rtol=1e-13, atol=1e-14)


def test_dimension_errors():
    m = Mlp.init([4, 3], make_rng(0, 0))
    with pytest.raises(DimensionError):
        m(np.ones(5))
    with pytest.raises(DimensionError):
        Mlp([np.ones((2, 3)), np.ones((4, 1))], [np.zeros(3), np.zeros(1)])


def test_identity_backward_passes_upstream():
    m = Mlp([np.eye(3)], [np.zeros(3)])
    _, tape = mlp_forward(m, np.array([1.0, -2.0, 3.0]))
    _, gx = mlp_backward(m, tape, np.array([0.5, 0.25, -1.0]))
    np.testing.assert_array_equal(gx, [0.5, 0.25, -1.0])


def test_zero_upstream_zero_grads():
    m = Mlp.init([3, 4, 2], make_rng(0, 0))
    _, tape = mlp_forward(m, np.ones((2, 3)))
    grads, gx = mlp_backward(m, tape, np.zeros((2, 2)))
    assert all(not g.any() for g in grads) and not gx.any()


def _fd_check(dims, seed, n=3, tol=1e-5):
    rng = make_rng(seed, 0)
    m = Mlp.init(dims, rng)
    for b in m.biases:
        b += 0.1 * rng.standard_normal(b.shape)
    x = rng.standard_normal((n, dims[0]))
    up = rng.standard_normal((n, dims[-1]))
    _, tape = mlp_forward(m, x)
    grads, gx = mlp_backward(m, tape, up)
    scalar = lambda: float(np.sum(up * mlp_forward(m, x)[0]))
    for p, g in zip(m.parameters(), grads):
        assert rel_err(g, central_diff(scalar, p)) < tol
    assert rel_err(gx, central_diff(scalar, x)) < tol


def test_two_layer_finite_differences():
    _fd_check([4, 5, 3], seed=0)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=4), st.integers(0, 10_000))
def test_finite_differences_any_shape(dims, seed):
    _fd_check(dims, seed, tol=1e-4)


def test_backward_leaves_parameters_untouched():
    m = Mlp.init([3, 4, 2], make_rng(0, 0))
    before = [p.copy() for p in m.parameters()]
    _, tape = mlp_forward(m, np.ones((2, 3)))
    mlp_backward(m, tape, np.ones((2, 2)))
    assert all(np.array_equal(a, b) for a, b in zip(before, m.parameters()))


def test_stale_tape_rejected():
    m = Mlp.init([3, 2], make_rng(0, 0))
    _, tape = mlp_forward(m, np.ones(3))
    Optimizer("sgd", lr=0.1).step_model(m, [np.ones((3, 2)), np.ones(2)])
    with pytest.raises(StaleTapeError):
        mlp_backward(m, tape, np.ones(2))
    other = m.copy()
    _, tape = mlp_forward(other, np.ones(3))
    with pytest.raises(StaleTapeError):
        mlp_backward(m, tape, np.ones(2))


def test_sgd_hand_step():
    p = np.array([1.0])
    optimizer_step(Optimizer("sgd", lr=1.0), [p], [np.array([0.5])])
    assert p[0] == 0.5


@pytest.mark.parametrize("kind", ["sgd", "adam"])
def test_zero_lr_is_identity(kind):
    p = np.array([1.0, -2.0])
    optimizer_step(Optimizer(kind, lr=0.0, weight_decay=0.1), [p], [np.array([3.0, 4.0])])
    np.testing.assert_array_equal(p, [1.0, -2.0])


def test_adam_first_step_by_hand():
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    p = np.array([0.3])
    optimizer_step(Optimizer("adam", lr=lr), [p], [np.array([1.0])])
    m_hat = (1 - b1) * 1.0 / (1 - b1)
    v_hat = (1 - b2) * 1.0 / (1 - b2)
    expected = 0.3 - lr * m_hat / (np.sqrt(v_hat) + eps)
    assert abs(p[0] - expected) < 1e-15
    assert abs((0.3 - p[0]) - 1e-3) < 1e-10


def test_nonfinite_gradient_names_tensor():
    m = Mlp.init([2, 2], make_rng(0, 0))
    with pytest.raises(NonFiniteError, match="b0"):
        Optimizer().step_model(m, [np.zeros((2, 2)), np.array([np.nan, 0.0])])


def test_gaussian_vector_reproducible_and_streams_differ():
    a = gaussian_vector(make_rng(7, 1), 50)
    assert np.array_equal(a, gaussian_vector(make_rng(7, 1), 50))
    assert not np.array_equal(a, gaussian_vector(make_rng(7, 2), 50))
    assert not np.array_equal(a, gaussian_vector(make_rng(8, 1), 50))


def test_gaussian_vector_moments():
    v = gaussian_vector(make_rng(0, 0), 100_000)
    assert -0.02 < v.mean() < 0.02
    assert 0.97 < v.var() < 1.03


def test_checkpoint_roundtrip_and_layout(tmp_path):
    m = Mlp.init([3, 4, 2], make_rng(0, 0))
    m.biases[0][:] = [1, 2, 3, 4]
    path = tmp_path / "m.ckpt"
    save_checkpoint(m, path)
    raw = path.read_bytes()
    assert raw[:4] == b"GDKD"
    assert struct.unpack_from("<IIIIII", raw, 4) == (1, 2, 3, 4, 4, 2)
    w0 = np.frombuffer(raw, "<f8", 12, offset=28).reshape(3, 4)
    b0 = np.frombuffer(raw, "<f8", 4, offset=28 + 96)
    assert np.array_equal(w0, m.weights[0]) and np.array_equal(b0, [1, 2, 3, 4])
    back = load_checkpoint(path)
    assert all(np.array_equal(a, b) for a, b in zip(back.parameters(), m.parameters()))


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(p)
    m = Mlp.init([2, 2], make_rng(0, 0))
    save_checkpoint(m, p)
    p.write_bytes(p.read_bytes() + b"\0")
    with pytest.raises(ValueError, match="trailing"):
        load_checkpoint(p)
