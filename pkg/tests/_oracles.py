"""Independent reference computations used across the tests."""

import numpy as np


def central_diff(f, arr, h=1e-5):
    """Central finite-difference gradient of scalar ``f()`` wrt every entry of ``arr`` (mutated in place, restored)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + h
        fp = f()
        arr[i] = old - h
        fm = f()
        arr[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    den = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / den)


def straight_line_mlp(weights, biases, x):
    """Per-row, per-unit loops: a second code path for the MLP forward."""
    out = []
    for row in np.atleast_2d(x):
        a = list(row)
        for li, (W, b) in enumerate(zip(weights, biases)):
            z = []
            for j in range(W.shape[1]):
                s = b[j]
                for i in range(W.shape[0]):
                    s += a[i] * W[i, j]
                z.append(s)
            a = z if li == len(weights) - 1 else [max(v, 0.0) for v in z]
        out.append(a)
    return np.array(out)
