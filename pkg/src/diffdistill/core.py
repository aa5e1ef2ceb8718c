"""Dense numeric kernel: MLPs with hand-written backprop, optimizers, seeded RNG.

Everything is float64 and row-major. An MLP processes a batch of rows at
once; a 1-D input is treated as a single row and the outputs are squeezed
back to 1-D.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"GDKD"
CHECKPOINT_VERSION = 1


class DimensionError(ValueError):
    pass


class StaleTapeError(RuntimeError):
    pass


class NonFiniteError(FloatingPointError):
    pass


# --------------------------------------------------------------------------
# RNG
# --------------------------------------------------------------------------

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for ``(seed, stream)``.

    Distinct streams are statistically independent; the same pair always
    reproduces the same sequence.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def gaussian_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return rng.standard_normal(dim)


# --------------------------------------------------------------------------
# MLP
# --------------------------------------------------------------------------

def relu(z):
    return np.maximum(z, 0.0)


@dataclass
class Tape:
    inputs: list          # input to each layer (post-activation of previous)
    pre: list             # pre-activations of each layer
    squeeze: bool
    model_id: int
    version: int


class Mlp:
    """Dense network, ReLU on hidden layers and identity on the output.

    ``weights[i]`` has shape ``(in_i, out_i)`` so a batch ``X`` maps to
    ``X @ W + b``.
    """

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise DimensionError("need one bias per weight matrix, at least one layer")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise DimensionError(
                    f"layer {i} expects {w.shape[0]} inputs, previous layer gives "
                    f"{self.weights[i - 1].shape[1]}")
        self.version = 0

    @classmethod
    def init(cls, dims, rng: np.random.Generator) -> "Mlp":
        """Glorot-uniform weights, zero biases. ``dims`` = [in, h1, ..., out]."""
        if len(dims) < 2:
            raise DimensionError("dims needs at least input and output size")
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @classmethod
    def zeros(cls, dims) -> "Mlp":
        return cls([np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
                   [np.zeros(b) for b in dims[1:]])

    @property
    def dims(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    @property
    def out_dim(self):
        return self.weights[-1].shape[1]

    @property
    def n_layers(self):
        return len(self.weights)

    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` of the live arrays."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def param_names(self):
        names = []
        for i in range(self.n_layers):
            names.extend((f"W{i}", f"b{i}"))
        return names

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def touch(self):
        """Mark parameters as modified; outstanding tapes become stale."""
        self.version += 1

    def forward(self, x):
        return mlp_forward(self, x)

    def __call__(self, x):
        return mlp_forward(self, x)[0]

    def __repr__(self):
        return f"Mlp(dims={self.dims})"


def mlp_forward(m: Mlp, x):
    """Return ``(y, tape)``; ``tape`` is what :func:`mlp_backward` needs."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    X = x[None, :] if squeeze else x
    if X.ndim != 2 or X.shape[1] != m.in_dim:
        raise DimensionError(f"input has {X.shape[-1]} columns, network expects {m.in_dim}")
    inputs, pre = [], []
    a = X
    last = m.n_layers - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        inputs.append(a)
        z = a @ w + b
        pre.append(z)
        a = z if i == last else relu(z)
    tape = Tape(inputs, pre, squeeze, id(m), m.version)
    return (a[0] if squeeze else a), tape


def mlp_backward(m: Mlp, tape: Tape, upstream):
    """Backprop ``upstream`` (dL/dy) through the recorded forward pass.

    Returns ``(param_grads, input_grad)`` with ``param_grads`` ordered like
    :meth:`Mlp.parameters`. Parameter gradients are summed over the batch.
    """
    if tape.model_id != id(m) or tape.version != m.version:
        raise StaleTapeError("tape was recorded against different parameters; rerun forward")
    g = np.asarray(upstream, dtype=np.float64)
    if tape.squeeze:
        g = g[None, :]
    if g.shape != tape.pre[-1].shape:
        raise DimensionError(f"upstream shape {g.shape} != output shape {tape.pre[-1].shape}")
    grads = [None] * (2 * m.n_layers)
    for i in range(m.n_layers - 1, -1, -1):
        if i != m.n_layers - 1:
            g = g * (tape.pre[i] > 0)
        grads[2 * i] = tape.inputs[i].T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ m.weights[i].T
    return grads, (g[0] if tape.squeeze else g)


# --------------------------------------------------------------------------
# optimizers
# --------------------------------------------------------------------------

@dataclass
class Optimizer:
    """SGD with weight decay, or Adam with L2 weight decay folded into the gradient."""

    kind: str = "adam"
    lr: float = 5e-3
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")

    def step(self, params, grads, names=None):
        """Update ``params`` in place."""
        if len(params) != len(grads):
            raise DimensionError("params and grads differ in length")
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise DimensionError(f"param {i}: shape {p.shape} vs grad {g.shape}")
            if not np.all(np.isfinite(g)):
                name = names[i] if names else f"#{i}"
                raise NonFiniteError(f"non-finite gradient in tensor {name}")
        self.step_count += 1
        if self.kind == "sgd":
            for p, g in zip(params, grads):
                p -= self.lr * (g + self.weight_decay * p)
            return params
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = g + self.weight_decay * p
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params

    def step_model(self, model: Mlp, grads):
        self.step(model.parameters(), grads, model.param_names())
        model.touch()


def optimizer_step(opt: Optimizer, params, grads, names=None):
    return opt.step(params, grads, names)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def save_checkpoint(m: Mlp, path) -> None:
    """Binary layout: b"GDKD", u32 version, u32 layers, (u32 in, u32 out) per
    layer, then per layer the row-major weights followed by the bias, all
    little-endian f64."""
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, m.n_layers)]
    for w in m.weights:
        parts.append(struct.pack("<II", *w.shape))
    for w, b in zip(m.weights, m.biases):
        parts.append(w.astype("<f8").tobytes())
        parts.append(b.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> Mlp:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint (bad magic)")
    version, n_layers = struct.unpack_from("<II", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = 12
    shapes = []
    for _ in range(n_layers):
        shapes.append(struct.unpack_from("<II", raw, off))
        off += 8
    weights, biases = [], []
    for rows, cols in shapes:
        w = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
        off += 8 * rows * cols
        b = np.frombuffer(raw, dtype="<f8", count=cols, offset=off)
        off += 8 * cols
        weights.append(w.astype(np.float64))
        biases.append(b.astype(np.float64))
    if off != len(raw):
        raise ValueError(f"{path}: {len(raw) - off} trailing bytes")
    return Mlp(weights, biases)


def check_finite(arr, what: str):
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(np.atleast_2d(arr)))[0]
        raise NonFiniteError(f"non-finite value in {what} at index {tuple(int(i) for i in bad)}")
