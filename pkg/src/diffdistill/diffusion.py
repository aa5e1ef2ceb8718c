"""Cosine noise schedule, forward noising and the noise-prediction assistant.

Sign convention: the per-step weight ``w(t) = -1/sqrt(1 - alpha_t)`` is
negative, so the weighted residual gradients returned by
:func:`assistant_gradient` (and ``distill.distill_step``) point *uphill* on
the denoising error. Trainers therefore hand their negation to the
optimizer, which is plain descent on ``sum |w(t)|/2 * ||eps_hat - eps||^2``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import DimensionError, Mlp, NonFiniteError, Optimizer, make_rng, mlp_backward, mlp_forward

TIME_EMBED_DIM = 16


@dataclass(frozen=True)
class DiffusionSchedule:
    T: int
    s: float
    alpha: np.ndarray      # alpha[0..T]
    mode: str = "product"

    def weight(self, t):
        """w(t) = -1/sqrt(1 - alpha_t); undefined at t = 0."""
        a = self.alpha[np.asarray(t)]
        return -1.0 / np.sqrt(1.0 - a)


def cosine_f(t, T, s):
    return np.cos(((np.asarray(t, dtype=np.float64) / T + s) / (1.0 + s)) * (math.pi / 2)) ** 2


def build_schedule(T=20, s=0.001, mode="product") -> DiffusionSchedule:
    """``mode="product"``: alpha_t = prod_{k<=t} f(k)/f(0) (default).
    ``mode="ratio"``: alpha_t = f(t)/f(0), the usual cosine-schedule convention.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if s <= 0:
        raise ValueError("offset s must be > 0")
    ratios = cosine_f(np.arange(T + 1), T, s) / cosine_f(0, T, s)
    if mode == "product":
        alpha = np.empty(T + 1)
        alpha[0] = 1.0
        acc = 1.0
        for t in range(1, T + 1):
            acc *= ratios[t]
            alpha[t] = acc
    elif mode == "ratio":
        alpha = ratios.copy()
        alpha[0] = 1.0
    else:
        raise ValueError(f"unknown schedule mode {mode!r}")
    alpha = np.clip(alpha, 0.0, 1.0)
    alpha.setflags(write=False)
    return DiffusionSchedule(int(T), float(s), alpha, mode)


def forward_noise(h, t, sched: DiffusionSchedule, eps):
    """sqrt(alpha_t) h + sqrt(1 - alpha_t) eps. ``t`` may be a per-row vector."""
    h = np.asarray(h, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if h.shape != eps.shape:
        raise DimensionError(f"h {h.shape} and eps {eps.shape} differ")
    t = np.asarray(t)
    if np.any(t < 0) or np.any(t > sched.T):
        raise ValueError(f"t outside [0, {sched.T}]")
    a = sched.alpha[t]
    if a.ndim == 1 and h.ndim == 2:
        a = a[:, None]
    return np.sqrt(a) * h + np.sqrt(1.0 - a) * eps


def time_embed(t, sched: DiffusionSchedule):
    """16-dim sinusoidal code of t/T: 8 sines then 8 cosines, geometric frequencies."""
    t = np.asarray(t)
    if np.any(t < 0) or np.any(t > sched.T):
        raise ValueError(f"t outside [0, {sched.T}]")
    half = TIME_EMBED_DIM // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / half)
    ang = 1000.0 * (np.asarray(t, dtype=np.float64) / sched.T)[..., None] * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)


# --------------------------------------------------------------------------
# noise predictor
# --------------------------------------------------------------------------

@dataclass
class NoisePredictor:
    mlp: Mlp
    rep_dim: int
    cond_dim: int

    @classmethod
    def init(cls, rep_dim, cond_dim, hidden=(256, 256, 256), seed=0):
        dims = [rep_dim + cond_dim + TIME_EMBED_DIM, *hidden, rep_dim]
        return cls(Mlp.init(dims, make_rng(seed, 0)), rep_dim, cond_dim)

    def copy(self):
        return NoisePredictor(self.mlp.copy(), self.rep_dim, self.cond_dim)

    def inputs(self, h_t, x_cond, t, sched):
        h_t = np.asarray(h_t, dtype=np.float64)
        x_cond = np.asarray(x_cond, dtype=np.float64)
        if h_t.shape[-1] != self.rep_dim or x_cond.shape[-1] != self.cond_dim:
            raise DimensionError(
                f"predictor expects rep dim {self.rep_dim} and condition dim {self.cond_dim}, "
                f"got {h_t.shape[-1]} and {x_cond.shape[-1]}")
        if h_t.shape[:-1] != x_cond.shape[:-1]:
            raise DimensionError("h_t and condition rows differ")
        te = time_embed(t, sched)
        if te.ndim < h_t.ndim:
            te = np.broadcast_to(te, h_t.shape[:-1] + te.shape[-1:])
        return np.concatenate([h_t, x_cond, te], axis=-1)


def predict_noise(npred: NoisePredictor, h_t, x_cond, t, sched):
    return mlp_forward(npred.mlp, npred.inputs(h_t, x_cond, t, sched))[0]


def sample_steps(rng, n, T):
    """t ~ U{1..T}; t = 0 is never drawn so w(t) stays finite."""
    return rng.integers(1, T + 1, size=n)


def assistant_gradient(npred: NoisePredictor, h_tea, x_cond, t, eps, sched):
    """Weighted denoising gradient at fixed draws ``(t, eps)``.

    Returns ``(grads, err)`` where ``grads`` is
    ``1/n sum_v w(t_v) (eps_hat_v - eps_v) d eps_hat_v / d phi`` (the gradient
    of ``sum_v w(t_v)/(2n) ||eps_hat_v - eps_v||^2`` with w held constant) and
    ``err`` is the mean ``||eps_hat - eps||^2``.
    """
    h_t = forward_noise(h_tea, t, sched, eps)
    eps_hat, tape = mlp_forward(npred.mlp, npred.inputs(h_t, x_cond, t, sched))
    resid = eps_hat - eps
    n = resid.shape[0]
    up = sched.weight(t)[:, None] * resid / n
    grads, _ = mlp_backward(npred.mlp, tape, up)
    err = float(np.mean(np.sum(resid ** 2, axis=1)))
    return grads, err


@dataclass
class AssistantConfig:
    epochs: int = 200
    lr: float = 5e-3
    weight_decay: float = 5e-4
    seed: int = 0
    draws: int = 1
    hidden: tuple = (256, 256, 256)


@dataclass
class AssistantResult:
    predictor: NoisePredictor
    errors: list = field(default_factory=list)   # epoch-mean ||eps_hat - eps||^2
    seconds: float = 0.0


def train_assistant(teacher, x_cond, sched: DiffusionSchedule, config: AssistantConfig | None = None,
                    predictor: NoisePredictor | None = None) -> AssistantResult:
    """Full-batch denoising training on (standardized) teacher rows.

    Each epoch draws fresh ``(t, eps)`` for every node (``config.draws`` times),
    accumulates the weighted gradient over all nodes and takes one step.
    """
    config = config or AssistantConfig()
    H = getattr(teacher, "matrix", teacher)
    X = np.asarray(x_cond, dtype=np.float64)
    n, d = H.shape
    if predictor is None:
        predictor = NoisePredictor.init(d, X.shape[1], config.hidden, seed=config.seed)
    if config.draws > 1:
        H = np.repeat(H, config.draws, axis=0)
        X = np.repeat(X, config.draws, axis=0)
    opt = Optimizer("adam", lr=config.lr, weight_decay=config.weight_decay)
    rng = make_rng(config.seed, 1)
    errors = []
    start = time.perf_counter()
    for epoch in range(config.epochs):
        t = sample_steps(rng, H.shape[0], sched.T)
        eps = rng.standard_normal(H.shape)
        grads, err = assistant_gradient(predictor, H, X, t, eps, sched)
        if not np.isfinite(err):
            raise NonFiniteError(f"assistant denoising error is non-finite at epoch {epoch}")
        errors.append(err)
        opt.step_model(predictor.mlp, [-g for g in grads])
    return AssistantResult(predictor, errors, time.perf_counter() - start)


def denoising_error(npred: NoisePredictor, teacher, x_cond, sched, seed=0, draws=1):
    """Mean ||eps - eps_hat||^2 over nodes under fresh draws from ``seed``."""
    H = getattr(teacher, "matrix", teacher)
    rng = make_rng(seed, 7)
    errs = []
    for _ in range(draws):
        t = sample_steps(rng, H.shape[0], sched.T)
        eps = rng.standard_normal(H.shape)
        eps_hat = predict_noise(npred, forward_noise(H, t, sched, eps), x_cond, t, sched)
        errs.append(np.mean(np.sum((eps_hat - eps) ** 2, axis=1)))
    return float(np.mean(errs))


def perturb_predictor(npred: NoisePredictor, sigma, seed=0) -> NoisePredictor:
    """Copy with i.i.d. N(0, sigma^2) noise added to every parameter."""
    out = npred.copy()
    if sigma > 0:
        rng = make_rng(seed, 11)
        for p in out.mlp.parameters():
            p += sigma * rng.standard_normal(p.shape)
        out.mlp.touch()
    return out
