"""Stage two: train the student MLP against the frozen assistant, plus an MSE baseline."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Mlp, NonFiniteError, Optimizer, make_rng, mlp_backward, mlp_forward
from .diffusion import DiffusionSchedule, NoisePredictor, forward_noise, predict_noise, sample_steps


def make_student(in_dim, out_dim=64, hidden=128, n_layers=3, seed=0) -> Mlp:
    dims = [in_dim] + [hidden] * (n_layers - 1) + [out_dim]
    return Mlp.init(dims, make_rng(seed, 0))


def student_forward(stu: Mlp, x_cond):
    return stu(x_cond)


@dataclass
class DistillConfig:
    epochs: int = 300
    lr: float = 5e-3
    weight_decay: float = 5e-4
    seed: int = 0
    draws: int = 1
    early_stop: bool = True
    patience: int = 20
    min_rel_improvement: float = 1e-5
    optimizer: str = "adam"


@dataclass
class DistillReport:
    score_mismatch: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    seconds: float = 0.0

    def to_csv(self) -> str:
        lines = ["epoch,score_mismatch,mse"]
        for i, (a, b) in enumerate(zip(self.score_mismatch, self.mse), 1):
            lines.append(f"{i},{a:.17g},{b:.17g}")
        return "\n".join(lines) + "\n"


def score_residual(npred: NoisePredictor, h_stu, h_tea, x_cond, t, eps, sched: DiffusionSchedule):
    """w(t) * (eps_phi(h_stu_t) - eps_phi(h_tea_t)) with one shared ``eps``."""
    h_tea_t = forward_noise(h_tea, t, sched, eps)
    h_stu_t = forward_noise(h_stu, t, sched, eps)
    diff = (predict_noise(npred, h_stu_t, x_cond, t, sched)
            - predict_noise(npred, h_tea_t, x_cond, t, sched))
    w = sched.weight(t)
    w = w[:, None] if diff.ndim == 2 else w
    return w * diff, diff


def distill_step(stu: Mlp, npred: NoisePredictor, h_tea, x_cond, sched, rng=None, t=None, eps=None):
    """One pass of the score-aligned update over the given rows.

    The weighted noise-prediction gap ``g`` is pushed back through the student
    only; the assistant's Jacobian and the sqrt(alpha_t) noising factor are
    not applied. Returns ``(grads, info)``, ``grads`` being
    ``1/n sum_v g_v^T d h_stu_v / d theta`` (same sign convention as the
    assistant: negate before a descent step).
    """
    h_tea = np.atleast_2d(np.asarray(h_tea, dtype=np.float64))
    x_cond = np.atleast_2d(np.asarray(x_cond, dtype=np.float64))
    n = h_tea.shape[0]
    if t is None:
        t = sample_steps(rng, n, sched.T)
    if eps is None:
        eps = rng.standard_normal(h_tea.shape)
    h_stu, tape = mlp_forward(stu, x_cond)
    g, diff = score_residual(npred, h_stu, h_tea, x_cond, np.asarray(t), eps, sched)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("non-finite score residual in distillation step")
    grads, _ = mlp_backward(stu, tape, g / n)
    info = {
        "g": g,
        "score_mismatch": float(np.mean(np.sum(diff ** 2, axis=1))),
        "mse": float(np.mean((h_stu - h_tea) ** 2)),
    }
    return grads, info


def train_student(stu: Mlp, npred: NoisePredictor, teacher, x_cond, sched, config=None):
    """Full-pass distillation epochs; ``stu`` is updated in place and returned."""
    config = config or DistillConfig()
    H = getattr(teacher, "matrix", teacher)
    X = np.asarray(x_cond, dtype=np.float64)
    if config.draws > 1:
        H = np.repeat(H, config.draws, axis=0)
        X = np.repeat(X, config.draws, axis=0)
    opt = Optimizer(config.optimizer, lr=config.lr, weight_decay=config.weight_decay)
    rng = make_rng(config.seed, 2)
    report = DistillReport()
    start = time.perf_counter()
    best, best_epoch = np.inf, 0
    for epoch in range(config.epochs):
        grads, info = distill_step(stu, npred, H, X, sched, rng)
        if not np.isfinite(info["mse"]):
            raise NonFiniteError(f"student diverged at epoch {epoch}")
        report.score_mismatch.append(info["score_mismatch"])
        report.mse.append(info["mse"])
        opt.step_model(stu, [-g for g in grads])
        if not config.early_stop or epoch + 1 < config.patience:
            continue
        # plateau test on the moving average; single epochs are too noisy
        smooth = float(np.mean(report.score_mismatch[-config.patience:]))
        if smooth < best * (1.0 - config.min_rel_improvement):
            best, best_epoch = smooth, epoch
        elif epoch - best_epoch >= config.patience:
            break
    report.seconds = time.perf_counter() - start
    return stu, report


def train_student_mse_baseline(stu: Mlp, teacher, x_cond, config=None, losses=None):
    """Plain representation matching: minimise mean_v ||h_stu_v - h_tea_v||^2.

    ``losses`` (a list) collects the loss before each step.
    """
    config = config or DistillConfig(early_stop=False)
    H = getattr(teacher, "matrix", teacher)
    X = np.asarray(x_cond, dtype=np.float64)
    opt = Optimizer(config.optimizer, lr=config.lr, weight_decay=config.weight_decay)
    n = H.shape[0]
    for epoch in range(config.epochs):
        out, tape = mlp_forward(stu, X)
        r = out - H
        loss = float(np.mean(np.sum(r ** 2, axis=1)))
        if not np.isfinite(loss):
            raise NonFiniteError(f"MSE baseline diverged at epoch {epoch}")
        if losses is not None:
            losses.append(loss)
        grads, _ = mlp_backward(stu, tape, 2.0 * r / n)
        opt.step_model(stu, grads)
    return stu
