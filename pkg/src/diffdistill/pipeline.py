"""End-to-end orchestration of the two training stages and the evaluation protocols."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .core import Mlp
from .diffusion import AssistantConfig, DiffusionSchedule, NoisePredictor, build_schedule, denoising_error, perturb_predictor, train_assistant
from .distill import DistillConfig, DistillReport, make_student, train_student, train_student_mse_baseline
from .evaluate import EvalResult, eval_node_classification, rank_correlation
from .graph import Graph, LabelSplit, split_nodes_inductive, stratified_split
from .poscode import deepwalk, inductive_positional
from .teacher import EmbeddingSet, TrainConfig, standardize, train_gae


@dataclass
class PipelineConfig:
    seed: int = 0
    T: int = 20
    s: float = 0.001
    schedule_mode: str = "product"
    lr: float = 5e-3
    wd: float = 5e-4
    teacher_epochs: int = 200
    assistant_epochs: int = 200
    student_epochs: int = 300
    early_stop: bool = True
    draws: int = 1
    rep_dim: int = 64
    teacher_hidden: int = 256
    student_hidden: int = 128
    student_layers: int = 3
    assistant_hidden: int = 256
    assistant_layers: int = 3
    pos_dim: int = 64
    walks_per_node: int = 3
    walk_length: int = 20
    window: int = 5
    skipgram_epochs: int = 5

    def schedule(self) -> DiffusionSchedule:
        return build_schedule(self.T, self.s, self.schedule_mode)

    def teacher_config(self):
        return TrainConfig(lr=self.lr, weight_decay=self.wd, epochs=self.teacher_epochs, seed=self.seed)

    def assistant_config(self):
        return AssistantConfig(epochs=self.assistant_epochs, lr=self.lr, weight_decay=self.wd,
                               seed=self.seed, draws=self.draws,
                               hidden=(self.assistant_hidden,) * self.assistant_layers)

    def distill_config(self, **kw):
        base = DistillConfig(epochs=self.student_epochs, lr=self.lr, weight_decay=self.wd,
                             seed=self.seed, draws=self.draws, early_stop=self.early_stop)
        return replace(base, **kw)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        """Build from string values (manifest files); unknown keys are ignored."""
        kw = {}
        for f in fields(cls):
            if f.name in d:
                v = d[f.name]
                if f.type in ("bool", bool):
                    kw[f.name] = v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")
                elif f.type in ("int", int):
                    kw[f.name] = int(v)
                elif f.type in ("float", float):
                    kw[f.name] = float(v)
                else:
                    kw[f.name] = v
        return cls(**kw)


def augmented_features(features, positional):
    pf = getattr(positional, "matrix", positional)
    return np.concatenate([np.asarray(features, dtype=np.float64), pf], axis=1)


def fit_teacher(g: Graph, cfg: PipelineConfig) -> EmbeddingSet:
    """GAE teacher on ``g``, standardized per dimension."""
    res = train_gae(g, cfg.teacher_config(), hidden=cfg.teacher_hidden, out_dim=cfg.rep_dim)
    return standardize(res.embeddings)


def fit_positional(g: Graph, cfg: PipelineConfig):
    return deepwalk(g, dim=cfg.pos_dim, walks_per_node=cfg.walks_per_node,
                    walk_length=cfg.walk_length, window=cfg.window,
                    epochs=cfg.skipgram_epochs, seed=cfg.seed)


@dataclass
class StageTwo:
    assistant: NoisePredictor
    assistant_errors: list
    student: Mlp
    report: DistillReport


def fit_assistant(teacher, x_cond, cfg: PipelineConfig, sched=None):
    sched = sched or cfg.schedule()
    return train_assistant(teacher, x_cond, sched, cfg.assistant_config())


def fit_student(assistant, teacher, x_cond, cfg: PipelineConfig, sched=None, seed=None):
    sched = sched or cfg.schedule()
    seed = cfg.seed if seed is None else seed
    stu = make_student(x_cond.shape[1], cfg.rep_dim, cfg.student_hidden, cfg.student_layers, seed=seed)
    return train_student(stu, assistant, teacher, x_cond, sched, cfg.distill_config(seed=seed))


def fit_mse_student(teacher, x_cond, cfg: PipelineConfig, seed=None):
    seed = cfg.seed if seed is None else seed
    stu = make_student(x_cond.shape[1], cfg.rep_dim, cfg.student_hidden, cfg.student_layers, seed=seed)
    return train_student_mse_baseline(stu, teacher, x_cond, cfg.distill_config(seed=seed, early_stop=False))


def run_stage_two(teacher, x_cond, cfg: PipelineConfig) -> StageTwo:
    sched = cfg.schedule()
    ar = fit_assistant(teacher, x_cond, cfg, sched)
    stu, report = fit_student(ar.predictor, teacher, x_cond, cfg, sched)
    return StageTwo(ar.predictor, ar.errors, stu, report)


def label_split_for(g: Graph, seed=0, split=None) -> LabelSplit:
    return split if split is not None else stratified_split(g.labels, seed=seed)


# --------------------------------------------------------------------------
# studies
# --------------------------------------------------------------------------

def hyperparameter_sweep(param, values, teacher, x_cond, labels, split, cfg: PipelineConfig, runs=5):
    """Re-run stage one and two for each value of ``param`` (T, s or layers)."""
    rows = []
    for v in values:
        if param == "T":
            c = replace(cfg, T=int(v))
        elif param == "s":
            c = replace(cfg, s=float(v))
        elif param == "layers":
            c = replace(cfg, student_layers=int(v))
        else:
            raise ValueError(f"cannot sweep {param!r}; choose T, s or layers")
        st = run_stage_two(teacher, x_cond, c)
        res = eval_node_classification(st.student(x_cond), labels, split, runs=runs, seed=c.seed)
        rows.append((v, res))
    return rows


def assistant_perturbation_study(assistant: NoisePredictor, teacher, x_cond, labels, split,
                                 cfg: PipelineConfig, sigmas=(0.0, 0.01, 0.05, 0.1, 0.5),
                                 runs=5, error_draws=5):
    """Rows of ``(sigma, noise_prediction_error, student_f1)``."""
    sched = cfg.schedule()
    rows = []
    for sigma in sigmas:
        pert = perturb_predictor(assistant, sigma, seed=cfg.seed)
        err = denoising_error(pert, teacher, x_cond, sched, seed=cfg.seed, draws=error_draws)
        stu, _ = fit_student(pert, teacher, x_cond, cfg, sched)
        f1 = eval_node_classification(stu(x_cond), labels, split, runs=runs, seed=cfg.seed).mean
        rows.append((float(sigma), err, f1))
    return rows


def study_summary(rows):
    sig = [r[0] for r in rows]
    return {"rank_corr_sigma_error": rank_correlation(sig, [r[1] for r in rows]),
            "rank_corr_error_f1": rank_correlation([r[1] for r in rows], [r[2] for r in rows])}


@dataclass
class InductiveResult:
    observed_test: EvalResult
    unobserved_test: EvalResult
    teacher_observed_test: EvalResult


def run_inductive(g: Graph, cfg: PipelineConfig, unobserved_frac=0.2, split=None, runs=5):
    """Hide a share of test nodes (and their edges) during every training stage,
    then embed them with the student at inference time."""
    split = label_split_for(g, cfg.seed, split)
    ns, pruned = split_nodes_inductive(g, unobserved_frac, cfg.seed, split)
    obs = ns.observed
    raw = train_gae(pruned, cfg.teacher_config(), hidden=cfg.teacher_hidden, out_dim=cfg.rep_dim)
    t_obs = standardize(EmbeddingSet(raw.embeddings.matrix[obs]))
    pf = inductive_positional(fit_positional(pruned, cfg), g, ns.unobserved)
    X = augmented_features(g.features, pf)
    st = run_stage_two(t_obs.matrix, X[obs], cfg)
    Z = st.student(X)
    hidden = np.zeros(g.n_nodes, bool)
    hidden[ns.unobserved] = True
    obs_split = LabelSplit(split.train, split.val, split.test[~hidden[split.test]])
    unobs_split = LabelSplit(split.train, split.val, ns.unobserved)
    tz = np.zeros((g.n_nodes, t_obs.dim))
    tz[obs] = t_obs.matrix
    return InductiveResult(
        eval_node_classification(Z, g.labels, obs_split, runs=runs, seed=cfg.seed),
        eval_node_classification(Z, g.labels, unobs_split, runs=runs, seed=cfg.seed),
        eval_node_classification(tz, g.labels, obs_split, runs=runs, seed=cfg.seed),
    )
