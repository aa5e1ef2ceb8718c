"""Command-line front end.

Every stage reads and writes artifacts inside one run directory (``--out``)
and leaves a ``<stage>.run`` key=value manifest next to them. Manifests list
the resolved configuration, the dataset hash and sha256 hashes of every
artifact consumed and produced, so a downstream stage can tell when an
upstream artifact was rebuilt or edited after it was used.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import NonFiniteError, Mlp, load_checkpoint, save_checkpoint
from .diffusion import TIME_EMBED_DIM, NoisePredictor
from .evaluate import (count_inversions, eval_link_prediction, eval_node_classification,
                       fgsm_robustness, gaussian_robustness, pca_2d_export, rank_correlation)
from .graph import (GraphFormatError, generate_sbm, homophily_rate, import_linqs, load_dataset,
                    read_kv, split_edges, stratified_split, write_graph, write_kv)
from .pipeline import (PipelineConfig, assistant_perturbation_study, augmented_features, fit_assistant,
                       fit_mse_student, fit_positional, fit_student, hyperparameter_sweep, run_inductive)
from .teacher import EmbeddingSet, load_embeddings, save_embeddings, standardize, train_gae

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

# artifact name -> (producing stage, file name)
ARTIFACTS = {
    "positional": ("deepwalk", "positional.emb"),
    "teacher": ("train-teacher", "teacher.emb"),
    "teacher_gcn": ("train-teacher", "teacher_gcn.ckpt"),
    "assistant": ("train-assistant", "assistant.ckpt"),
    "assistant_errors": ("train-assistant", "assistant_errors.csv"),
    "student": ("distill", "student.ckpt"),
    "student_emb": ("distill", "student.emb"),
    "distill_report": ("distill", "distill_report.csv"),
    "baseline": ("distill-mse", "baseline.ckpt"),
    "baseline_emb": ("distill-mse", "baseline.emb"),
}
# keys a consumer of the assistant must agree with
SCHEDULE_KEYS = ("T", "s", "schedule_mode")


class UsageError(Exception):
    pass


class StageError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# configuration & artifact bookkeeping
# --------------------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dataset_hash(manifest) -> str:
    """Hash of the dataset manifest plus every file it references."""
    manifest = Path(manifest)
    kv = read_kv(manifest)
    h = hashlib.sha256(manifest.read_bytes())
    for key in ("edges", "features", "labels", "splits"):
        if key in kv:
            h.update(key.encode())
            h.update(sha256_file(manifest.parent / kv[key]).encode())
    return h.hexdigest()


def _manifest_path(data):
    """A dataset directory holding exactly one ``*.manifest`` stands for that file."""
    if data is None or not Path(data).is_dir():
        return data
    found = sorted(Path(data).glob("*.manifest"))
    if len(found) != 1:
        raise UsageError(f"{data} holds {len(found)} dataset manifests; pass one file")
    return str(found[0])


class RunConfig:
    """PipelineConfig plus dataset path, output directory and the LP hold-out switch."""

    def __init__(self, pipeline: PipelineConfig, data=None, out=None, lp_holdout=False):
        self.pipeline = pipeline
        self.data = data
        self.out = Path(out) if out is not None else None
        self.lp_holdout = lp_holdout
        if pipeline.T < 1:
            raise UsageError("T must be >= 1")
        if pipeline.s <= 0:
            raise UsageError("offset s must be > 0")

    def entries(self):
        d = {k: _fmt_value(v) for k, v in self.pipeline.to_dict().items()}
        d["lp_holdout"] = "true" if self.lp_holdout else "false"
        if self.data is not None:
            d["data"] = str(self.data)
        return d


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


FLAG_KEYS = {"seed": "seed", "T": "T", "s": "s", "lr": "lr", "wd": "wd", "draws": "draws",
             "schedule_mode": "schedule_mode"}
EPOCH_KEY = {"deepwalk": "skipgram_epochs", "train-teacher": "teacher_epochs",
             "train-assistant": "assistant_epochs", "distill": "student_epochs",
             "sweep": "student_epochs", "perturb-study": "student_epochs",
             "inductive": "student_epochs"}


def resolve_config(args) -> RunConfig:
    """Flags override manifest values, which override defaults."""
    base = {}
    if getattr(args, "config", None):
        try:
            raw = read_kv(args.config)
        except OSError as e:
            raise UsageError(f"cannot read config {args.config}: {e.strerror}")
        base = {k: v for k, v in raw.items() if "." not in k and k not in ("stage", "data_sha256")}
    for flag, key in FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    if getattr(args, "epochs", None) is not None and args.command in EPOCH_KEY:
        base[EPOCH_KEY[args.command]] = args.epochs
    if getattr(args, "no_early_stop", False):
        base["early_stop"] = False
    try:
        pipe = PipelineConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad configuration value: {e}")
    data = _manifest_path(getattr(args, "data", None) or base.get("data"))
    lp = getattr(args, "lp_holdout", False) or str(base.get("lp_holdout", "false")).lower() == "true"
    return RunConfig(pipe, data, getattr(args, "out", None), lp)


def _run_path(out: Path, stage):
    return out / f"{stage}.run"


def write_run_manifest(rc: RunConfig, stage, inputs: dict, outputs: dict):
    entries = {"stage": stage, **rc.entries()}
    if rc.data is not None:
        entries["data_sha256"] = dataset_hash(rc.data)
    for name in sorted(inputs):
        entries[f"input.{name}"] = sha256_file(inputs[name])
    for name in sorted(outputs):
        entries[f"output.{name}"] = sha256_file(outputs[name])
    write_kv(_run_path(rc.out, stage), entries)


def require(rc: RunConfig, name) -> Path:
    """Path of artifact ``name`` after checking it is present and current."""
    stage, fname = ARTIFACTS[name]
    path = rc.out / fname
    run = _run_path(rc.out, stage)
    if not path.exists() or not run.exists():
        raise StageError(f"missing {name} artifact ({path}); run the '{stage}' stage first")
    kv = read_kv(run)
    if kv.get(f"output.{name}") != sha256_file(path):
        raise StageError(f"{path} changed after the '{stage}' stage wrote it; rerun '{stage}'")
    if rc.data is not None and kv.get("data_sha256") not in (None, dataset_hash(rc.data)):
        raise StageError(f"'{stage}' was run on a different dataset; rerun '{stage}'")
    for key, digest in kv.items():
        if key.startswith("input."):
            up = key[len("input."):]
            if up in ARTIFACTS:
                up_path = rc.out / ARTIFACTS[up][1]
                if not up_path.exists() or sha256_file(up_path) != digest:
                    raise StageError(f"'{stage}' output is stale: {up} was rebuilt since; rerun '{stage}'")
    if name == "assistant":
        for k in SCHEDULE_KEYS:
            if k in kv and kv[k] != rc.entries()[k]:
                raise StageError(f"assistant was trained with {k}={kv[k]} but {k}={rc.entries()[k]} "
                                 f"was requested; rerun 'train-assistant'")
    return path


def _stage_lp_holdout(rc: RunConfig, stage):
    kv = read_kv(_run_path(rc.out, stage))
    return kv.get("lp_holdout", "false") == "true"


def load_data(rc: RunConfig):
    if rc.data is None:
        raise UsageError("--data (dataset manifest) is required")
    if not Path(rc.data).exists():
        raise StageError(f"dataset manifest {rc.data} not found; create it with gen-synthetic or import-linqs")
    return load_dataset(rc.data)


def training_graph(g, rc: RunConfig):
    """With LP hold-out on, representation learners only see the training edges."""
    if not rc.lp_holdout:
        return g
    return g.with_edges(split_edges(g, seed=rc.pipeline.seed).train)


def _out_dir(rc: RunConfig):
    if rc.out is None:
        raise UsageError("--out is required")
    try:
        rc.out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StageError(f"cannot create output directory {rc.out}: {e.strerror}")
    return rc.out


def write_table(path, header, rows):
    """Deterministic CSV: fixed column order, floats with 17 significant digits."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.17g}"
        return str(v)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(cell(v) for v in r) + "\n")


def _label_split(g, split, seed):
    if g.labels is None:
        raise StageError("the dataset has no labels; node classification needs a labels file")
    return split if split is not None else stratified_split(g.labels, seed=seed)


def _conditioning(rc, g):
    pf = load_embeddings(require(rc, "positional"), n_nodes=g.n_nodes).matrix
    return pf, augmented_features(g.features, pf)


def _teacher(rc, g):
    return load_embeddings(require(rc, "teacher"), n_nodes=g.n_nodes).matrix


def _assistant(rc, rep_dim):
    mlp = load_checkpoint(require(rc, "assistant"))
    return NoisePredictor(mlp, rep_dim, mlp.in_dim - rep_dim - TIME_EMBED_DIM)


def _embedding_path(rc, which):
    key = {"teacher": "teacher", "positional": "positional", "student": "student_emb",
           "baseline": "baseline_emb"}.get(which)
    if key is None:
        p = Path(which)
        if not p.exists():
            raise StageError(f"embedding file {which} not found")
        return p, None
    return require(rc, key), ARTIFACTS[key][0]


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_gen_synthetic(args, rc):
    out = _out_dir(rc)
    g = generate_sbm(args.n_per_block, args.blocks, args.p_in, args.p_out, args.dim, args.signal,
                     rc.pipeline.seed)
    path = write_graph(g, out, args.name)
    print(f"wrote {path}: {g.n_nodes} nodes, {g.n_edges} edges, homophily "
          f"{homophily_rate(g) if g.n_edges else float('nan'):.4f}")


def cmd_import_linqs(args, rc):
    out = _out_dir(rc)
    for p in (args.cites, args.content):
        if not Path(p).exists():
            raise StageError(f"{p} not found")
    path = import_linqs(args.cites, args.content, out, args.name)
    g, _ = load_dataset(path)
    print(f"wrote {path}: {g.n_nodes} nodes, {g.n_edges} edges, {g.n_features} features, "
          f"{g.n_classes} classes, homophily {homophily_rate(g):.4f}")


def cmd_deepwalk(args, rc):
    out = _out_dir(rc)
    g, _ = load_data(rc)
    pf = fit_positional(training_graph(g, rc), rc.pipeline)
    path = out / ARTIFACTS["positional"][1]
    save_embeddings(EmbeddingSet(pf.matrix, "positional"), path)
    write_run_manifest(rc, "deepwalk", {}, {"positional": path})
    print(f"positional features {pf.matrix.shape} -> {path}")


def cmd_train_teacher(args, rc):
    out = _out_dir(rc)
    g, _ = load_data(rc)
    path = out / ARTIFACTS["teacher"][1]
    outputs = {"teacher": path}
    if args.from_file:
        raw = load_embeddings(args.from_file, n_nodes=g.n_nodes, tag="teacher")
        save_embeddings(standardize(raw), path)
    else:
        cfg = rc.pipeline
        res = train_gae(training_graph(g, rc), cfg.teacher_config(), hidden=cfg.teacher_hidden,
                        out_dim=cfg.rep_dim)
        save_embeddings(standardize(res.embeddings), path)
        ck = out / ARTIFACTS["teacher_gcn"][1]
        enc = res.encoder
        save_checkpoint(Mlp(enc.weights, [np.zeros(w.shape[1]) for w in enc.weights]), ck)
        outputs["teacher_gcn"] = ck
        print(f"GAE loss {res.losses[0]:.4f} -> {res.losses[-1]:.4f}")
    write_run_manifest(rc, "train-teacher", {}, outputs)
    print(f"teacher representations -> {path}")


def cmd_train_assistant(args, rc):
    out = _out_dir(rc)
    g, _ = load_data(rc)
    H = _teacher(rc, g)
    _, X = _conditioning(rc, g)
    ar = fit_assistant(H, X, rc.pipeline)
    ck = out / ARTIFACTS["assistant"][1]
    save_checkpoint(ar.predictor.mlp, ck)
    errs = out / ARTIFACTS["assistant_errors"][1]
    write_table(errs, ["epoch", "noise_error"], [(i, e) for i, e in enumerate(ar.errors, 1)])
    write_run_manifest(rc, "train-assistant",
                       {"teacher": out / ARTIFACTS["teacher"][1], "positional": out / ARTIFACTS["positional"][1]},
                       {"assistant": ck, "assistant_errors": errs})
    print(f"assistant noise error {ar.errors[0]:.4f} -> {ar.errors[-1]:.4f}; checkpoint -> {ck}")


def cmd_distill(args, rc):
    out = _out_dir(rc)
    g, _ = load_data(rc)
    H = _teacher(rc, g)
    _, X = _conditioning(rc, g)
    inputs = {"teacher": out / ARTIFACTS["teacher"][1], "positional": out / ARTIFACTS["positional"][1]}
    if args.method == "mse":
        stu = fit_mse_student(H, X, rc.pipeline)
        ck, emb = out / ARTIFACTS["baseline"][1], out / ARTIFACTS["baseline_emb"][1]
        save_checkpoint(stu, ck)
        save_embeddings(EmbeddingSet(stu(X), "student"), emb)
        write_run_manifest(rc, "distill-mse", inputs, {"baseline": ck, "baseline_emb": emb})
        print(f"MSE baseline student -> {ck}")
        return
    npred = _assistant(rc, H.shape[1])
    inputs["assistant"] = out / ARTIFACTS["assistant"][1]
    stu, report = fit_student(npred, H, X, rc.pipeline)
    ck, emb = out / ARTIFACTS["student"][1], out / ARTIFACTS["student_emb"][1]
    rep = out / ARTIFACTS["distill_report"][1]
    save_checkpoint(stu, ck)
    save_embeddings(EmbeddingSet(stu(X), "student"), emb)
    rep.write_text(report.to_csv())
    write_run_manifest(rc, "distill", inputs, {"student": ck, "student_emb": emb, "distill_report": rep})
    print(f"student trained {len(report.mse)} epochs, final mse {report.mse[-1]:.5f} -> {ck}")


def cmd_eval_nc(args, rc):
    out = _out_dir(rc)
    g, split = load_data(rc)
    split = _label_split(g, split, rc.pipeline.seed)
    path, _ = _embedding_path(rc, args.emb)
    emb = load_embeddings(path, n_nodes=g.n_nodes)
    res = eval_node_classification(emb, g.labels, split, runs=args.runs, seed=rc.pipeline.seed)
    table = out / f"eval_nc_{Path(args.emb).stem}.csv"
    write_table(table, ["run", "micro_f1"], [(i, v) for i, v in enumerate(res.values)])
    write_run_manifest(rc, f"eval-nc-{Path(args.emb).stem}", {"embedding": path}, {"table": table})
    print(f"micro-F1 {res.mean:.4f} +- {res.std:.4f} over {args.runs} runs -> {table}")


def cmd_eval_lp(args, rc):
    out = _out_dir(rc)
    g, _ = load_data(rc)
    path, stage = _embedding_path(rc, args.emb)
    holdout = _stage_lp_holdout(rc, stage) if stage else rc.lp_holdout
    if stage == "distill" or stage == "distill-mse":
        holdout = _stage_lp_holdout(rc, "train-teacher") and _stage_lp_holdout(rc, "deepwalk")
    if not holdout:
        raise StageError(f"{args.emb} representations were trained on all edges; rerun the upstream "
                         f"stages with --lp-holdout before link-prediction evaluation")
    emb = load_embeddings(path, n_nodes=g.n_nodes)
    res = eval_link_prediction(emb, split_edges(g, seed=rc.pipeline.seed))
    table = out / f"eval_lp_{Path(args.emb).stem}.csv"
    write_table(table, ["metric", "value"], [("auc_roc", res.mean)])
    write_run_manifest(rc, f"eval-lp-{Path(args.emb).stem}", {"embedding": path}, {"table": table})
    print(f"AUC-ROC {res.mean:.4f} -> {table}")


def cmd_robustness(args, rc):
    out = _out_dir(rc)
    g, split = load_data(rc)
    split = _label_split(g, split, rc.pipeline.seed)
    key = "student" if args.model == "student" else "baseline"
    stu = load_checkpoint(require(rc, key))
    pf, _ = _conditioning(rc, g)
    seed = rc.pipeline.seed
    if args.attack == "gaussian":
        res = gaussian_robustness(lambda F: stu(augmented_features(F, pf)), g.features, g.labels, split,
                                  args.alphas, seed=seed, runs=args.runs)
    else:
        res = fgsm_robustness(stu, _teacher(rc, g), g.features, pf, g.labels, split, args.alphas,
                              seed=seed, runs=args.runs)
    table = out / f"robustness_{args.attack}_{args.model}.csv"
    write_table(table, ["alpha", "micro_f1_mean", "micro_f1_std"],
                [(float(a), r.mean, r.std) for a, r in zip(args.alphas, res)])
    write_run_manifest(rc, f"robustness-{args.attack}-{args.model}",
                       {key: out / ARTIFACTS[key][1]}, {"table": table})
    for a, r in zip(args.alphas, res):
        print(f"alpha={a:g} micro-F1 {r.mean:.4f}")


def cmd_sweep(args, rc):
    out = _out_dir(rc)
    g, split = load_data(rc)
    split = _label_split(g, split, rc.pipeline.seed)
    H = _teacher(rc, g)
    _, X = _conditioning(rc, g)
    rows = hyperparameter_sweep(args.param, args.values, H, X, g.labels, split, rc.pipeline, runs=args.runs)
    table = out / f"sweep_{args.param}.csv"
    write_table(table, [args.param, "micro_f1_mean", "micro_f1_std"],
                [(_fmt_value(v), r.mean, r.std) for v, r in rows])
    write_run_manifest(rc, f"sweep-{args.param}",
                       {"teacher": out / ARTIFACTS["teacher"][1], "positional": out / ARTIFACTS["positional"][1]},
                       {"table": table})
    for v, r in rows:
        print(f"{args.param}={v} micro-F1 {r.mean:.4f}")


def cmd_perturb_study(args, rc):
    out = _out_dir(rc)
    g, split = load_data(rc)
    split = _label_split(g, split, rc.pipeline.seed)
    H = _teacher(rc, g)
    _, X = _conditioning(rc, g)
    npred = _assistant(rc, H.shape[1])
    rows = assistant_perturbation_study(npred, H, X, g.labels, split, rc.pipeline, sigmas=args.sigmas,
                                        runs=args.runs)
    table = out / "perturb_study.csv"
    write_table(table, ["sigma", "noise_error", "micro_f1"], rows)
    write_run_manifest(rc, "perturb-study", {"assistant": out / ARTIFACTS["assistant"][1]}, {"table": table})
    print(f"rank corr(sigma, error) {rank_correlation(args.sigmas, [r[1] for r in rows]):.3f}; "
          f"F1 inversions {count_inversions([r[2] for r in rows])}")


def cmd_inductive(args, rc):
    out = _out_dir(rc)
    g, split = load_data(rc)
    split = _label_split(g, split, rc.pipeline.seed)
    res = run_inductive(g, rc.pipeline, args.unobserved, split, runs=args.runs)
    table = out / "inductive.csv"
    write_table(table, ["setting", "micro_f1_mean", "micro_f1_std"],
                [("teacher_observed", res.teacher_observed_test.mean, res.teacher_observed_test.std),
                 ("student_observed", res.observed_test.mean, res.observed_test.std),
                 ("student_unobserved", res.unobserved_test.mean, res.unobserved_test.std)])
    write_run_manifest(rc, "inductive", {}, {"table": table})
    print(f"student observed {res.observed_test.mean:.4f}, unobserved {res.unobserved_test.mean:.4f}")


def cmd_pca_export(args, rc):
    out = _out_dir(rc)
    g, _ = load_data(rc)
    path, _ = _embedding_path(rc, args.emb)
    rows, _, var = pca_2d_export(load_embeddings(path, n_nodes=g.n_nodes), g.labels, seed=rc.pipeline.seed)
    table = out / f"pca_{Path(args.emb).stem}.csv"
    write_table(table, ["x", "y", "label"], rows)
    write_run_manifest(rc, f"pca-{Path(args.emb).stem}", {"embedding": path}, {"table": table})
    print(f"explained variance {var[0]:.4f}, {var[1]:.4f} -> {table}")


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic, "import-linqs": cmd_import_linqs, "deepwalk": cmd_deepwalk,
    "train-teacher": cmd_train_teacher, "train-assistant": cmd_train_assistant, "distill": cmd_distill,
    "eval-nc": cmd_eval_nc, "eval-lp": cmd_eval_lp, "robustness": cmd_robustness, "sweep": cmd_sweep,
    "perturb-study": cmd_perturb_study, "inductive": cmd_inductive, "pca-export": cmd_pca_export,
}


def _float_list(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--steps", "-T", dest="T", type=int, help="diffusion steps")
    common.add_argument("--offset", "-s", dest="s", type=float, help="cosine schedule offset")
    common.add_argument("--epochs", type=int, help="epochs of this subcommand's training stage")
    common.add_argument("--lr", type=float)
    common.add_argument("--wd", type=float)
    common.add_argument("--draws", type=int, help="(t, eps) draws per node per epoch")
    common.add_argument("--schedule-mode", choices=("product", "ratio"))
    common.add_argument("--no-early-stop", action="store_true")
    common.add_argument("--lp-holdout", action="store_true",
                        help="train representations on the training edges only")
    common.add_argument("--data", help="dataset manifest")
    common.add_argument("--config", help="key=value manifest (e.g. an earlier .run file)")
    common.add_argument("--out", help="run directory")

    p = _Parser(prog="diffdistill", description="Diffusion-assisted distillation of graph representations into MLPs.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-synthetic", parents=[common], help="write an SBM dataset")
    s.add_argument("--name", default="sbm")
    s.add_argument("--blocks", type=int, default=5)
    s.add_argument("--n-per-block", type=int, default=100)
    s.add_argument("--p-in", type=float, default=0.05)
    s.add_argument("--p-out", type=float, default=0.01)
    s.add_argument("--dim", type=int, default=32)
    s.add_argument("--signal", type=float, default=0.3)

    s = sub.add_parser("import-linqs", parents=[common], help="convert .cites/.content files")
    s.add_argument("--cites", required=True)
    s.add_argument("--content", required=True)
    s.add_argument("--name", default="cora")

    sub.add_parser("deepwalk", parents=[common], help="positional features")
    s = sub.add_parser("train-teacher", parents=[common], help="GAE teacher or external embeddings")
    s.add_argument("--from-file", help="ingest teacher representations instead of training a GAE")
    sub.add_parser("train-assistant", parents=[common], help="noise-prediction assistant")
    s = sub.add_parser("distill", parents=[common], help="train the MLP student")
    s.add_argument("--method", choices=("diffusion", "mse"), default="diffusion")

    for name in ("eval-nc", "eval-lp", "pca-export"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--emb", default="student", help="teacher|student|positional|baseline or a file")
        if name == "eval-nc":
            s.add_argument("--runs", type=int, default=5)

    s = sub.add_parser("robustness", parents=[common], help="Gaussian or FGSM attribute attacks")
    s.add_argument("--attack", choices=("gaussian", "fgsm"), default="gaussian")
    s.add_argument("--model", choices=("student", "baseline"), default="student")
    s.add_argument("--alphas", type=_float_list, default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    s.add_argument("--runs", type=int, default=5)

    s = sub.add_parser("sweep", parents=[common], help="retrain stage two across T, s or layers")
    s.add_argument("--param", choices=("T", "s", "layers"), required=True)
    s.add_argument("--values", type=_float_list, required=True)
    s.add_argument("--runs", type=int, default=5)

    s = sub.add_parser("perturb-study", parents=[common], help="perturbed-assistant study")
    s.add_argument("--sigmas", type=_float_list, default=[0.0, 0.01, 0.05, 0.1, 0.5])
    s.add_argument("--runs", type=int, default=5)

    s = sub.add_parser("inductive", parents=[common], help="hold out test nodes during training")
    s.add_argument("--unobserved", type=float, default=0.2)
    s.add_argument("--runs", type=int, default=5)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep" and args.param in ("T", "layers"):
        if any(v != int(v) for v in args.values):
            print(f"diffdistill: error: --values for {args.param} must be integers", file=sys.stderr)
            return EXIT_USAGE
        args.values = [int(v) for v in args.values]
    try:
        rc = resolve_config(args)
        COMMANDS[args.command](args, rc)
    except UsageError as e:
        print(f"diffdistill: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (StageError, GraphFormatError, NonFiniteError, ValueError, OSError) as e:
        print(f"diffdistill {args.command}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
