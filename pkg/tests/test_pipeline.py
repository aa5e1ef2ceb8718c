import numpy as np
import pytest

from diffdistill.evaluate import eval_node_classification
from diffdistill.graph import stratified_split
from diffdistill.pipeline import (PipelineConfig, assistant_perturbation_study, augmented_features, fit_assistant,
                                  fit_positional, fit_student, fit_teacher, hyperparameter_sweep, run_inductive,
                                  study_summary)

TINY = PipelineConfig(teacher_epochs=20, assistant_epochs=20, student_epochs=20, rep_dim=8, teacher_hidden=16,
                      student_hidden=16, assistant_hidden=16, assistant_layers=2, pos_dim=8, skipgram_epochs=1)


@pytest.fixture(scope="module")
def staged():
    from diffdistill.graph import generate_sbm
    g = generate_sbm(40, 3, 0.2, 0.02, 8, 1.0, seed=0)
    H = fit_teacher(g, TINY).matrix
    X = augmented_features(g.features, fit_positional(g, TINY))
    return g, H, X, stratified_split(g.labels, seed=0)


def test_config_roundtrip_through_strings():
    cfg = PipelineConfig(seed=3, T=7, s=0.01, early_stop=False, lr=1e-3)
    text = {k: str(v) for k, v in cfg.to_dict().items()}
    assert PipelineConfig.from_dict(text) == cfg
    assert PipelineConfig.from_dict({"early_stop": "false", "unknown": "1"}).early_stop is False


def test_config_builders():
    cfg = PipelineConfig(T=5, assistant_layers=2, assistant_hidden=32, draws=2)
    assert cfg.schedule().T == 5
    assert cfg.assistant_config().hidden == (32, 32)
    assert cfg.distill_config(seed=9).seed == 9 and cfg.distill_config().draws == 2


def test_teacher_is_standardized(staged):
    _, H, X, _ = staged
    np.testing.assert_allclose(H.mean(0), 0, atol=1e-10)
    assert X.shape[1] == 8 + TINY.pos_dim


def test_sweep_rows(staged):
    g, H, X, split = staged
    rows = hyperparameter_sweep("T", [1, 5], H, X, g.labels, split, TINY, runs=1)
    assert [v for v, _ in rows] == [1, 5]
    with pytest.raises(ValueError, match="cannot sweep"):
        hyperparameter_sweep("lr", [1], H, X, g.labels, split, TINY)


def test_perturbation_study_zero_sigma_matches_plain_run(staged):
    g, H, X, split = staged
    ar = fit_assistant(H, X, TINY)
    rows = assistant_perturbation_study(ar.predictor, H, X, g.labels, split, TINY, sigmas=(0.0, 0.5), runs=1)
    stu, _ = fit_student(ar.predictor, H, X, TINY)
    assert rows[0][2] == eval_node_classification(stu(X), g.labels, split, runs=1, seed=TINY.seed).mean
    assert rows[1][1] > rows[0][1]
    assert study_summary(rows)["rank_corr_sigma_error"] == pytest.approx(1.0)


def test_inductive_run(staged):
    g, _, _, split = staged
    res = run_inductive(g, TINY, 0.2, split, runs=1)
    n_unobs = int(round(0.2 * len(split.test)))
    assert len(res.unobserved_test.values) == 1
    assert 0.0 <= res.unobserved_test.mean <= 1.0 and 0.0 <= res.observed_test.mean <= 1.0
    assert n_unobs > 0
