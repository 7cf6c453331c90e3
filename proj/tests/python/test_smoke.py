import math

import numpy as np
import pytest

import pipefail


def test_score_probabilities_hand_case():
    probs = [0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1]
    labels = [1, 1, 1, 0, 1, 0, 0, 0]
    scores = pipefail.score_probabilities(probs, labels, threshold=0.5)
    assert scores["precision"] == pytest.approx(3 / 4)
    assert scores["recall"] == pytest.approx(3 / 4)
    assert scores["accuracy"] == pytest.approx(6 / 8)
    assert 0.0 < scores["mcc"] <= 1.0
    assert scores["auc"] == pytest.approx(15 / 16)


def test_smote_balances_labels():
    rng = np.random.default_rng(7)
    majority = rng.normal(0.0, 1.0, size=(40, 3))
    minority = rng.normal(3.0, 1.0, size=(8, 3))
    values = np.vstack([majority, minority])
    labels = [0] * 40 + [1] * 8
    balanced, new_labels, synthetic = pipefail.smote_balance(values, labels, seed=3)
    assert synthetic == 32
    assert sum(new_labels) == 40
    assert balanced.shape == (80, 3)


def test_logit_recovers_separation_direction():
    rng = np.random.default_rng(11)
    x = rng.normal(0.0, 1.0, size=(400, 2))
    margin = 2.0 * x[:, 0] - 1.0 * x[:, 1]
    labels = (margin + rng.logistic(size=400) > 0).astype(int).tolist()
    model = pipefail.fit_logit(x, labels, lambda_l1=0.001, max_epochs=2000)
    assert model["converged"]
    assert model["beta"][0] > 0
    assert model["beta"][1] < 0


def test_gbt_predicts_and_explains():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1.0, 1.0, size=(300, 3))
    labels = (x[:, 0] > 0.2).astype(int).tolist()
    probs = pipefail.gbt_fit_predict(x, labels, x, n_trees=20, max_depth=3)
    hits = sum((p > 0.5) == (y == 1) for p, y in zip(probs, labels))
    assert hits / len(labels) > 0.9

    phi, base = pipefail.gbt_shap(x, labels, x[:5], n_trees=10, max_depth=3)
    assert phi.shape == (5, 3)
    assert math.isfinite(base)
    # The informative feature should dominate the attributions.
    means = np.abs(phi).mean(axis=0)
    assert means[0] == max(means)


def test_cox_fit_and_concordance():
    rng = np.random.default_rng(13)
    n = 300
    x = rng.normal(0.0, 1.0, size=(n, 2))
    hazard = np.exp(0.9 * x[:, 0])
    durations = rng.exponential(1.0 / hazard) + 0.01
    censor = rng.exponential(2.0, size=n) + 0.01
    events = (durations <= censor).astype(int)
    observed = np.minimum(durations, censor)
    fit = pipefail.cox_fit(x, observed.tolist(), events.tolist(), lam=1e-6, alpha=1.0)
    assert fit["converged"]
    assert fit["beta"][0] > 0.5
    risk = x @ np.array(fit["beta"])
    c = pipefail.concordance(risk.tolist(), observed.tolist(), events.tolist())
    assert c > 0.6


def test_run_command_round_trip(tmp_path):
    data_dir = tmp_path / "data"
    out_dir = tmp_path / "out"
    synth_cfg = pipefail.config_text(
        out_dir=data_dir,
        synth_pipes=300,
        synth_start_year=2004,
        synth_end_year=2012,
        synth_base_rate=0.04,
        seed=5,
    )
    pipefail.run_command("synth", synth_cfg)
    assert (data_dir / "inventory.csv").exists()
    assert (data_dir / "truth.json").exists()

    cv_cfg = pipefail.config_text(
        data_dir=data_dir,
        out_dir=out_dir,
        horizon_k=2,
        n_folds=2,
        gbt_trees=10,
        gbt_depth=3,
        seed=5,
    )
    pipefail.run_command("cv", cv_cfg)
    scores = (out_dir / "scores.csv").read_text().splitlines()
    assert scores[0] == "horizon_k,threshold,mcc,precision,recall,accuracy,f1,auc"
    assert len(scores) == 2

    with pytest.raises(ValueError):
        pipefail.run_command("nonsense", synth_cfg)
