"""Penalized logistic regression: penalty, prediction, loss, trainer."""

import math

import numpy as np
import pytest

from quakebox.bench import generate_planted_features
from quakebox.errors import DegenerateLabels, MissingFeature
from quakebox.features import standardize_apply, standardize_fit, to_arrays
from quakebox.model import (
    LinearModel,
    ModelArtifact,
    PenaltyConfig,
    TrainOptions,
    classify,
    lambda_max,
    load_model,
    loss,
    penalty,
    predict_proba,
    save_model,
    soft_threshold,
    train,
)

from conftest import make_vector


def standardized_planted(n=200, seed=0, **kw):
    vecs, informative = generate_planted_features(n, seed=seed, **kw)
    params = standardize_fit(vecs)
    return standardize_apply(vecs, params), informative


class TestPenalty:
    def test_zero_vector(self):
        assert penalty([0.0, 0.0, 0.0], PenaltyConfig(alpha=0.7, lam=5.0)) == 0.0

    def test_mixed_example(self):
        # 0.5*(|1|+|-2|) + 0.5*(1+4) = 4.0
        assert penalty([1.0, -2.0], PenaltyConfig(alpha=0.5, lam=1.0)) == pytest.approx(4.0)

    def test_pure_l1(self):
        assert penalty([3.0, -4.0], PenaltyConfig(alpha=1.0, lam=1.0)) == pytest.approx(7.0)

    def test_lambda_scales(self):
        assert penalty([1.0], PenaltyConfig(alpha=1.0, lam=3.0)) == pytest.approx(3.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PenaltyConfig(alpha=1.5)
        with pytest.raises(ValueError):
            PenaltyConfig(lam=-0.1)


class TestSoftThreshold:
    @pytest.mark.parametrize(
        "z,gamma,expected",
        [(5.0, 2.0, 3.0), (-5.0, 2.0, -3.0), (1.0, 2.0, 0.0), (0.0, 0.0, 0.0), (2.0, 0.0, 2.0)],
    )
    def test_values(self, z, gamma, expected):
        assert soft_threshold(z, gamma) == expected

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -1.0)


class TestPredict:
    def test_zero_model_gives_half(self):
        model = LinearModel(bias=0.0, weights={"a": 0.0})
        assert predict_proba(model, make_vector("t", "noise", a=123.0)) == 0.5

    def test_sigmoid_ln3(self):
        model = LinearModel(bias=0.0, weights={"a": 1.0})
        p = predict_proba(model, make_vector("t", "noise", a=math.log(3.0)))
        assert p == pytest.approx(0.75, abs=1e-12)

    def test_missing_feature(self):
        model = LinearModel(bias=0.0, weights={"a": 1.0})
        with pytest.raises(MissingFeature):
            predict_proba(model, make_vector("t", "noise", b=1.0))

    def test_classify_tie_is_event(self):
        model = LinearModel(bias=0.0, weights={"a": 0.0})
        assert classify(model, make_vector("t", "noise", a=0.0)) == "event"
        assert classify(model, make_vector("t", "noise", a=0.0), threshold=0.51) == "noise"

    def test_threshold_above_probability(self):
        model = LinearModel(bias=2.0, weights={})  # p ~ 0.88
        assert classify(model, make_vector("t", "noise"), threshold=0.95) == "noise"

    def test_scaling_never_flips_at_half(self, rng):
        model = LinearModel(bias=0.3, weights={"a": 1.2, "b": -0.7})
        for _ in range(200):
            vec = make_vector("t", "noise", a=float(rng.standard_normal()), b=float(rng.standard_normal()))
            base = classify(model, vec)
            for c in (1.5, 3.0, 10.0):
                scaled = LinearModel(
                    bias=c * model.bias,
                    weights={k: c * v for k, v in model.weights.items()},
                )
                assert classify(scaled, vec) == base


class TestLoss:
    def test_zero_model_balanced(self):
        data = [make_vector("a", "event", f=1.0), make_vector("b", "noise", f=-1.0)]
        model = LinearModel(bias=0.0, weights={"f": 0.0})
        assert loss(model, data, PenaltyConfig(alpha=0.5, lam=0.0)) == pytest.approx(math.log(2.0))

    def test_zero_weights_ignore_lambda(self):
        data = [make_vector("a", "event", f=1.0), make_vector("b", "noise", f=-1.0)]
        model = LinearModel(bias=0.0, weights={"f": 0.0})
        l0 = loss(model, data, PenaltyConfig(alpha=0.5, lam=0.0))
        l10 = loss(model, data, PenaltyConfig(alpha=0.5, lam=10.0))
        assert l0 == l10

    def test_confident_separator_near_zero(self):
        data = [make_vector("a", "event", f=1.0), make_vector("b", "noise", f=-1.0)]
        model = LinearModel(bias=0.0, weights={"f": 20.0})
        assert loss(model, data, PenaltyConfig(alpha=0.5, lam=0.0)) < 0.01


class TestTrain:
    def test_separable_two_points_perfect_accuracy(self):
        data = [make_vector("a", "event", f=1.0), make_vector("b", "noise", f=-1.0)]
        model = train(data, PenaltyConfig(alpha=0.5, lam=0.0), TrainOptions(max_iters=200, tol=1e-10))
        assert classify(model, data[0]) == "event"
        assert classify(model, data[1]) == "noise"
        assert model.weights["f"] > 0
        assert model.training_meta["converged"] is False  # weights keep growing

    def test_huge_lambda_gives_intercept_only_log_odds(self):
        data = [make_vector(f"e{i}", "event", f=float(i)) for i in range(30)]
        data += [make_vector(f"n{i}", "noise", f=float(-i)) for i in range(10)]
        model = train(data, PenaltyConfig(alpha=1.0, lam=100.0), TrainOptions(tol=1e-12))
        assert model.weights["f"] == 0.0
        assert model.bias == pytest.approx(math.log(30 / 10), abs=1e-6)

    def test_single_class_rejected(self):
        data = [make_vector("a", "event", f=1.0), make_vector("b", "event", f=2.0)]
        with pytest.raises(DegenerateLabels):
            train(data, PenaltyConfig())

    def test_gradient_matches_central_differences(self, rng):
        # at lambda=0 the objective is the smooth mean NLL: check its gradient
        for trial in range(50):
            local = np.random.default_rng(trial)
            n, p = 12, 3
            X = local.standard_normal((n, p))
            y = (local.random(n) < 0.5).astype(float)
            if len(set(y.tolist())) < 2:
                continue
            w = local.standard_normal(p) * 0.5
            b = float(local.standard_normal()) * 0.5

            def nll(wv, bv):
                z = bv + X @ wv
                return float(np.mean(np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0) - y * z))

            # analytic gradient used by the trainer
            probs = 1.0 / (1.0 + np.exp(-(b + X @ w)))
            grad_w = X.T @ (probs - y) / n
            grad_b = float(np.mean(probs - y))
            eps = 1e-6
            for j in range(p):
                step = np.zeros(p)
                step[j] = eps
                fd = (nll(w + step, b) - nll(w - step, b)) / (2 * eps)
                assert grad_w[j] == pytest.approx(fd, rel=1e-6, abs=1e-9)
            fd_b = (nll(w, b + eps) - nll(w, b - eps)) / (2 * eps)
            assert grad_b == pytest.approx(fd_b, rel=1e-6, abs=1e-9)

    def test_objective_non_increasing_per_sweep(self):
        data, _ = standardized_planted(n=150, seed=4)
        history = []
        train(
            data,
            PenaltyConfig(alpha=0.8, lam=0.02),
            TrainOptions(max_iters=300, tol=0.0),
            sweep_callback=history.append,
        )
        assert len(history) == 300
        diffs = np.diff(np.array(history))
        assert np.all(diffs <= 1e-12)

    def test_sparsity_non_increasing_in_lambda(self):
        data, _ = standardized_planted(n=200, seed=5)
        top = lambda_max(data, alpha=1.0)
        grid = np.geomspace(1e-3 * top, 1.2 * top, 10)
        nonzeros = []
        for lam in grid:
            model = train(data, PenaltyConfig(alpha=1.0, lam=float(lam)),
                          TrainOptions(max_iters=400, tol=1e-9))
            nonzeros.append(sum(1 for w in model.weights.values() if w != 0.0))
        assert all(b <= a for a, b in zip(nonzeros, nonzeros[1:]))
        assert nonzeros[-1] == 0  # above lambda_max everything vanishes

    def test_deterministic_bit_identical(self):
        data, _ = standardized_planted(n=120, seed=6)
        cfg = PenaltyConfig(alpha=0.9, lam=0.01)
        opt = TrainOptions(max_iters=200, tol=1e-8, seed=3)
        m1 = train(data, cfg, opt)
        m2 = train(data, cfg, opt)
        assert m1.bias == m2.bias
        assert m1.weights == m2.weights
        assert m1.training_meta == m2.training_meta

    def test_planted_features_recovered_with_sparse_noise(self):
        # search a small grid for a regularization strength that keeps the
        # planted pair while zeroing most nuisance columns
        data, informative = standardized_planted(n=400, seed=7)
        top = lambda_max(data, alpha=0.9)
        found = False
        for lam in np.geomspace(0.5 * top, 0.01 * top, 8):
            model = train(data, PenaltyConfig(alpha=0.9, lam=float(lam)),
                          TrainOptions(max_iters=400, tol=1e-8))
            nz = {c for c, w in model.weights.items() if w != 0.0}
            nuisance = set(model.weights) - set(informative)
            zero_frac = 1.0 - len(nz & nuisance) / len(nuisance)
            if set(informative) <= nz and zero_frac >= 0.8:
                found = True
                break
        assert found, "no lambda in the grid recovered the planted features sparsely"

    def test_matches_convex_solver(self):
        cvxpy = pytest.importorskip("cvxpy")
        data, _ = standardized_planted(n=150, seed=8, n_nuisance=6)
        X, y, codes = to_arrays(data)
        n, p = X.shape
        for alpha in (0.0, 0.5, 1.0):
            cfg = PenaltyConfig(alpha=alpha, lam=0.03)
            mine = train(data, cfg, TrainOptions(max_iters=5000, tol=1e-12))
            w = cvxpy.Variable(p)
            b = cvxpy.Variable()
            z = X @ w + b
            nll = cvxpy.sum(cvxpy.logistic(z) - cvxpy.multiply(y, z)) / n
            objective = nll + cfg.lam * (
                alpha * cvxpy.norm1(w) + (1 - alpha) * cvxpy.sum_squares(w)
            )
            problem = cvxpy.Problem(cvxpy.Minimize(objective))
            problem.solve(solver=cvxpy.CLARABEL)
            assert loss(mine, data, cfg) == pytest.approx(problem.value, abs=1e-7)
            for j, code in enumerate(codes):
                assert mine.weights[code] == pytest.approx(float(w.value[j]), abs=2e-4)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        data, _ = standardized_planted(n=80, seed=9, n_nuisance=4)
        vecs, _ = generate_planted_features(80, seed=9, n_nuisance=4)
        params = standardize_fit(vecs)
        model = train(standardize_apply(vecs, params), PenaltyConfig(alpha=0.9, lam=0.02))
        artifact = ModelArtifact(model=model, standardization=params)
        path = tmp_path / "model.json"
        save_model(path, artifact)
        back = load_model(path)
        assert back.model.bias == model.bias
        assert back.model.weights == dict(model.weights)
        assert back.model.threshold == model.threshold
        assert dict(back.standardization.means) == dict(params.means)
        assert dict(back.standardization.stds) == dict(params.stds)
        assert back.model.training_meta == dict(model.training_meta)

    def test_artifact_predicts_raw_vectors(self):
        vecs, informative = generate_planted_features(300, seed=10, strength=6.0)
        params = standardize_fit(vecs)
        model = train(standardize_apply(vecs, params), PenaltyConfig(alpha=0.5, lam=0.005))
        artifact = ModelArtifact(model=model, standardization=params)
        correct = sum(artifact.predict_label(v) == v.label for v in vecs)
        assert correct / len(vecs) > 0.95
