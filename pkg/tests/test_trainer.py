import math

import numpy as np
import pytest

from fairbound.dataset import Dataset
from fairbound.exceptions import ConvergenceError
from fairbound.model import LinearModel, distance
from fairbound.trainer import (
    LossConstants,
    constants,
    erm_sensitivity,
    fit_erm,
    gradient,
    loss,
    objective_gradient,
)

from conftest import make_dataset, random_dataset


class TestLoss:
    def test_zero_model_is_log_num_labels(self, rng):
        d = random_dataset(rng, 10)
        m = LinearModel(np.zeros((2, 3)), 1.0)
        assert loss(m, d, 1e-9) == pytest.approx(math.log(2.0), abs=1e-12)
        d3 = random_dataset(rng, 12, num_labels=3)
        m3 = LinearModel(np.zeros((3, 3)), 1.0)
        assert loss(m3, d3, 1e-9) == pytest.approx(math.log(3.0), abs=1e-12)

    def test_dominant_logit_leaves_only_ridge(self):
        # single example, correct logit ahead by 50: cross-entropy < 2e-22
        x = np.array([1.0, 1.0])
        d = make_dataset(np.array([x]), [0], [0], num_labels=2, num_sensitive=1)
        w = np.array([[25.0, 0.0], [0.0, -25.0]])  # scores (25, -25)
        m = LinearModel(w, 100.0)
        lam = 0.5
        assert loss(m, d, lam) == pytest.approx(0.5 * lam * np.sum(w**2), abs=1e-10)


class TestGradient:
    def test_finite_differences(self, rng):
        d = random_dataset(rng, 5)
        lam = 0.7
        for _ in range(20):
            w = rng.normal(size=(2, 3))
            m = LinearModel(w, 100.0)
            ex = d.example(int(rng.integers(d.n)))
            g = gradient(m, ex, lam)
            h = 1e-5
            for i in range(2):
                for j in range(3):
                    wp, wm = w.copy(), w.copy()
                    wp[i, j] += h
                    wm[i, j] -= h
                    dsingle = make_dataset(np.array([ex.features]), [ex.sensitive], [ex.label],
                                           num_labels=2, num_sensitive=2)
                    fp = loss(LinearModel(wp, 100.0), dsingle, lam)
                    fm = loss(LinearModel(wm, 100.0), dsingle, lam)
                    fd = (fp - fm) / (2 * h)
                    assert g[i, j] == pytest.approx(fd, rel=1e-6, abs=1e-8)

    def test_zero_model_binary_true_row(self):
        x = np.array([1.0, 0.0, 0.0])
        d = make_dataset(np.array([x]), [0], [0], num_sensitive=1)
        m = LinearModel(np.zeros((2, 3)), 1.0)
        g = gradient(m, d.example(0), lam=1e-12)
        assert np.allclose(g[0], -0.5 * x, atol=1e-12)

    def test_degenerate_zero_input(self):
        x = np.zeros(2)
        d = make_dataset(np.array([x]), [0], [0], num_sensitive=1)
        m = LinearModel(np.zeros((2, 2)), 1.0)
        g = gradient(m, d.example(0), lam=1e-300)
        assert np.allclose(g, 0.0, atol=1e-300)


class TestFitErm:
    def test_gradient_norm_postcondition(self, desk_data):
        m = fit_erm(desk_data, lam=1.0, tol=1e-8)
        gn = np.linalg.norm(objective_gradient(m.weights, desk_data, 1.0))
        assert gn <= 1e-8

    def test_duplication_invariance(self, rng):
        # duplicating every example leaves the objective unchanged, so the
        # optima agree up to optimizer precision: ||h1 - h2|| <= 2*tol/lam
        d = random_dataset(rng, 15)
        doubled = d.subset(np.concatenate([np.arange(d.n), np.arange(d.n)]))
        lam, tol = 0.5, 1e-10
        m1 = fit_erm(d, lam=lam, tol=tol)
        m2 = fit_erm(doubled, lam=lam, tol=tol)
        assert distance(m1, m2) <= 2 * tol / lam

    def test_bit_identical_reruns(self, rng):
        d = random_dataset(rng, 25)
        m1 = fit_erm(d, lam=1.0)
        m2 = fit_erm(d, lam=1.0)
        assert np.array_equal(m1.weights, m2.weights)

    def test_default_radius_doubles_norm(self, desk_data):
        m = fit_erm(desk_data, lam=1.0)
        assert m.radius == pytest.approx(2 * np.linalg.norm(m.weights))

    def test_convergence_error_carries_norm(self, desk_data):
        with pytest.raises(ConvergenceError) as err:
            fit_erm(desk_data, lam=1.0, tol=1e-10, max_iters=2)
        assert err.value.gradient_norm > 0

    def test_monotone_loss_decrease(self, rng):
        d = random_dataset(rng, 40)
        losses = []
        fit_erm(d, lam=1.0, tol=1e-9, callback=lambda it, lo, gn: losses.append(lo))
        assert len(losses) > 2
        assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))

    def test_accuracy_floor_on_separated_blobs(self, desk_data):
        # frozen regression: means +-2 with unit covariance train to > 0.9
        from fairbound.model import predict_many

        m = fit_erm(desk_data, lam=1.0)
        acc = np.mean(predict_many(m, desk_data.features) == desk_data.labels)
        assert acc > 0.9


class TestConstants:
    def test_formula_values(self, rng):
        d = random_dataset(rng, 10)
        b = d.feature_norm_bound
        c = constants(d, lam=1.0, radius=2.0)
        assert c.loss_lipschitz == pytest.approx(math.sqrt(2) * b + 2.0)
        assert c.smoothness == pytest.approx(b**2 + 1.0)
        assert c.strong_convexity == 1.0

    def test_zero_feature_degenerate(self):
        d = make_dataset(np.zeros((3, 2)), [0, 1, 0], [0, 1, 0])
        c = constants(d, lam=0.5, radius=3.0)
        assert c.loss_lipschitz == pytest.approx(0.5 * 3.0)
        assert c.smoothness == pytest.approx(0.5)

    def test_lipschitz_bounds_gradient_norm(self, rng):
        # Monte-Carlo certificate over models in the ball
        d = random_dataset(rng, 20)
        radius = 2.0
        c = constants(d, lam=1.0, radius=radius)
        for _ in range(2000):
            w = rng.normal(size=(2, d.p))
            w *= rng.uniform(0, radius) / max(np.linalg.norm(w), 1e-12)
            m = LinearModel(w, radius)
            ex = d.example(int(rng.integers(d.n)))
            g = gradient(m, ex, 1.0)
            assert np.linalg.norm(g) <= c.loss_lipschitz + 1e-9


class TestStrongConvexity:
    def test_certificate(self, rng):
        d = random_dataset(rng, 30)
        lam = 0.8
        for _ in range(100):
            wa = rng.normal(size=(2, d.p))
            wb = rng.normal(size=(2, d.p))
            ma, mb = LinearModel(wa, 100.0), LinearModel(wb, 100.0)
            fa, fb = loss(ma, d, lam), loss(mb, d, lam)
            grad_a = objective_gradient(wa, d, lam)
            inner = float(np.sum(grad_a * (wb - wa)))
            assert fb >= fa + inner + 0.5 * lam * distance(ma, mb) ** 2 - 1e-9


class TestSensitivity:
    def test_neighboring_pairs_within_bound(self, rng):
        # smaller sibling of the acceptance criterion: 10 pairs, n=80
        n, lam, tol = 80, 1.0, 1e-10
        d = random_dataset(rng, n)
        base = fit_erm(d, lam, tol=tol)
        for _ in range(10):
            i = int(rng.integers(n))
            features = d.features.copy()
            features[i, :-1] = rng.normal(size=d.p - 1)
            labels = d.labels.copy()
            labels[i] = rng.integers(2)
            d2 = make_dataset(features, d.sensitive, labels)
            other = fit_erm(d2, lam, tol=tol)
            b = max(d.feature_norm_bound, d2.feature_norm_bound)
            radius = max(np.linalg.norm(base.weights), np.linalg.norm(other.weights))
            lipschitz = math.sqrt(2) * b + lam * radius
            assert distance(base, other) <= 2 * lipschitz / (lam * n) + 2 * tol / lam
