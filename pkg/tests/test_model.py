import math

import numpy as np
import pytest

from fairbound.model import (
    LinearModel,
    distance,
    load_model,
    margin,
    margins_many,
    pointwise_lipschitz,
    predict,
    project,
    save_model,
)


class TestPredict:
    def test_hand_cases(self):
        m = LinearModel(np.array([[1.0, 0.0], [0.0, 1.0]]), radius=10.0)
        assert predict(m, np.array([2.0, 0.0])) == 0
        assert predict(m, np.array([0.0, 3.0])) == 1

    def test_tie_breaks_to_lowest_id(self):
        m = LinearModel(np.zeros((3, 2)), radius=1.0)
        assert predict(m, np.array([1.0, -1.0])) == 0

    def test_dimension_mismatch(self):
        m = LinearModel(np.zeros((2, 2)), radius=1.0)
        with pytest.raises(ValueError):
            predict(m, np.array([1.0, 2.0, 3.0]))


class TestMargin:
    def test_hand_cases(self):
        m = LinearModel(np.array([[1.0, 0.0], [0.0, 1.0]]), radius=10.0)
        x = np.array([2.0, 0.0])
        assert margin(m, x, 0) == pytest.approx(2.0)
        assert margin(m, x, 1) == pytest.approx(-2.0)  # binary antisymmetry

    def test_zero_model_margin_is_zero(self):
        m = LinearModel(np.zeros((2, 3)), radius=1.0)
        assert margin(m, np.array([1.0, 2.0, 3.0]), 0) == 0.0

    def test_single_label_rejected(self):
        m = LinearModel(np.zeros((1, 2)), radius=1.0)
        with pytest.raises(ValueError):
            margin(m, np.array([1.0, 0.0]), 0)

    def test_sign_matches_prediction(self, rng):
        for _ in range(200):
            m = LinearModel(rng.normal(size=(3, 4)), radius=100.0)
            x = rng.normal(size=4)
            y = int(rng.integers(3))
            rho = margin(m, x, y)
            if rho > 0:
                assert predict(m, x) == y
            elif rho < 0:
                assert predict(m, x) != y

    def test_vectorized_matches_scalar(self, rng):
        m = LinearModel(rng.normal(size=(4, 3)), radius=100.0)
        X = rng.normal(size=(20, 3))
        y = rng.integers(0, 4, 20)
        vec = margins_many(m, X, y)
        for i in range(20):
            assert vec[i] == pytest.approx(margin(m, X[i], int(y[i])), abs=1e-12)


class TestLipschitz:
    def test_hand_values(self):
        assert pointwise_lipschitz(np.array([3.0, 4.0, 0.0])) == pytest.approx(10.0)
        assert pointwise_lipschitz(np.zeros(3)) == 0.0
        assert pointwise_lipschitz(np.ones(4)) == pytest.approx(4.0)

    def test_margin_lipschitz_inequality(self, rng):
        # |margin(m) - margin(m')| <= 2||x|| * distance(m, m'), 1e-9 slack
        for _ in range(300):
            a = LinearModel(rng.normal(size=(3, 4)), radius=100.0)
            b = LinearModel(rng.normal(size=(3, 4)), radius=100.0)
            x = rng.normal(size=4)
            y = int(rng.integers(3))
            gap = abs(margin(a, x, y) - margin(b, x, y))
            assert gap <= pointwise_lipschitz(x) * distance(a, b) + 1e-9


class TestDistance:
    def test_identity_and_single_entry(self):
        a = LinearModel(np.array([[1.0, 2.0], [3.0, 4.0]]), radius=10.0)
        assert distance(a, a) == 0.0
        b = LinearModel(a.weights + np.array([[5.0, 0.0], [0.0, 0.0]]), radius=10.0)
        assert distance(a, b) == pytest.approx(5.0)

    def test_hand_frobenius(self):
        a = LinearModel(np.array([[3.0, 0.0], [0.0, 4.0]]), radius=10.0)
        z = LinearModel(np.zeros((2, 2)), radius=10.0)
        assert distance(a, z) == pytest.approx(5.0)

    def test_shape_mismatch(self):
        a = LinearModel(np.zeros((2, 2)), radius=1.0)
        b = LinearModel(np.zeros((2, 3)), radius=1.0)
        with pytest.raises(ValueError):
            distance(a, b)


class TestProject:
    def test_interior_unchanged(self):
        m = LinearModel(np.array([[2.0, 0.0]]), radius=5.0)
        assert np.array_equal(project(m, 3.0).weights, m.weights)

    def test_radial_scaling(self):
        m = LinearModel(np.array([[0.0, 4.0]]), radius=5.0)
        p = project(m, 2.0)
        assert np.linalg.norm(p.weights) == pytest.approx(2.0)
        assert p.weights[0, 1] > 0  # direction preserved

    def test_zero_fixed_point(self):
        m = LinearModel(np.zeros((2, 2)), radius=1.0)
        assert np.array_equal(project(m, 0.5).weights, np.zeros((2, 2)))

    def test_bad_radius(self):
        m = LinearModel(np.zeros((1, 1)), radius=1.0)
        with pytest.raises(ValueError):
            project(m, 0.0)

    def test_idempotent_and_nonexpansive(self, rng):
        for _ in range(100):
            a = LinearModel(rng.normal(size=(2, 3)), radius=100.0)
            b = LinearModel(rng.normal(size=(2, 3)), radius=100.0)
            r = float(rng.uniform(0.1, 3.0))
            pa, pb = project(a, r), project(b, r)
            assert np.allclose(project(pa, r).weights, pa.weights)
            assert distance(pa, pb) <= distance(a, b) + 1e-12


class TestSerialization:
    def test_round_trip_exact(self, tmp_path, rng):
        m = LinearModel(rng.normal(size=(3, 5)), radius=float(rng.uniform(5, 10)))
        path = tmp_path / "m.txt"
        save_model(m, str(path))
        m2 = load_model(str(path))
        assert np.array_equal(m.weights, m2.weights)
        assert m.radius == m2.radius

    def test_ball_invariant_enforced(self):
        with pytest.raises(ValueError):
            LinearModel(np.full((2, 2), 10.0), radius=1.0)
