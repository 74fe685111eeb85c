import math
import warnings

import numpy as np
import pytest

from fairbound.fairness import coefficients
from fairbound.finite_sample import (
    FiniteSampleParams,
    dependent_slack,
    independent_slack,
    sample_size_sufficient,
)

from conftest import random_dataset


def uniform_params(num_groups=4, delta=0.05, n=10_000, coeff=0.5, b3=1.0, b4=1.0,
                   natarajan_dim=1.0, num_labels=2):
    return FiniteSampleParams(
        num_groups=num_groups,
        delta=delta,
        n=n,
        proportions=np.full(num_groups, 1.0 / num_groups),
        coeff_magnitudes=np.full((num_groups, num_groups), coeff),
        b3=b3,
        b4=b4,
        natarajan_dim=natarajan_dim,
        num_labels=num_labels,
    )


class TestIndependentSlack:
    def test_frozen_transcription(self):
        # independent transcription of the two-term formula pinned this value
        fp = uniform_params()
        assert independent_slack(fp, 0) == pytest.approx(0.11983323751083457, rel=1e-12)

    def test_quadrupling_n_halves(self):
        a = independent_slack(uniform_params(n=10_000), 0)
        b = independent_slack(uniform_params(n=40_000), 0)
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_zero_coefficients_leave_only_constant_term(self):
        fp = uniform_params(coeff=0.0)
        expected = math.sqrt(math.log(fp.b3 * 9 / fp.delta) / (fp.b4 * fp.n))
        assert independent_slack(fp, 0) == pytest.approx(expected, rel=1e-12)

    def test_zero_proportion_group_contributes_nothing(self):
        fp = uniform_params()
        fp2 = FiniteSampleParams(
            num_groups=4, delta=0.05, n=10_000,
            proportions=np.array([1 / 3, 1 / 3, 1 / 3, 0.0]),
            coeff_magnitudes=np.full((4, 4), 0.5),
            b3=1.0, b4=1.0, natarajan_dim=1.0, num_labels=2,
        )
        manual = math.sqrt(math.log(9 / 0.05) / 10_000)
        per_group = 0.5 * math.sqrt(math.log(2 * 9 / 0.05) / (10_000 / 3))
        assert independent_slack(fp2, 0) == pytest.approx(manual + 3 * per_group, rel=1e-12)

    def test_undersized_sample_warns_but_returns(self):
        fp = uniform_params(n=10)
        with pytest.warns(UserWarning, match="precondition"):
            value = independent_slack(fp, 0)
        assert value > 0


class TestDependentSlack:
    def test_dominates_independent_when_dimension_positive(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(200, 100_000))
            fp = FiniteSampleParams(
                num_groups=k,
                delta=float(rng.uniform(0.001, 0.2)),
                n=n,
                proportions=np.full(k, 1.0 / k),
                coeff_magnitudes=rng.uniform(0, 1, (k, k)),
                b3=float(rng.uniform(0.5, 10)),
                b4=float(rng.uniform(0.5, 4)),
                natarajan_dim=float(rng.integers(1, 20)),
                num_labels=2,
            )
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                for g in range(k):
                    assert dependent_slack(fp, g) >= independent_slack(fp, g) - 1e-12

    def test_zero_dimension_edge_formula(self):
        # natarajan_dim -> 0 reduces alpha to sqrt(64*log(8(2K+1)/delta)/(n p))
        fp = uniform_params(natarajan_dim=1e-300)
        k_groups, delta, n = 4, 0.05, 10_000
        alpha = math.sqrt(64 * math.log(8 * 9 / delta) / (n / 4))
        expected = math.sqrt(math.log(9 / delta) / n) + 4 * 0.5 * alpha
        assert dependent_slack(fp, 0) == pytest.approx(expected, rel=1e-9)

    def test_sqrt_dimension_scaling(self):
        # at large d the per-group term grows like sqrt(d)
        values = [dependent_slack(uniform_params(natarajan_dim=d, coeff=1.0, n=10**8), 0)
                  for d in (100, 400, 1600)]
        assert values[1] / values[0] == pytest.approx(2.0, rel=0.05)
        assert values[2] / values[1] == pytest.approx(2.0, rel=0.05)


class TestMonotonicity:
    def test_decreasing_in_n_increasing_in_k_and_inverse_delta(self):
        base = uniform_params()
        more_n = uniform_params(n=20_000)
        assert independent_slack(more_n, 0) < independent_slack(base, 0)
        assert dependent_slack(more_n, 0) < dependent_slack(base, 0)
        more_k = uniform_params(num_groups=8)
        assert independent_slack(more_k, 0) > independent_slack(base, 0)
        smaller_delta = uniform_params(delta=0.005)
        assert independent_slack(smaller_delta, 0) > independent_slack(base, 0)
        assert dependent_slack(smaller_delta, 0) > dependent_slack(base, 0)

    def test_decreasing_in_proportions(self):
        balanced = uniform_params()
        skewed = FiniteSampleParams(
            num_groups=4, delta=0.05, n=10_000,
            proportions=np.array([0.7, 0.1, 0.1, 0.1]),
            coeff_magnitudes=np.full((4, 4), 0.5),
            b3=1.0, b4=1.0, natarajan_dim=1.0, num_labels=2,
        )
        # shrinking the smallest groups inflates the slack
        assert independent_slack(skewed, 0) > independent_slack(balanced, 0)


class TestConstruction:
    def test_from_fairness_spec_defaults(self, rng):
        d = random_dataset(rng, 60)
        spec = coefficients(d, "equalized_odds")
        fp = FiniteSampleParams.from_fairness_spec(
            spec, n=d.n, delta=0.05, num_labels=d.num_labels, num_features=d.p
        )
        assert fp.b3 == 2.0 * (spec.num_groups + 1)
        assert fp.b4 == 2.0
        assert fp.natarajan_dim == d.num_labels * d.p
        assert np.array_equal(fp.coeff_magnitudes, np.abs(spec.coeffs))

    def test_precondition_check(self):
        assert sample_size_sufficient(uniform_params(n=10_000))
        assert not sample_size_sufficient(uniform_params(n=10))

    def test_validation(self):
        with pytest.raises(ValueError):
            uniform_params(delta=1.5)
        with pytest.raises(ValueError):
            uniform_params(b3=0.0)
