import math

import numpy as np
import pytest

from fairbound.dataset import (
    CellSpec,
    SyntheticSpec,
    load_csv,
    partition,
    split,
    synthesize,
    write_csv,
)
from fairbound.exceptions import EmptyDatasetError, ParseError, SchemaError
from fairbound.fairness import conditional_accuracies
from fairbound.model import LinearModel, predict_many

from conftest import make_dataset, random_dataset, two_blob_spec


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadCsv:
    def test_basic_construction(self, tmp_path):
        f = tmp_path / "d.csv"
        write_lines(f, ["f1,f2,s,y", "1.0,2.0,a,0", "0.5,-1.0,b,1", "2.0,0.0,a,0"])
        d = load_csv(str(f), sensitive_col="s", label_col="y")
        assert d.n == 3
        assert d.p == 3  # two features + intercept
        assert d.num_labels == 2 and d.num_sensitive == 2

    def test_first_row_mapping(self, tmp_path):
        f = tmp_path / "d.csv"
        write_lines(f, ["f1,f2,s,y", "1.0,2.0,a,0", "0.5,-1.0,b,1"])
        d = load_csv(str(f), sensitive_col="s", label_col="y")
        ex = d.example(0)
        assert np.array_equal(ex.features, [1.0, 2.0, 1.0])
        assert ex.sensitive == 0 and ex.label == 0

    def test_feature_norm_bound(self, tmp_path):
        f = tmp_path / "d.csv"
        write_lines(f, ["f1,f2,s,y", "3.0,4.0,a,0", "0.0,0.0,b,1"])
        d = load_csv(str(f), sensitive_col="s", label_col="y")
        assert d.feature_norm_bound == pytest.approx(math.sqrt(26.0), rel=1e-15)

    def test_missing_role_is_schema_error(self, tmp_path):
        f = tmp_path / "d.csv"
        write_lines(f, ["f1,f2,s,y", "1,2,a,0"])
        with pytest.raises(SchemaError):
            load_csv(str(f), sensitive_col="nope", label_col="y")

    def test_non_numeric_feature_reports_row(self, tmp_path):
        f = tmp_path / "d.csv"
        write_lines(f, ["f1,s,y", "1.0,a,0", "oops,b,1"])
        with pytest.raises(ParseError, match="row 3"):
            load_csv(str(f), sensitive_col="s", label_col="y")

    def test_empty_file_and_header_only(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("", encoding="utf-8")
        with pytest.raises(EmptyDatasetError):
            load_csv(str(f), sensitive_col="s", label_col="y")
        write_lines(f, ["f1,s,y"])
        with pytest.raises(EmptyDatasetError):
            load_csv(str(f), sensitive_col="s", label_col="y")

    def test_round_trip_full_precision(self, tmp_path, rng):
        d = random_dataset(rng, 37)
        f = tmp_path / "out.csv"
        write_csv(d, str(f))
        d2 = load_csv(str(f), sensitive_col="s", label_col="y")
        assert np.array_equal(d.features, d2.features)
        assert np.array_equal(d.sensitive, d2.sensitive)
        assert np.array_equal(d.labels, d2.labels)
        assert d.label_values == d2.label_values
        assert d.sensitive_values == d2.sensitive_values


class TestSynthesize:
    def test_deterministic_and_exact_counts(self):
        spec = two_blob_spec(per_cell=5)
        d1 = synthesize(spec, seed=7)
        d2 = synthesize(spec, seed=7)
        assert d1.n == 20
        assert np.array_equal(d1.features, d2.features)
        assert np.array_equal(d1.labels, d2.labels)

    def test_zero_count_cell_gives_zero_proportion(self):
        cells = dict(two_blob_spec(per_cell=5).cells)
        cells[(1, 1)] = CellSpec(count=0, mean=np.zeros(2), cov=np.ones(2))
        d = synthesize(SyntheticSpec(2, cells), seed=1)
        part = partition(d, "by_label_and_sensitive")
        assert part.proportions[1 * 2 + 1] == 0.0

    def test_zero_total_is_empty_dataset_error(self):
        cells = {(0, 0): CellSpec(count=0, mean=np.zeros(2), cov=np.ones(2))}
        with pytest.raises(EmptyDatasetError):
            synthesize(SyntheticSpec(2, cells), seed=1)

    def test_intercept_appended(self):
        d = synthesize(two_blob_spec(per_cell=3), seed=0)
        assert np.all(d.features[:, -1] == 1.0)

    def test_full_covariance_accepted(self):
        cov = np.array([[1.0, 0.3], [0.3, 1.0]])
        cells = {(0, 0): CellSpec(3, np.zeros(2), cov), (1, 0): CellSpec(3, np.ones(2), cov)}
        d = synthesize(SyntheticSpec(2, cells), seed=5)
        assert d.n == 6


class TestSplit:
    def test_sizes(self, rng):
        d = random_dataset(rng, 10)
        train, test = split(d, 0.9, seed=0)
        assert (train.n, test.n) == (9, 1)

    def test_deterministic(self, rng):
        d = random_dataset(rng, 30)
        a1, b1 = split(d, 0.7, seed=3)
        a2, b2 = split(d, 0.7, seed=3)
        assert np.array_equal(a1.features, a2.features)
        assert np.array_equal(b1.features, b2.features)

    def test_disjoint_union(self, rng):
        d = random_dataset(rng, 20)
        train, test = split(d, 0.5, seed=3)
        assert train.n + test.n == 20
        rows = {tuple(r) for r in train.features} | {tuple(r) for r in test.features}
        assert len(rows) == 20  # continuous features: collisions impossible

    def test_bad_fraction(self, rng):
        d = random_dataset(rng, 10)
        for frac in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ValueError):
                split(d, frac, seed=0)


class TestPartition:
    def test_group_counts(self, rng):
        d = random_dataset(rng, 40)
        assert partition(d, "by_label_and_sensitive").num_groups == 4
        assert partition(d, "by_sensitive").num_groups == 2

    def test_degenerate_single_sensitive(self, rng):
        features = np.hstack([rng.normal(size=(6, 2)), np.ones((6, 1))])
        d = make_dataset(features, [0] * 6, [0, 1, 0, 1, 0, 1])
        part = partition(d, "by_sensitive")
        assert np.array_equal(part.proportions, [1.0, 0.0])

    def test_proportions_sum_to_one(self, rng):
        d = random_dataset(rng, 33)
        for grouping in ("by_sensitive", "by_label_and_sensitive"):
            part = partition(d, grouping)
            assert np.all(part.proportions >= 0)
            assert abs(part.proportions.sum() - 1.0) <= 1e-12

    def test_weighted_conditional_accuracy_is_overall(self, rng):
        d = random_dataset(rng, 50)
        m = LinearModel(rng.normal(size=(2, 3)), 100.0)
        overall = float(np.mean(predict_many(m, d.features) == d.labels))
        for grouping in ("by_sensitive", "by_label_and_sensitive"):
            part = partition(d, grouping)
            values, _ = conditional_accuracies(m, d, part)
            assert float(part.proportions @ values) == pytest.approx(overall, abs=1e-12)
