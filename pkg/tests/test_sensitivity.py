"""Tests for variance-based sensitivity indices.

Expected values come from closed-form variance decompositions of the
models under study, worked out in-test, never from the estimators
themselves.
"""

import math

import numpy as np
import pytest

from riskpipe.errors import (
    DegenerateModelError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)
from riskpipe.sampling import Normal, Uniform
from riskpipe.sensitivity import (
    AnovaTerms,
    _rank_bins,
    binned_anova,
    check_sum_to_one,
    default_bin_count,
    pick_freeze,
)


# ---------------------------------------------------------------------------
# analytic references


def linear_shares(coeffs):
    """First-order indices of sum(c_i * X_i) with iid unit-variance inputs."""
    c = np.asarray(coeffs, dtype=float)
    return c**2 / np.sum(c**2)


def ishigami_indices(a=7.0, b=0.1):
    """Closed-form Sobol indices of the Ishigami function on U(-pi, pi)^3."""
    d1 = 0.5 * (1.0 + b * math.pi**4 / 5.0) ** 2
    d2 = a**2 / 8.0
    d13 = 8.0 * b**2 * math.pi**8 / 225.0
    total = d1 + d2 + d13
    first = np.array([d1 / total, d2 / total, 0.0])
    tot = np.array([(d1 + d13) / total, d2 / total, d13 / total])
    return first, tot


def ishigami(x, a=7.0, b=0.1):
    return (
        np.sin(x[:, 0])
        + a * np.sin(x[:, 1]) ** 2
        + b * x[:, 2] ** 4 * np.sin(x[:, 0])
    )


STANDARD = [Normal(0.0, 1.0), Normal(0.0, 1.0)]
ISHIGAMI_INPUTS = [Uniform(-math.pi, math.pi)] * 3


# ---------------------------------------------------------------------------
# pick-freeze estimator


class TestPickFreeze:
    def test_linear_two_inputs(self):
        report = pick_freeze(
            lambda x: x[:, 0] + 2.0 * x[:, 1], STANDARD, n=1 << 14, seed=3
        )
        expected = linear_shares([1.0, 2.0])
        assert report.first == pytest.approx(expected.tolist(), abs=0.02)
        assert report.total == pytest.approx(expected.tolist(), abs=0.02)

    def test_linear_three_inputs(self):
        report = pick_freeze(
            lambda x: x[:, 0] + 2.0 * x[:, 1] + 3.0 * x[:, 2],
            [Normal(0.0, 1.0)] * 3,
            n=1 << 15,
            seed=11,
        )
        expected = linear_shares([1.0, 2.0, 3.0])
        assert report.first == pytest.approx(expected.tolist(), abs=0.02)
        assert report.total == pytest.approx(expected.tolist(), abs=0.02)

    def test_inert_input_scores_near_zero(self):
        report = pick_freeze(lambda x: 3.0 * x[:, 0], STANDARD, n=1 << 16, seed=5)
        assert abs(report.first[1]) < 0.01
        assert abs(report.total[1]) < 0.01

    def test_ishigami_matches_closed_form(self):
        first, tot = ishigami_indices()
        report = pick_freeze(ishigami, ISHIGAMI_INPUTS, n=1 << 16, seed=7)
        assert report.first == pytest.approx(first.tolist(), abs=0.03)
        assert report.total == pytest.approx(tot.tolist(), abs=0.03)

    def test_total_dominates_first_order(self):
        report = pick_freeze(ishigami, ISHIGAMI_INPUTS, n=1 << 15, seed=2)
        for s, st in zip(report.first, report.total):
            assert st + 0.02 >= s

    def test_deterministic_for_seed(self):
        f = lambda x: x[:, 0] * x[:, 1] + x[:, 0]
        a = pick_freeze(f, STANDARD, n=4096, seed=42)
        b = pick_freeze(f, STANDARD, n=4096, seed=42)
        assert a.first == b.first
        assert a.total == b.total
        assert a.variance == b.variance

    def test_seed_changes_estimate(self):
        f = lambda x: x[:, 0] + 0.5 * x[:, 1]
        a = pick_freeze(f, STANDARD, n=4096, seed=1)
        b = pick_freeze(f, STANDARD, n=4096, seed=2)
        assert a.first != b.first

    def test_estimator_tag(self):
        report = pick_freeze(lambda x: x[:, 0], [Normal(0, 1)], n=256, seed=0)
        assert report.estimator == "pick_freeze"
        assert report.pairs is None

    def test_rejects_small_sample(self):
        with pytest.raises(ParameterError):
            pick_freeze(lambda x: x[:, 0], [Normal(0, 1)], n=63, seed=0)

    def test_accepts_minimum_sample(self):
        report = pick_freeze(lambda x: x[:, 0], [Normal(0, 1)], n=64, seed=0)
        assert len(report.first) == 1

    def test_rejects_empty_marginals(self):
        with pytest.raises(ParameterError):
            pick_freeze(lambda x: x[:, 0], [], n=256, seed=0)

    def test_constant_model_is_degenerate(self):
        with pytest.raises(DegenerateModelError):
            pick_freeze(lambda x: np.zeros(len(x)), STANDARD, n=256, seed=0)

    def test_model_output_shape_checked(self):
        with pytest.raises(ShapeError):
            pick_freeze(lambda x: x, STANDARD, n=256, seed=0)

    def test_model_output_must_be_finite(self):
        with pytest.raises(ParameterError):
            pick_freeze(
                lambda x: np.full(len(x), np.nan), STANDARD, n=256, seed=0
            )

    def test_input_ids_carried_through(self):
        report = pick_freeze(
            lambda x: x[:, 0] + x[:, 1], STANDARD, n=256, seed=0,
            input_ids=["a", "b"],
        )
        assert report.input_ids == ("a", "b")

    def test_input_id_count_checked(self):
        with pytest.raises(ShapeError):
            pick_freeze(
                lambda x: x[:, 0], STANDARD, n=256, seed=0, input_ids=["only"]
            )

    def test_default_input_ids(self):
        report = pick_freeze(lambda x: x[:, 0] + x[:, 1], STANDARD, n=256, seed=0)
        assert report.input_ids == ("x1", "x2")

    def test_payload_fields(self):
        report = pick_freeze(lambda x: x[:, 0], [Normal(0, 1)], n=256, seed=0)
        payload = report.to_payload()
        assert payload["estimator"] == "pick_freeze"
        assert payload["n"] == 256
        assert payload["inputs"] == ["x1"]
        assert "pairs" not in payload
        assert "terms" not in payload


# ---------------------------------------------------------------------------
# binned ANOVA estimator


class TestBinnedAnova:
    def test_single_active_input(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(1 << 15, 2))
        y = 2.0 * x[:, 0]
        report = binned_anova(x, y, order=2)
        assert report.first[0] == pytest.approx(1.0, abs=0.02)
        assert abs(report.first[1]) < 0.02
        assert abs(report.pairs[(0, 1)]) < 0.02

    def test_additive_shares(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(1 << 15, 2))
        y = x[:, 0] + 2.0 * x[:, 1]
        report = binned_anova(x, y, order=1)
        expected = linear_shares([1.0, 2.0])
        assert report.first == pytest.approx(expected.tolist(), abs=0.02)

    def test_bilinear_interaction_dominates(self):
        # For Y = X1*X2 with X ~ U(-1, 1) both main effects vanish and the
        # pair carries the whole variance D = 1/9.
        rng = np.random.default_rng(9)
        x = rng.uniform(-1.0, 1.0, size=(1 << 16, 2))
        y = x[:, 0] * x[:, 1]
        report = binned_anova(x, y, order=2)
        assert report.variance == pytest.approx(1.0 / 9.0, abs=0.005)
        assert abs(report.first[0]) < 0.05
        assert abs(report.first[1]) < 0.05
        assert report.pairs[(0, 1)] == pytest.approx(1.0, abs=0.05)
        assert report.total[0] == pytest.approx(1.0, abs=0.05)

    def test_pure_interaction_escapes_first_order_model(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1.0, 1.0, size=(1 << 16, 2))
        y = x[:, 0] * x[:, 1]
        report = binned_anova(x, y, order=1)
        assert abs(sum(report.first)) < 0.05
        # With the interaction untracked the index sum misses 1 by ~1.
        assert check_sum_to_one(report) > 0.9

    def test_additive_model_sum_near_one(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(1 << 16, 2))
        report = binned_anova(x, x[:, 0] + 2.0 * x[:, 1], order=2)
        assert check_sum_to_one(report) < 0.02

    def test_bilinear_model_sum_near_one(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1.0, 1.0, size=(1 << 16, 2))
        report = binned_anova(x, x[:, 0] * x[:, 1], order=2)
        assert check_sum_to_one(report) < 0.02

    def test_ishigami_first_order(self):
        first, _ = ishigami_indices()
        rng = np.random.default_rng(21)
        x = rng.uniform(-math.pi, math.pi, size=(1 << 16, 3))
        report = binned_anova(x, ishigami(x), order=1)
        assert report.first == pytest.approx(first.tolist(), abs=0.03)

    def test_range_invariant(self):
        rng = np.random.default_rng(31)
        x = rng.normal(size=(1 << 14, 3))
        y = np.sin(x[:, 0]) * x[:, 1] + 0.2 * rng.normal(size=1 << 14)
        report = binned_anova(x, y, order=2)
        values = list(report.first) + list(report.total)
        values += list(report.pairs.values())
        for v in values:
            assert -0.05 <= v <= 1.05

    def test_total_dominates_first_order(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(-math.pi, math.pi, size=(1 << 15, 3))
        report = binned_anova(x, ishigami(x), order=2)
        for s, st in zip(report.first, report.total):
            assert st + 0.02 >= s

    def test_estimator_tag(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4096, 2))
        report = binned_anova(x, x[:, 0], order=1)
        assert report.estimator == "binned_anova"

    def test_deterministic_under_ties(self):
        # Heavily tied inputs must still bin reproducibly.
        rng = np.random.default_rng(77)
        x = rng.integers(0, 5, size=(8192, 2)).astype(float)
        y = x[:, 0] + 0.1 * rng.normal(size=8192)
        a = binned_anova(x, y, order=1, bins=8)
        b = binned_anova(x, y, order=1, bins=8)
        assert a.first == b.first
        assert a == b

    def test_default_bin_count(self):
        assert default_bin_count(1000) == 10
        assert default_bin_count(1 << 20) == 64

    def test_insufficient_rows_for_bins(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(100, 2))
        with pytest.raises(InsufficientDataError):
            binned_anova(x, x[:, 0], order=1, bins=64)

    def test_insufficient_rows_for_pairs(self):
        # 2000 rows keep 12 marginal bins comfortable but cannot fill the
        # 144-cell joint grid at the default occupancy floor.
        rng = np.random.default_rng(0)
        x = rng.normal(size=(2000, 2))
        with pytest.raises(InsufficientDataError):
            binned_anova(x, x[:, 0] * x[:, 1], order=2, bins=12)

    def test_constant_output_is_degenerate(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4096, 2))
        with pytest.raises(DegenerateModelError):
            binned_anova(x, np.full(4096, 3.5), order=1)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(512, 2))
        with pytest.raises(ShapeError):
            binned_anova(x, np.zeros(511), order=1)

    def test_one_dimensional_inputs_rejected(self):
        with pytest.raises(ShapeError):
            binned_anova(np.zeros(512), np.zeros(512), order=1)

    @pytest.mark.parametrize("order", [0, 3])
    def test_bad_order_rejected(self, order):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4096, 2))
        with pytest.raises(ParameterError):
            binned_anova(x, x[:, 0], order=order)

    def test_too_few_bins_rejected(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4096, 2))
        with pytest.raises(ParameterError):
            binned_anova(x, x[:, 0], order=1, bins=1)

    def test_non_finite_inputs_rejected(self):
        x = np.zeros((512, 2))
        x[3, 1] = np.inf
        y = np.arange(512, dtype=float)
        with pytest.raises(ParameterError):
            binned_anova(x, y, order=1)

    def test_input_ids_label_pair_tables(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, size=(1 << 14, 2))
        report = binned_anova(
            x, x[:, 0] * x[:, 1], order=2, input_ids=["alpha", "beta"]
        )
        assert report.input_ids == ("alpha", "beta")
        assert (0, 1) in report.pairs
        assert ("alpha", "beta") in report.terms.pair_tables
        payload = report.to_payload()
        assert payload["pairs"] == [
            {"i": "alpha", "j": "beta", "value": report.pairs[(0, 1)]}
        ]


# ---------------------------------------------------------------------------
# the fitted decomposition tables


class TestAnovaTerms:
    @pytest.fixture()
    def fitted(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(1 << 15, 2))
        y = x[:, 0] + 2.0 * x[:, 1] + 0.5 * x[:, 0] * x[:, 1]
        report = binned_anova(x, y, order=2)
        return x, y, report

    def test_terms_attached(self, fitted):
        _, _, report = fitted
        assert isinstance(report.terms, AnovaTerms)
        assert set(report.terms.tables) == {"x1", "x2"}
        assert set(report.terms.pair_tables) == {("x1", "x2")}

    def test_f0_is_sample_mean(self, fitted):
        _, y, report = fitted
        assert report.terms.f0 == pytest.approx(float(np.mean(y)), abs=1e-12)

    def test_main_effect_tables_zero_mean(self, fitted):
        _, _, report = fitted
        terms = report.terms
        for name, table in terms.tables.items():
            mass = terms.masses[name]
            assert float(np.dot(mass, table)) == pytest.approx(0.0, abs=1e-9)
            assert float(np.sum(mass)) == pytest.approx(1.0, abs=1e-12)
            assert table.shape == (terms.bins,)

    def test_pair_tables_zero_mean(self, fitted):
        _, _, report = fitted
        terms = report.terms
        for key, table in terms.pair_tables.items():
            mass = terms.pair_masses[key]
            assert table.shape == (terms.bins * terms.bins,)
            assert float(np.dot(mass, table)) == pytest.approx(0.0, abs=1e-9)

    def test_table_variances_reproduce_indices(self, fitted):
        _, _, report = fitted
        terms = report.terms
        for j, name in enumerate(report.input_ids):
            share = float(
                np.sum(terms.masses[name] * terms.tables[name] ** 2)
            ) / report.variance
            assert share == pytest.approx(report.first[j], abs=1e-12)

    def test_realized_effects_nearly_orthogonal(self, fitted):
        # Evaluate the fitted main-effect series on the sample and check
        # the empirical correlation between components stays small.
        x, _, report = fitted
        terms = report.terms
        series = []
        for j, name in enumerate(report.input_ids):
            codes = _rank_bins(x[:, j], terms.bins)
            series.append(terms.tables[name][codes])
        corr = np.corrcoef(series[0], series[1])[0, 1]
        assert abs(corr) < 0.02

    def test_terms_not_serialized(self, fitted):
        _, _, report = fitted
        assert "terms" not in report.to_payload()

    def test_reports_compare_equal_ignoring_terms(self, fitted):
        x, y, report = fitted
        again = binned_anova(x, y, order=2)
        assert report == again


# ---------------------------------------------------------------------------
# estimator cross-checks


class TestCrossChecks:
    def test_two_routes_agree_on_linear_model(self):
        coeffs = np.array([1.0, 2.0, 3.0])
        expected = linear_shares(coeffs)

        pf = pick_freeze(
            lambda x: x @ coeffs, [Normal(0.0, 1.0)] * 3, n=1 << 15, seed=13
        )
        rng = np.random.default_rng(13)
        x = rng.normal(size=(1 << 15, 3))
        ba = binned_anova(x, x @ coeffs, order=1)

        for i in range(3):
            assert pf.first[i] == pytest.approx(expected[i], abs=0.02)
            assert ba.first[i] == pytest.approx(expected[i], abs=0.02)
            assert pf.first[i] == pytest.approx(ba.first[i], abs=0.03)

    def test_payload_shape(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(8192, 2))
        report = binned_anova(x, x[:, 0] + x[:, 1], order=2)
        payload = report.to_payload()
        assert set(payload) == {
            "estimator",
            "n",
            "inputs",
            "variance",
            "first",
            "total",
            "pairs",
        }
        assert payload["first"] == list(report.first)
        assert payload["total"] == list(report.total)
