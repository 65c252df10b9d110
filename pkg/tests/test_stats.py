import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from emgmex.errors import DomainError
from emgmex.stats import (
    chi_square,
    consistency,
    kmeans,
    linregress,
    mean_ci,
    ttest,
    ttest_from_summary,
)

# Two-sided t quantiles frozen from standard tables (6 significant digits),
# used as an oracle independent of the scipy routines under the hood.
T_QUANTILES_975 = {
    1: 12.7062,
    2: 4.30265,
    3: 3.18245,
    5: 2.57058,
    10: 2.22814,
    30: 2.04227,
    100: 1.98397,
}


class TestTTestFromSummary:
    def test_intensity_row(self):
        result = ttest_from_summary(147, 23.09, 21.27, 233, 8.11, 8.54)
        assert result.t == pytest.approx(9.60, abs=0.05)
        assert result.df == 378
        assert result.cohens_d == pytest.approx(1.01, abs=0.01)
        assert result.p < 0.001

    def test_integrated_activity_row(self):
        result = ttest_from_summary(147, 440.89, 459.97, 233, 78.8, 55.6)
        assert result.t == pytest.approx(11.89, abs=0.05)
        assert result.df == 378
        assert result.cohens_d == pytest.approx(1.25, abs=0.01)

    def test_equal_groups(self):
        result = ttest_from_summary(10, 5.0, 1.0, 10, 5.0, 1.0)
        assert result.t == 0.0
        assert result.cohens_d == 0.0
        assert result.p == pytest.approx(1.0)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DomainError):
            ttest_from_summary(1, 0.0, 1.0, 10, 0.0, 1.0)
        with pytest.raises(DomainError):
            ttest_from_summary(10, 1.0, 0.0, 10, 2.0, 0.0)

    def test_antisymmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n1, n2 = rng.integers(2, 50, 2)
            m1, m2 = rng.normal(size=2)
            s1, s2 = rng.uniform(0.1, 3.0, 2)
            a = ttest_from_summary(n1, m1, s1, n2, m2, s2)
            b = ttest_from_summary(n2, m2, s2, n1, m1, s1)
            assert a.t == pytest.approx(-b.t)
            assert abs(a.cohens_d) == pytest.approx(abs(b.cohens_d))
            assert a.p == pytest.approx(b.p)


class TestTTest:
    def test_consistent_with_summary_form(self):
        rng = np.random.default_rng(42)
        a = rng.normal(1.0, 2.0, 40)
        b = rng.normal(0.0, 1.5, 55)
        from_samples = ttest(a, b)
        from_summary = ttest_from_summary(
            a.size, a.mean(), a.std(ddof=1), b.size, b.mean(), b.std(ddof=1)
        )
        assert from_samples.t == pytest.approx(from_summary.t, abs=1e-9)
        assert from_samples.p == pytest.approx(from_summary.p, abs=1e-9)
        assert from_samples.cohens_d == pytest.approx(from_summary.cohens_d, abs=1e-9)

    def test_constant_groups_guarded(self):
        with pytest.raises(DomainError, match="pooled variance"):
            ttest([1.0, 1.0, 1.0], [2.0, 2.0])

    def test_order_within_groups_irrelevant(self):
        a = [3.0, 1.0, 2.0]
        b = [5.0, 4.0, 6.0]
        r1 = ttest(a, b)
        r2 = ttest(sorted(a), sorted(b, reverse=True))
        assert r1 == r2


class TestMeanCi:
    def test_half_width_matches_quantile_oracle(self):
        lo, hi = mean_ci(mean=0.0, sd=1.0, n=4, level=0.95)
        expected = T_QUANTILES_975[3] / 2.0  # t * sd / sqrt(n)
        assert hi == pytest.approx(expected, abs=1e-3)
        assert lo == pytest.approx(-expected, abs=1e-3)

    @pytest.mark.parametrize("df", sorted(T_QUANTILES_975))
    def test_quantiles_against_table(self, df):
        lo, hi = mean_ci(mean=0.0, sd=1.0, n=df + 1, level=0.95)
        expected = T_QUANTILES_975[df] / np.sqrt(df + 1)
        assert hi == pytest.approx(expected, abs=1e-4)

    def test_zero_sd_gives_point_interval(self):
        assert mean_ci(mean=2.5, sd=0.0, n=10) == (2.5, 2.5)

    def test_higher_level_widens(self):
        lo95, hi95 = mean_ci(mean=0.0, sd=1.0, n=20, level=0.95)
        lo99, hi99 = mean_ci(mean=0.0, sd=1.0, n=20, level=0.99)
        assert hi99 > hi95
        assert lo99 < lo95

    def test_contains_sample_mean(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            samples = rng.normal(3.0, 2.0, rng.integers(2, 60))
            lo, hi = mean_ci(samples)
            assert lo <= samples.mean() <= hi

    def test_width_scales_inverse_sqrt_n(self):
        lo1, hi1 = mean_ci(mean=0.0, sd=1.0, n=100, level=0.95)
        lo2, hi2 = mean_ci(mean=0.0, sd=1.0, n=400, level=0.95)
        # quantiles are nearly equal at these df, so widths scale ~1/sqrt(n)
        assert (hi1 - lo1) / (hi2 - lo2) == pytest.approx(2.0, rel=0.01)

    def test_invalid_level_rejected(self):
        with pytest.raises(DomainError):
            mean_ci(mean=0.0, sd=1.0, n=5, level=1.0)


class TestChiSquare:
    def test_awareness_table(self):
        result = chi_square([[17, 39], [216, 108]])
        assert result.chi2 == pytest.approx(26.54, abs=0.1)
        assert result.df == 1
        assert result.cramers_v == pytest.approx(0.26, abs=0.01)
        assert result.p < 0.001

    def test_proportional_rows_are_independent(self):
        result = chi_square([[10, 20], [20, 40]])
        assert result.chi2 == pytest.approx(0.0, abs=1e-12)
        assert result.p == pytest.approx(1.0)

    def test_transpose_invariance(self):
        table = [[12, 7, 31], [5, 22, 9]]
        a = chi_square(table)
        b = chi_square(np.asarray(table).T)
        assert a.chi2 == pytest.approx(b.chi2)
        assert a.df == b.df
        assert a.cramers_v == pytest.approx(b.cramers_v)

    @given(st.permutations([0, 1, 2]))
    @settings(max_examples=30)
    def test_row_permutation_invariance(self, perm):
        table = np.array([[11, 4, 9], [3, 17, 6], [8, 8, 12]], dtype=float)
        assert chi_square(table[list(perm)]).chi2 == pytest.approx(chi_square(table).chi2)

    def test_zero_marginal_rejected(self):
        with pytest.raises(DomainError):
            chi_square([[0, 0], [5, 7]])


class TestLinregress:
    def test_perfect_line(self):
        x = np.arange(10.0)
        result = linregress(x, 2.0 * x + 1.0)
        assert result.slope == pytest.approx(2.0, abs=1e-9)
        assert result.intercept == pytest.approx(1.0, abs=1e-9)
        assert result.std_beta == pytest.approx(1.0, abs=1e-9)
        assert result.df == 8

    def test_constant_y_rejected(self):
        with pytest.raises(DomainError, match="constant"):
            linregress([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])

    def test_constant_x_rejected(self):
        with pytest.raises(DomainError, match="constant"):
            linregress([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(19)
        x = rng.uniform(0, 10, 20)
        y = 0.492 * x + 3.0 + rng.normal(0, 0.8, 20)
        result = linregress(x, y)
        design = np.column_stack([np.ones_like(x), x])
        beta = np.linalg.solve(design.T @ design, design.T @ y)
        assert result.intercept == pytest.approx(beta[0], abs=1e-9)
        assert result.slope == pytest.approx(beta[1], abs=1e-9)
        assert result.slope == pytest.approx(np.cov(x, y, ddof=1)[0, 1] / np.var(x, ddof=1), abs=1e-9)
        # standardized slope equals the Pearson correlation in simple regression
        assert result.std_beta == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-9)


class TestKmeans:
    def test_separated_blobs_recovered_exactly(self):
        rng = np.random.default_rng(2)
        a = rng.normal((0.0, 0.0), 0.2, size=(40, 2))
        b = rng.normal((10.0, 10.0), 0.2, size=(30, 2))
        result = kmeans(np.vstack([a, b]), k=2, seed=0)
        labels = np.array(result.assignments)
        assert len(set(labels[:40])) == 1
        assert len(set(labels[40:])) == 1
        assert labels[0] != labels[-1]

    def test_k1_centroid_is_global_mean(self):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(25, 2))
        result = kmeans(points, k=1, seed=0, standardize=False)
        np.testing.assert_allclose(result.centroids[0], points.mean(axis=0), atol=1e-12)

    def test_planted_indicator_clusters(self):
        # Small-spread planted clusters at the reference (duration, intensity)
        # centers must be recovered nearly perfectly after standardization.
        rng = np.random.default_rng(7)
        me = np.column_stack([rng.normal(317, 20, 233), rng.normal(8.1, 1.5, 233)])
        mae = np.column_stack([rng.normal(1160, 60, 147), rng.normal(23.1, 3.0, 147)])
        points = np.vstack([me, mae])
        labels = np.array([0] * 233 + [1] * 147)
        result = kmeans(points, k=2, seed=1, standardize=True)
        assert adjusted_rand_score(labels, result.assignments) >= 0.95

    def test_centroids_are_cluster_means(self):
        rng = np.random.default_rng(11)
        points = rng.normal(size=(60, 2))
        result = kmeans(points, k=3, seed=4, standardize=False)
        for cluster in range(3):
            members = points[result.assignments == cluster]
            np.testing.assert_allclose(result.centroids[cluster], members.mean(axis=0), atol=1e-9)

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(13)
        points = rng.normal(size=(50, 2))
        a = kmeans(points, k=2, seed=99)
        b = kmeans(points, k=2, seed=99)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        np.testing.assert_allclose(a.centroids, b.centroids)

    def test_wcss_assertion_holds_on_random_data(self):
        # The implementation asserts a non-increasing objective every
        # iteration; many random problems must complete without tripping it.
        rng = np.random.default_rng(17)
        for _ in range(30):
            n = int(rng.integers(10, 80))
            points = rng.normal(size=(n, 2)) * rng.uniform(0.5, 20)
            kmeans(points, k=int(rng.integers(1, 5)), seed=int(rng.integers(1e6)),
                   standardize=False)

    def test_fewer_points_than_k_rejected(self):
        with pytest.raises(DomainError):
            kmeans(np.zeros((2, 2)), k=3)


class TestConsistency:
    def test_identical_sets(self):
        assert consistency({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint_sets(self):
        assert consistency({"a"}, {"b"}) == 0.0

    def test_reference_agreement_value(self):
        a = set(range(100))
        b = set(range(83)) | set(range(200, 217))
        assert len(a) == len(b) == 100
        assert len(a & b) == 83
        assert consistency(a, b) == 0.83

    def test_empty_sets_agree(self):
        assert consistency(set(), set()) == 1.0
        assert consistency(set(), set(), mode="union") == 1.0

    def test_literal_union_mode(self):
        # the literal union denominator scores identical sets at 2.0,
        # which is why dice is the default
        assert consistency({"a", "b"}, {"a", "b"}, mode="union") == 2.0
        assert consistency({"a"}, {"b"}, mode="union") == 0.0

    def test_symmetry(self):
        a = {1, 2, 3, 4}
        b = {3, 4, 5}
        assert consistency(a, b) == consistency(b, a)
