import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import ndtri

from netsurv.corpus import ExpressionMatrix
from netsurv.preprocess import (empirical_covariance, filter_normal, jarque_bera,
                                npn_transform, npn_truncation)


def expr_of(values, prefix="g"):
    values = np.asarray(values, dtype=float)
    return ExpressionMatrix(
        tuple("s%d" % i for i in range(values.shape[0])),
        tuple("%s%d" % (prefix, j) for j in range(values.shape[1])),
        values,
    )


class TestNpnTransform:
    def test_small_column_matches_direct_formula(self):
        # n=5, no ties: ranks are a permutation of 1..5
        col = np.array([0.3, -1.2, 5.0, 2.2, 0.9])
        n = 5
        delta = 1.0 / (4.0 * n ** 0.25 * math.sqrt(math.pi * math.log(n)))
        ranks = np.array([2.0, 1.0, 5.0, 4.0, 3.0])
        z = ndtri(np.clip(ranks / (n + 1.0), delta, 1.0 - delta))
        z = z - z.mean()
        expected = z / z.std(ddof=1)
        got = npn_transform(expr_of(col[:, None])).values[:, 0]
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-13)

    def test_output_centered_unit_variance(self, rng):
        x = rng.standard_normal((40, 6)) ** 3
        out = npn_transform(expr_of(x)).values
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0, ddof=1), 1.0, atol=1e-12)

    def test_monotone_invariance(self, rng):
        x = rng.standard_normal((30, 4))
        a = npn_transform(expr_of(x)).values
        b = npn_transform(expr_of(np.exp(x))).values
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_ties_share_value(self):
        col = np.array([1.0, 2.0, 2.0, 3.0, 4.0, 5.0])
        out = npn_transform(expr_of(col[:, None])).values[:, 0]
        assert out[1] == out[2]

    def test_constant_column_rejected(self):
        with pytest.raises(ValueError, match="ranks degenerate"):
            npn_transform(expr_of(np.ones((5, 1))))

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="at least 3 samples"):
            npn_transform(expr_of(np.array([[1.0], [2.0]])))

    def test_truncation_value(self):
        n = 100
        expected = 1.0 / (4.0 * n ** 0.25 * math.sqrt(math.pi * math.log(n)))
        assert npn_truncation(n) == pytest.approx(expected, rel=0, abs=0)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_invariance_under_random_monotone_maps(self, seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal((20, 3))
        # strictly increasing map: cumulative sums of positive jumps at each value
        a = npn_transform(expr_of(x)).values
        b = npn_transform(expr_of(np.arctan(3.0 * x) + x / 7.0)).values
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestJarqueBera:
    def test_moment_oracle(self, rng):
        x = rng.gamma(2.0, size=200)
        n = x.size
        c = x - x.mean()
        m2, m3, m4 = (np.mean(c ** k) for k in (2, 3, 4))
        jb_expected = n / 6.0 * ((m3 / m2 ** 1.5) ** 2 + (m4 / m2 ** 2 - 3.0) ** 2 / 4.0)
        jb, p = jarque_bera(x)
        assert jb == pytest.approx(jb_expected, rel=1e-12)
        assert p == pytest.approx(stats.chi2.sf(jb_expected, 2), rel=1e-12)

    def test_symmetric_mesokurtic_sample_scores_zero(self):
        # two-point symmetric sample {-1,+1} has skew 0 and kurtosis exactly 1,
        # so excess kurtosis is -2 and JB = n/6 * (4/4) = n/6
        x = np.array([-1.0, 1.0] * 8)
        jb, _ = jarque_bera(x)
        assert jb == pytest.approx(len(x) / 6.0, rel=1e-12)

    def test_gaussian_rarely_rejected(self, rng):
        rejections = sum(jarque_bera(rng.standard_normal(500))[1] <= 0.05 for _ in range(100))
        assert rejections <= 15

    def test_heavy_tail_rejected(self, rng):
        _, p = jarque_bera(rng.standard_t(2, size=500))
        assert p < 1e-6

    def test_min_size(self):
        with pytest.raises(ValueError, match="at least 8"):
            jarque_bera(np.arange(7.0))


class TestFilterNormal:
    def test_keeps_normal_drops_skewed(self, rng):
        normal = rng.standard_normal((300, 2))
        skewed = rng.exponential(size=(300, 1))
        expr = expr_of(np.hstack([normal[:, :1], skewed, normal[:, 1:]]))
        filtered, reports = filter_normal(expr, alpha=0.05)
        assert filtered.gene_ids == ("g0", "g2")
        assert [r.kept for r in reports] == [True, False, True]

    def test_preserves_column_order(self, rng):
        expr = expr_of(rng.standard_normal((100, 5)))
        filtered, _ = filter_normal(expr, alpha=0.001)
        kept = list(filtered.gene_ids)
        assert kept == [g for g in expr.gene_ids if g in kept]

    def test_all_rejected_errors(self, rng):
        expr = expr_of(rng.exponential(size=(500, 3)))
        with pytest.raises(ValueError, match="no variables pass normality filter"):
            filter_normal(expr, alpha=0.05)


class TestEmpiricalCovariance:
    def test_double_loop_oracle(self, rng):
        x = rng.standard_normal((15, 4))
        expr = expr_of(x)
        s = empirical_covariance(expr)
        n, p = x.shape
        mu = x.mean(axis=0)
        for i in range(p):
            for j in range(p):
                expected = sum((x[k, i] - mu[i]) * (x[k, j] - mu[j]) for k in range(n)) / n
                assert s[i, j] == pytest.approx(expected, rel=1e-12, abs=1e-14)

    def test_two_column_hand_values(self):
        # columns (0,1) and (1,0): each has mean 1/2, variance 1/4, covariance -1/4
        expr = expr_of(np.array([[0.0, 1.0], [1.0, 0.0]]))
        s = empirical_covariance(expr)
        np.testing.assert_allclose(s, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)

    def test_exact_symmetry(self, rng):
        s = empirical_covariance(expr_of(rng.standard_normal((50, 20))))
        assert np.array_equal(s, s.T)

    def test_ddof_one_matches_numpy(self, rng):
        x = rng.standard_normal((12, 3))
        s = empirical_covariance(expr_of(x), ddof=1)
        np.testing.assert_allclose(s, np.cov(x, rowvar=False), rtol=1e-12)
