import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from bpgof.errors import ParameterError, SampleError
from bpgof.model import (CountSample, ThetaBP, ThetaTP, as_sample, logpmf_common_shock, make_theta, pgf_bp,
                         pgf_m, pgf_tp, pmf_bp_convolution, pmf_bp_recurrence, pmf_bp_table, sample_bp,
                         sample_tp, theta_array)
from bpgof.rng import substream


def scipy_convolution(x1, x2, t1, t2, t3):
    """Independent oracle: sum_k Pois(l1)(x1-k) Pois(l2)(x2-k) Pois(t3)(k)."""
    k = np.arange(min(x1, x2) + 1)
    return float(np.sum(poisson.pmf(x1 - k, t1 - t3) * poisson.pmf(x2 - k, t2 - t3) * poisson.pmf(k, t3)))


thetas = st.tuples(st.floats(0.01, 3.0), st.floats(0.01, 3.0), st.floats(0.01, 3.0)).map(
    lambda t: (t[0] + t[2], t[1] + t[2], t[2]))


class TestTheta:
    def test_valid(self):
        th = ThetaBP(1.0, 1.0, 0.25)
        assert th.reduced == (0.75, 0.75)
        np.testing.assert_array_equal(th.as_array(), [1.0, 1.0, 0.25])

    @pytest.mark.parametrize("t", [(1.0, 1.0, 0.0), (1.0, 0.2, 0.25), (1.0, 1.0, -0.1), (np.nan, 1.0, 0.1),
                                   (0.25, 1.0, 0.25)])
    def test_invalid_bp(self, t):
        with pytest.raises(ParameterError):
            ThetaBP(*t)

    def test_invalid_tp(self):
        with pytest.raises(ParameterError):
            ThetaTP(1.0, 1.0, 0.1, 0.2)

    def test_make_theta(self):
        assert isinstance(make_theta([1, 1, 0.2]), ThetaBP)
        assert isinstance(make_theta([1, 1, 1, 0.2]), ThetaTP)
        with pytest.raises(ParameterError):
            make_theta([1, 2])

    def test_theta_array_dimension_check(self):
        with pytest.raises(ParameterError):
            theta_array((1, 1, 1, 0.2), m=2)


class TestCountSample:
    def test_readonly_int(self):
        s = CountSample(np.array([[1.0, 2.0], [0.0, 3.0]]))
        assert s.data.dtype == np.int64
        assert s.n == 2 and s.d == 2
        with pytest.raises(ValueError):
            s.data[0, 0] = 5

    @pytest.mark.parametrize("bad", [np.array([[1, -1]]), np.array([[1.5, 2.0]]), np.zeros((0, 2)),
                                     np.array([1, 2, 3]), np.array([[1], [2]])])
    def test_rejects(self, bad):
        with pytest.raises(SampleError):
            CountSample(bad)

    def test_as_sample_passthrough(self):
        s = CountSample(np.ones((3, 2), dtype=int))
        assert as_sample(s) is s
        assert as_sample([[1, 2]]) == CountSample(np.array([[1, 2]]))


class TestPGF:
    def test_bp_matches_generic(self):
        u = np.random.default_rng(0).random((50, 2))
        np.testing.assert_allclose(pgf_bp(u, (1.2, 0.8, 0.3)), pgf_m(u, (1.2, 0.8, 0.3)), rtol=1e-14)

    def test_tp_matches_generic(self):
        u = np.random.default_rng(1).random((50, 3))
        th = (1.0, 1.5, 0.7, 0.25)
        np.testing.assert_allclose(pgf_tp(u, th), pgf_m(u, th), rtol=1e-14)

    def test_pgf_equals_pmf_series(self):
        th = (1.1, 0.9, 0.4)
        P = pmf_bp_table(th, 40, 40)
        u = np.array([0.3, 0.8])
        series = np.sum(P * np.outer(u[0] ** np.arange(41), u[1] ** np.arange(41)))
        assert series == pytest.approx(float(pgf_bp(u, th)), rel=1e-13)

    def test_at_one(self):
        assert float(pgf_bp([1.0, 1.0], (2, 3, 1))) == 1.0


class TestPMF:
    @pytest.mark.parametrize("th", [(1.0, 1.0, 0.25), (2.5, 0.6, 0.5), (0.05, 0.07, 0.01)])
    def test_recurrence_equals_convolution(self, th):
        P = pmf_bp_table(th, 25, 25)
        for i in range(26):
            for j in range(26):
                assert P[i, j] == pytest.approx(scipy_convolution(i, j, *th), abs=1e-15, rel=1e-10)

    def test_convolution_against_scipy(self):
        assert pmf_bp_convolution(3, 5, (1.0, 2.0, 0.5)) == pytest.approx(scipy_convolution(3, 5, 1.0, 2.0, 0.5),
                                                                          rel=1e-12)

    def test_point_functions(self):
        th = (1.4, 0.9, 0.3)
        assert pmf_bp_recurrence(4, 2, th) == pytest.approx(pmf_bp_convolution(4, 2, th), rel=1e-12)
        assert pmf_bp_recurrence(-1, 2, th) == 0.0
        assert pmf_bp_convolution(2, -1, th) == 0.0

    def test_p00(self):
        th = (1.0, 2.0, 0.5)
        assert pmf_bp_table(th, 0, 0)[0, 0] == pytest.approx(math.exp(-2.5), rel=1e-15)

    def test_margins_are_poisson(self):
        th = (1.3, 0.7, 0.2)
        P = pmf_bp_table(th, 60, 60)
        np.testing.assert_allclose(P.sum(axis=1)[:20], poisson.pmf(np.arange(20), 1.3), rtol=1e-12)
        np.testing.assert_allclose(P.sum(axis=0)[:20], poisson.pmf(np.arange(20), 0.7), rtol=1e-12)

    def test_trivariate_logpmf_sums_to_one(self):
        th = (0.8, 0.6, 0.7, 0.2)
        g = np.stack(np.meshgrid(*[np.arange(20)] * 3, indexing="ij"), -1).reshape(-1, 3)
        assert np.exp(logpmf_common_shock(g, th)).sum() == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(thetas)
    def test_table_mass_and_sign(self, th):
        K = int(max(th) * 3 + 40)
        P = pmf_bp_table(th, K, K)
        assert np.all(P >= 0)
        assert P.sum() == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(thetas, st.integers(0, 15), st.integers(0, 15))
    def test_log_space_matches_table(self, th, i, j):
        P = pmf_bp_table(th, 15, 15)
        assert math.exp(float(logpmf_common_shock([i, j], th))) == pytest.approx(P[i, j], rel=1e-10, abs=1e-300)


class TestSamplers:
    def test_moments(self):
        X = sample_bp((1.5, 1.0, 0.4), 200_000, substream(5, "t")).data
        assert X.mean(0) == pytest.approx([1.5, 1.0], abs=0.02)
        assert np.cov(X.T)[0, 1] == pytest.approx(0.4, abs=0.02)

    def test_trivariate_covariances(self):
        X = sample_tp((1.0, 1.2, 0.9, 0.3), 200_000, substream(6, "t")).data
        C = np.cov(X.T)
        assert C[0, 1] == pytest.approx(0.3, abs=0.02)
        assert C[1, 2] == pytest.approx(0.3, abs=0.02)
        assert np.diag(C) == pytest.approx([1.0, 1.2, 0.9], abs=0.03)

    def test_frequencies_match_pmf(self):
        th = (1.0, 1.0, 0.25)
        X = sample_bp(th, 100_000, substream(9, "f")).data
        P = pmf_bp_table(th, 3, 3)
        freq = np.array([[np.mean((X[:, 0] == i) & (X[:, 1] == j)) for j in range(4)] for i in range(4)])
        np.testing.assert_allclose(freq, P, atol=0.005)

    def test_same_stream_same_draws(self):
        a = sample_bp((1, 1, 0.25), 50, substream(1, "x"))
        b = sample_bp((1, 1, 0.25), 50, substream(1, "x"))
        assert a == b

    def test_bad_n(self):
        with pytest.raises(ValueError):
            sample_bp((1, 1, 0.25), 0, substream(1, "x"))
