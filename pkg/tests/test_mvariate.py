import numpy as np
import pytest
import sympy as sp

from bpgof.estimate import mle, mle_tp
from bpgof.model import sample_bp, sample_tp
from bpgof.mvariate import (R3_stat, Rm_stat, S3_stat, Sm_stat, T3_stat, T3_values, T3_values_gram, W3_stat,
                            Wm_stat, h_multiplier, pair_multiplier, residuals_D3, subsets)
from bpgof.rng import substream
from bpgof.sources import EmpiricalPGF, PoissonPGF
from bpgof.stats import R_stat, W_stat, make_grid

TH = (1.0, 1.2, 0.9, 0.3)


def draw(n, seed, th=TH):
    return sample_tp(th, n, substream(seed, "mv")).data


class TestMultipliers:
    """The PDE multipliers against symbolic differentiation of the trivariate pgf."""

    def setup_method(self):
        self.u = sp.symbols("u1:4")
        t = [sp.Rational(1), sp.Rational(6, 5), sp.Rational(9, 10), sp.Rational(3, 10)]
        u1, u2, u3 = self.u
        self.g = sp.exp(t[0] * (u1 - 1) + t[1] * (u2 - 1) + t[2] * (u3 - 1) + t[3] * (u1 * u2 * u3 - u1 - u2 - u3 + 2))
        self.th = np.array([[float(v) for v in t]])
        self.pt = (0.3, 0.7, 0.45)

    def _ratio(self, *idx):
        expr = self.g
        for i in idx:
            expr = sp.diff(expr, self.u[i])
        return float(sp.simplify(expr / self.g).subs(dict(zip(self.u, self.pt))))

    @pytest.mark.parametrize("pair", [(0, 1), (0, 2), (1, 2)])
    def test_pair(self, pair):
        U = [np.array([v]) for v in self.pt]
        assert float(pair_multiplier(self.th, U, *pair)[0, 0]) == pytest.approx(self._ratio(*pair), rel=1e-13)

    def test_h(self):
        U = [np.array([v]) for v in self.pt]
        assert float(h_multiplier(self.th, U)[0, 0]) == pytest.approx(self._ratio(0, 1, 2), rel=1e-13)


class TestResiduals:
    def test_injection_zero(self):
        u = np.random.default_rng(2).random((1000, 3))
        for D in residuals_D3(PoissonPGF(TH), TH, u).as_tuple():
            assert np.max(np.abs(D)) <= 1e-12

    def test_nonzero_for_data(self):
        X = draw(40, 1)
        res = residuals_D3(X, mle_tp(X), np.array([[0.5, 0.5, 0.5]]))
        assert max(abs(float(D[0])) for D in res.as_tuple()) > 0


class TestT3:
    def test_quadrature_equals_gram(self):
        Xs = np.stack([draw(30, s) for s in range(4)])
        th = np.array([mle_tp(x).as_array() for x in Xs])
        src = EmpiricalPGF(Xs)
        for a in [(0, 0, 0), (1, 0, 0.5)]:
            quad = T3_values(src, th, make_grid(3, a))
            gram = T3_values_gram(src, th, a)
            np.testing.assert_allclose(quad, gram, rtol=1e-10)

    def test_injection_zero(self):
        assert abs(T3_stat(PoissonPGF(TH, n=50), TH).value) < 1e-20

    def test_chunked_equals_unchunked(self):
        Xs = np.stack([draw(20, s) for s in range(40)])
        th = np.array([mle_tp(x).as_array() for x in Xs])
        src = EmpiricalPGF(Xs)
        grid = make_grid(3, None, 12)
        from bpgof.mvariate import _T3_chunk
        np.testing.assert_allclose(T3_values(src, th, grid), _T3_chunk(src, th, grid), rtol=1e-12)

    def test_warns_when_asked(self):
        X = draw(20, 3)
        with pytest.warns(UserWarning):
            T3_stat(X, mle_tp(X), grid=make_grid(3, None, 6), warn=True)


class TestGenericM:
    def test_Wm_reduces_to_W(self):
        X = sample_bp((1, 1, 0.25), 40, substream(4, "mv")).data
        th = mle(X)
        assert Wm_stat(X, th).value == W_stat(X, th).value

    def test_Rm_reduces_to_R(self):
        X = sample_bp((1, 1, 0.25), 40, substream(5, "mv")).data
        th = mle(X)
        assert Rm_stat(X, th).value == pytest.approx(R_stat(X, th).value, rel=1e-13)

    def test_W3_against_sparse_loop(self):
        X = draw(25, 6)
        th = np.array(TH)
        n = len(X)
        M = int(X.max())
        p = {}
        for row in X:
            p[tuple(int(v) for v in row)] = p.get(tuple(int(v) for v in row), 0) + 1 / n
        q = lambda r: p.get(tuple(r), 0.0) if min(r) >= 0 else 0.0
        ref = 0.0
        for r in np.ndindex(M + 1, M + 1, M + 1):
            for j in range(3):
                up = list(r)
                up[j] += 1
                down = [v - 1 for v in r]
                down[j] = r[j]
                b = (r[j] + 1) * q(up) - (th[j] - th[3]) * q(r) - th[3] * q(down)
                ref += b * b
        assert W3_stat(X, th).value == pytest.approx(ref, rel=1e-12)

    def test_R3_S3_nonnegative_and_zero_under_injection(self):
        X = draw(30, 7)
        th = mle_tp(X)
        assert R3_stat(X, th).value >= 0
        assert S3_stat(X, th).value >= 0
        assert abs(Sm_stat(PoissonPGF(TH, n=30), TH).value) < 1e-20

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            Wm_stat(draw(10, 8), TH, m=2)

    def test_subsets(self):
        assert len(subsets(3)) == 7
        assert subsets(2) == [(0,), (1,), (0, 1)]
