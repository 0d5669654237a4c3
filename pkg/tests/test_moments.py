from itertools import permutations, product
from math import factorial

import numpy as np
import pytest
import sympy as sp

from blindtr.moments import (ComplexMomentTable, _permanent_direct, _permanent_ryser, central_moments,
                             complex_moment, complex_moments, cumulants, gen_binomial, jm_matrix,
                             moments_to_cumulants, pair_covariance, permanent, real_moments)
from blindtr.product import ProductModel, product_summary

from conftest import random_models


def wick_oracle(model, m, n):
    """E[P^m conj(P)^n] by enumerating which factors keep their fluctuation."""
    means = {"X": model.mu_x, "Y": model.mu_y}
    unconj = ["X"] * m + ["Y"] * n
    conj = ["Y"] * m + ["X"] * n
    total = 0j
    for keep_u in product([0, 1], repeat=len(unconj)):
        for keep_c in product([0, 1], repeat=len(conj)):
            fu = [v for v, k in zip(unconj, keep_u) if k]
            fc = [v for v, k in zip(conj, keep_c) if k]
            if len(fu) != len(fc):
                continue
            coef = np.prod([means[v] for v, k in zip(unconj, keep_u) if not k] or [1])
            coef *= np.prod([means[v].conjugate() for v, k in zip(conj, keep_c) if not k] or [1])
            wick = sum(np.prod([pair_covariance(model, fu[r], fc[c]) for r, c in enumerate(perm)]
                               or [1]) for perm in permutations(range(len(fc))))
            total += coef * wick
    return total


class TestPairCovariance:
    def test_values(self):
        m = ProductModel(0, 0, 2.0, 1.0, 0.3 + 0.3j)
        assert pair_covariance(m, "X", "X") == 4
        assert pair_covariance(m, "Y", "Y") == 1
        assert pair_covariance(ProductModel(0, 0, 1, 1, 0.3 + 0.3j), "X", "Y") == 0.3 + 0.3j

    @pytest.mark.parametrize("model", random_models(5, seed=1))
    def test_hermitian(self, model):
        assert pair_covariance(model, "Y", "X") == pair_covariance(model, "X", "Y").conjugate()

    def test_bad_label(self, fig1_model):
        with pytest.raises(ValueError):
            pair_covariance(fig1_model, "X", "Z")


class TestPermanent:
    def test_small(self):
        assert permanent([[3 + 1j]]) == 3 + 1j
        assert permanent([[1, 2], [3, 4]]) == 1 * 4 + 2 * 3
        assert permanent(np.zeros((0, 0))) == 1

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
    def test_ryser_matches_permutation_sum(self, n):
        rng = np.random.default_rng(n)
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        brute = sum(np.prod([a[i, p[i]] for i in range(n)]) for p in permutations(range(n)))
        assert _permanent_ryser(a) == pytest.approx(brute, rel=1e-12)
        assert _permanent_direct(a) == pytest.approx(brute, rel=1e-12)
        assert permanent(a) == pytest.approx(brute, rel=1e-12)

    def test_size_limit(self):
        with pytest.raises(ValueError):
            permanent(np.ones((9, 9)))
        with pytest.raises(ValueError):
            permanent(np.ones((2, 3)))


class TestComplexMoment:
    def test_unit(self, fig1_model):
        assert complex_moment(fig1_model, 0, 0) == 1

    def test_first_moment_is_mean(self, fig1_model):
        m = fig1_model
        assert complex_moment(m, 1, 0) == pytest.approx(m.mu_x * m.mu_y.conjugate()
                                                         + m.rho * m.sigma_x * m.sigma_y)

    def test_second_absolute_moment(self, fig1_model):
        s = product_summary(fig1_model)
        assert complex_moment(fig1_model, 1, 1) == pytest.approx(abs(s.mean) ** 2 + s.variance)

    def test_zero_mean_pseudo_variance(self):
        m = ProductModel(0, 0, 1.0, 1.0, 0.3 + 0.3j)
        assert complex_moment(m, 2, 0) == pytest.approx(2 * (0.3 + 0.3j) ** 2)

    @pytest.mark.parametrize("model", random_models(3, seed=7))
    @pytest.mark.parametrize("mn", [(1, 0), (0, 2), (1, 1), (2, 1), (3, 0), (2, 2), (1, 3), (4, 1)])
    def test_matches_wick_enumeration(self, model, mn):
        assert complex_moment(model, *mn) == pytest.approx(wick_oracle(model, *mn), rel=1e-12)

    @pytest.mark.parametrize("model", random_models(4, seed=3))
    def test_hermitian_symmetry(self, model):
        for m in range(7):
            for n in range(7 - m):
                assert complex_moment(model, m, n) == pytest.approx(
                    complex_moment(model, n, m).conjugate(), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("model", random_models(3, seed=5))
    def test_scaling_covariance(self, model):
        alpha = 2.0
        scaled = ProductModel(alpha * model.mu_x, model.mu_y, alpha * model.sigma_x,
                              model.sigma_y, model.rho)
        for m in range(5):
            for n in range(5 - m):
                assert complex_moment(scaled, m, n) == pytest.approx(
                    alpha ** (m + n) * complex_moment(model, m, n), rel=1e-12, abs=1e-12)

    def test_order_limit(self, fig1_model):
        with pytest.raises(ValueError):
            complex_moment(fig1_model, 5, 4)
        with pytest.raises(ValueError):
            complex_moment(fig1_model, -1, 0)

    def test_table(self, fig1_model):
        t = complex_moments(fig1_model, 4)
        assert isinstance(t, ComplexMomentTable)
        assert t[(0, 0)] == 1
        assert len(t.entries) == 15


class TestJm:
    def test_first_order(self):
        assert np.array_equal(jm_matrix(1), np.array([[1, 1j], [1, -1j]]))

    def test_second_order_first_row(self):
        assert np.array_equal(jm_matrix(2)[0], [1, 2j, -1])

    def test_generalised_binomial(self):
        assert gen_binomial(-2, 2) == 3
        assert gen_binomial(-1, 3) == -1
        assert gen_binomial(3, 5) == 0
        assert gen_binomial(5, 2) == 10

    @pytest.mark.parametrize("m", range(1, 9))
    def test_rows_match_symbolic_expansion(self, m):
        p1, p2 = sp.symbols("p1 p2")
        jm = jm_matrix(m)
        for k in range(m + 1):
            poly = sp.Poly(sp.expand((p1 + sp.I * p2) ** (m - k) * (p1 - sp.I * p2) ** k), p1, p2)
            expected = [complex(poly.coeff_monomial(p1 ** (m - l) * p2 ** l)) for l in range(m + 1)]
            assert np.array_equal(jm[k], np.array(expected))

    def test_range(self):
        with pytest.raises(ValueError):
            jm_matrix(0)
        with pytest.raises(ValueError):
            jm_matrix(9)


class TestRealMoments:
    def test_first_order(self, fig1_model):
        rm = real_moments(fig1_model, 1)
        mean = product_summary(fig1_model).mean
        assert rm[(1, 0)] == pytest.approx(mean.real)
        assert rm[(0, 1)] == pytest.approx(mean.imag)

    def test_zero_mean_second_order(self):
        rm = real_moments(ProductModel(0, 0, 1, 1, 0), 2)
        assert rm[(2, 0)] == pytest.approx(0.5)
        assert rm[(0, 2)] == pytest.approx(0.5)
        assert rm[(1, 1)] == pytest.approx(0, abs=1e-15)

    @pytest.mark.parametrize("model", random_models(4, seed=11))
    def test_reassembles_complex_moments(self, model):
        rm = real_moments(model, 6)
        for m in range(7):
            for n in range(7 - m):
                # E[(P1 + i P2)^m (P1 - i P2)^n] expanded term by term
                p1, p2 = sp.symbols("p1 p2")
                poly = sp.Poly(sp.expand((p1 + sp.I * p2) ** m * (p1 - sp.I * p2) ** n), p1, p2)
                val = sum(complex(c) * rm[mon] for mon, c in zip(poly.monoms(), poly.coeffs()))
                ref = complex_moment(model, m, n)
                assert abs(val - ref) <= 1e-9 * max(1.0, abs(ref))

    def test_imaginary_residue_small(self, fig1_model):
        assert real_moments(fig1_model, 8).max_imag_residue < 1e-9


def _sympy_cumulants(mom, order):
    """Cumulants as Taylor coefficients of log of the moment generating polynomial."""
    t1, t2, eps = sp.symbols("t1 t2 eps")
    mgf = sum(sp.Rational(1, factorial(a) * factorial(b)) * sp.nsimplify(mom[(a, b)])
              * (eps * t1) ** a * (eps * t2) ** b
              for a in range(order + 1) for b in range(order + 1 - a))
    series = sp.expand(sp.series(sp.log(mgf), eps, 0, order + 1).removeO())
    poly = sp.Poly(series.subs(eps, 1), t1, t2)
    return {(a, b): float(poly.coeff_monomial(t1 ** a * t2 ** b) * factorial(a) * factorial(b))
            for a in range(order + 1) for b in range(order + 1 - a) if 0 < a + b}


class TestCumulants:
    def test_order_four_formula(self):
        rng = np.random.default_rng(0)
        mom = {(a, b): rng.normal() for a in range(5) for b in range(5 - a)}
        mom[(0, 0)] = 1.0
        mom[(1, 0)] = mom[(0, 1)] = 0.0
        k = moments_to_cumulants(mom, 4)
        assert k[(2, 2)] == pytest.approx(mom[(2, 2)] - mom[(2, 0)] * mom[(0, 2)] - 2 * mom[(1, 1)] ** 2)

    def test_recursion_matches_log_mgf(self):
        rng = np.random.default_rng(1)
        mom = {(a, b): round(rng.normal(), 3) for a in range(6) for b in range(6 - a)}
        mom[(0, 0)] = 1.0
        k = moments_to_cumulants(mom, 5)
        ref = _sympy_cumulants(mom, 5)
        for key, val in ref.items():
            assert k[key] == pytest.approx(val, rel=1e-9, abs=1e-9)

    def test_gaussian_input_has_no_higher_cumulants(self):
        mean = (0.7, -1.2)
        cov = np.array([[1.3, 0.4], [0.4, 0.8]])
        t1, t2 = sp.symbols("t1 t2")
        mgf = sp.exp(mean[0] * t1 + mean[1] * t2 + sp.Rational(1, 2) * (
            cov[0, 0] * t1 ** 2 + 2 * cov[0, 1] * t1 * t2 + cov[1, 1] * t2 ** 2))
        mom = {}
        for a in range(7):
            for b in range(7 - a):
                mom[(a, b)] = float(sp.diff(mgf, t1, a, t2, b).subs({t1: 0, t2: 0}))
        k = moments_to_cumulants(central_moments(mom, 6), 6)
        for (a, b), v in k.items():
            if a + b >= 3:
                assert abs(v) < 1e-9
        assert k[(2, 0)] == pytest.approx(1.3)
        assert k[(1, 1)] == pytest.approx(0.4)

    @pytest.mark.parametrize("model", random_models(4, seed=2))
    def test_trace_is_total_variance(self, model):
        c = cumulants(model, 6)
        assert c[(2, 0)] + c[(0, 2)] == pytest.approx(product_summary(model).variance, rel=1e-10)
        assert c.covariance[0, 1] == c[(1, 1)]

    def test_gaussian_limit(self, fig1_model):
        def standardised(model):
            c = cumulants(model, 4)
            s = np.sqrt(np.diag(c.covariance))
            return [abs(v) / (s[0] ** a * s[1] ** b) for (a, b), v in c.entries.items()
                    if a + b in (3, 4)]
        base = standardised(fig1_model)
        far = standardised(fig1_model.scaled_means(8))
        for b, f in zip(base, far):
            assert f <= b / 4 + 1e-12

    def test_order_limits(self, fig1_model):
        with pytest.raises(ValueError):
            cumulants(fig1_model, 1)
        with pytest.raises(ValueError):
            cumulants(fig1_model, 9)
