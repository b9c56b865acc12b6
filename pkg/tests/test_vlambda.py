import math

import numpy as np
import pytest
from scipy import optimize

from sparseclt import vlambda

LAMS = (0.5, 1.0, 2.0, 8.0, 32.0)


class TestFixedPoint:
    def test_infinite_lambda(self):
        ref = optimize.brentq(lambda a: a - math.exp(-a), 0.0, 1.0, xtol=1e-15)
        assert vlambda.fixed_point_A(math.inf) == pytest.approx(ref, abs=1e-14)
        assert abs(vlambda.fixed_point_A(math.inf) - 0.5671432904) <= 1e-9

    @pytest.mark.parametrize("lam", LAMS)
    def test_residual(self, lam):
        A = vlambda.fixed_point_A(lam, 1e-12)
        assert abs(A - math.exp(-A) * -math.expm1(-lam / 2)) < 1e-12

    def test_matches_root_finder(self):
        for lam in LAMS:
            c = -math.expm1(-lam / 2)
            ref = optimize.brentq(lambda a: a - math.exp(-a) * c, 0.0, 1.0, xtol=1e-15)
            assert vlambda.fixed_point_A(lam) == pytest.approx(ref, abs=1e-14)

    def test_increasing(self):
        A = [vlambda.fixed_point_A(l) for l in LAMS]
        assert all(b > a for a, b in zip(A[:-1], A[1:]))

    def test_rejects(self):
        with pytest.raises(ValueError):
            vlambda.fixed_point_A(0.0)


class TestScalarIteration:
    def test_first_step(self):
        seq = vlambda.scalar_iteration(2.0, 1)
        assert seq[0].a_k == 0.0 and seq[0].b_k == 1.0
        assert seq[1].b_k == pytest.approx(1 - math.exp(-1), abs=1e-15)

    def test_against_float_recursion(self):
        lam = 2.0
        c = -math.expm1(-lam / 2)
        a, b = 0.0, lam / 2
        for it in vlambda.scalar_iteration(lam, 30)[1:]:
            a, b = c * math.exp(-b), c * math.exp(-a)
            assert it.a_k == pytest.approx(a, abs=1e-14) and it.b_k == pytest.approx(b, abs=1e-14)

    @pytest.mark.parametrize("lam", LAMS)
    def test_sandwich(self, lam):
        A = vlambda.fixed_point_A(lam)
        for it in vlambda.scalar_iteration(lam, 60):
            assert 0.0 <= it.a_k <= A <= it.b_k <= lam / 2

    def test_convergence_and_ratio(self):
        A = vlambda.fixed_point_A(2.0)
        seq = vlambda.scalar_iteration(2.0, 60)
        assert seq[60].b_k - A < 1e-10
        ratio, _ = vlambda.two_step_ratio(2.0, 60)
        assert abs(ratio - A * A) < 1e-6

    def test_tail_functions(self):
        seq = vlambda.scalar_iteration(2.0, 5)
        F, G = vlambda.tail_functions(seq, 3)
        x = np.linspace(0, 1, 2001)
        # E(F_k) = a_k, E(G_k) = b_k
        assert np.trapezoid(F(x), x) == pytest.approx(seq[3].a_k, rel=1e-6)
        assert np.trapezoid(G(x), x) == pytest.approx(seq[3].b_k, rel=1e-6)
        assert np.all(F(x) <= G(x))
        with pytest.raises(ValueError):
            vlambda.tail_functions(seq, 0)

    def test_rejects(self):
        with pytest.raises(ValueError):
            vlambda.scalar_iteration(2.0, 0)


class TestBounds:
    @pytest.mark.parametrize("lam", [2.0, 0.5])
    def test_all_hold(self, lam):
        rep = vlambda.convergence_bound_check(lam, 40)
        assert rep.all_pass and rep.sandwich_ok and rep.monotone_ok

    def test_contraction_small_lambda(self):
        lam = 0.5
        rep = vlambda.convergence_bound_check(lam, 40)
        assert rep.two_step_ratio <= math.exp(-vlambda.fixed_point_A(lam))

    def test_k0_row(self):
        rep = vlambda.convergence_bound_check(3.0, 2)
        r0 = rep.rows[0]
        assert r0.k == 0 and r0.b_k - rep.A <= 3.0

    def test_csv_rows(self):
        rep = vlambda.convergence_bound_check(2.0, 60)
        rows = rep.csv_rows()
        assert len(rows) == 61 and len(rep.CSV_HEADER) == len(rows[0])


class TestMatchingOperator:
    def test_zero_maps_to_one(self):
        F = vlambda.GridFn(-1.0, 1.0, np.zeros(128))
        np.testing.assert_array_equal(vlambda.apply_matching_operator(F).values, np.ones(128))

    def test_constant_input_closed_form(self):
        # F = 1 gives exp(-(hi + x))
        F = vlambda.GridFn(-2.0, 2.0, np.ones(257))
        out = vlambda.apply_matching_operator(F)
        np.testing.assert_allclose(out.values, np.exp(-(2.0 + out.x)), atol=1e-12)

    def test_trapezoid_against_quadrature(self):
        lo, hi, m = -1.5, 1.5, 4097
        x = np.linspace(lo, hi, m)
        out = vlambda.apply_matching_operator(vlambda.GridFn(lo, hi, np.exp(-x**2)))
        from scipy import integrate

        for i in (0, 1000, 2048, 4096):
            ref = math.exp(-integrate.quad(lambda t: math.exp(-t * t), -x[i], hi)[0])
            assert out.values[i] == pytest.approx(ref, abs=1e-6)

    def test_lambda_one(self):
        r = vlambda.matching_operator_iterate(1.0, 1024, 100)
        assert r.alpha_hat < 1 and r.contracting
        usable = r.gaps[r.gaps > 1e-13]
        assert np.all(np.diff(usable) <= 0)

    def test_sweep_increasing(self):
        a = [vlambda.matching_operator_iterate(l, 1024, 100).alpha_hat for l in (1.0, 4.0, 16.0, 64.0)]
        assert all(y >= x for x, y in zip(a[:-1], a[1:]))

    @pytest.mark.parametrize("lam", [1.0, 4.0, 16.0])
    def test_grid_refinement(self, lam):
        a = vlambda.matching_operator_iterate(lam, 1024, 100).alpha_hat
        b = vlambda.matching_operator_iterate(lam, 2048, 100).alpha_hat
        assert abs(a - b) < 1e-3

    def test_sandwich_of_iterates(self):
        r = vlambda.matching_operator_iterate(2.0, 256, 20)
        for k in range(0, 20, 2):
            assert np.all(r.from_zero[k].values <= r.from_one[k].values + 1e-15)

    def test_estimate_alpha(self):
        gaps = 0.5 ** (np.arange(60) / 2)
        assert vlambda.estimate_alpha(gaps) == pytest.approx(0.5, rel=1e-12)
        assert math.isnan(vlambda.estimate_alpha(np.array([1.0, 0.0, 0.0])))

    def test_rejects(self):
        with pytest.raises(ValueError):
            vlambda.matching_operator_iterate(1.0, 32, 10)
        with pytest.raises(ValueError):
            vlambda.apply_matching_operator(vlambda.GridFn(0.0, 1.0, np.ones(64)))
