"""Tests for the polynomial core: evaluation, calculus, restriction,
sublevel intervals, resultants, and the determinant toolbox."""

import math

import numpy as np
import pytest

from rangelab.errors import (
    ContractViolation,
    DimensionMismatch,
    EnumerationBudgetExceeded,
    SingularTangentError,
)
from rangelab.poly import (
    MultiPoly,
    Partition,
    determinant,
    evaluate,
    gen_vandermonde_det,
    implicit_derivatives,
    max_sublevel_interval,
    monic_param_count,
    partial_derivative,
    poly_from_json,
    poly_to_json,
    resultant,
    restrict,
    schur,
    vandermonde_det,
)


def random_poly(rng, dim, degree, scale=1.0):
    terms = {}
    for idx in np.ndindex(*([degree + 1] * dim)):
        if sum(idx) <= degree:
            terms[idx] = rng.uniform(-scale, scale)
    return MultiPoly(dim, terms)


CIRCLE = MultiPoly(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0})


class TestEvaluate:
    def test_root_by_construction(self):
        P = MultiPoly(2, {(1, 0): 1.0, (0, 2): -1.0})
        assert evaluate(P, (4, 2)) == 0.0

    def test_cubic_root(self):
        P = MultiPoly(2, {(1, 0): 1.0, (0, 3): -1.0})
        assert evaluate(P, (1, 1)) == 0.0

    def test_zero_poly(self):
        P = MultiPoly.zero(3)
        assert evaluate(P, (0.3, -2.0, 7.0)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            evaluate(CIRCLE, (1.0,))

    def test_eval_many_matches_scalar(self):
        rng = np.random.default_rng(7)
        P = random_poly(rng, 2, 4)
        pts = rng.uniform(-2, 2, size=(50, 2))
        many = P.eval_many(pts)
        for k in range(50):
            assert many[k] == pytest.approx(evaluate(P, pts[k]), abs=1e-12)

    def test_eval_grid_2d_matches_scalar(self):
        rng = np.random.default_rng(8)
        P = random_poly(rng, 2, 3)
        xs = np.linspace(-1, 1, 7)
        ys = np.linspace(0, 2, 5)
        grid = P.eval_grid_2d(xs, ys)
        assert grid[3, 2] == pytest.approx(evaluate(P, (xs[3], ys[2])), abs=1e-12)


class TestPartialDerivative:
    def test_circle_x(self):
        assert partial_derivative(CIRCLE, 1) == MultiPoly(2, {(1, 0): 2.0})

    def test_constant_is_zero(self):
        P = MultiPoly.constant(2, 5.0)
        assert partial_derivative(P, 1).is_zero
        assert partial_derivative(P, 2).is_zero

    def test_cubic_y(self):
        P = MultiPoly(2, {(1, 0): 1.0, (0, 3): -1.0})
        assert partial_derivative(P, 2) == MultiPoly(2, {(0, 2): -3.0})

    def test_degree_drops(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            P = random_poly(rng, 2, 4)
            D = partial_derivative(P, 1)
            if not D.is_zero:
                assert D.degree <= P.degree - 1

    def test_axis_out_of_range(self):
        with pytest.raises(ContractViolation):
            partial_derivative(CIRCLE, 3)


class TestRestrict:
    def test_drop_third_axis(self):
        P = MultiPoly(3, {(1, 0, 0): 1.0, (0, 3, 0): -1.0, (0, 0, 1): 1.0})
        R = restrict(P, 3, 0.0)
        assert R == MultiPoly(2, {(1, 0): 1.0, (0, 3): -1.0})

    def test_product(self):
        P = MultiPoly(2, {(1, 1): 1.0})
        assert restrict(P, 2, 2.0) == MultiPoly(1, {(1,): 2.0})

    def test_restrict_evaluate_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            dim = int(rng.integers(2, 4))
            P = random_poly(rng, dim, 3)
            x = rng.uniform(-1.5, 1.5, size=dim)
            axis = int(rng.integers(1, dim + 1))
            R = restrict(P, axis, x[axis - 1])
            reduced = np.delete(x, axis - 1)
            assert evaluate(R, reduced) == pytest.approx(
                evaluate(P, x), abs=1e-12, rel=1e-12
            )


class TestImplicitDerivatives:
    def test_circle_top(self):
        d = implicit_derivatives(CIRCLE, (0.0, 1.0), 2)
        assert d[0] == pytest.approx(0.0, abs=1e-12)
        assert d[1] == pytest.approx(-1.0, abs=1e-12)

    def test_explicit_cubic(self):
        P = MultiPoly(2, {(0, 1): 1.0, (3, 0): -1.0})
        assert implicit_derivatives(P, (1.0, 1.0), 3) == pytest.approx([3.0, 6.0, 6.0])

    def test_line(self):
        P = MultiPoly(2, {(0, 1): 1.0, (1, 0): -1.0})
        assert implicit_derivatives(P, (0.25, 0.25), 2) == pytest.approx([1.0, 0.0])

    def test_vertical_tangent_rejected(self):
        with pytest.raises(SingularTangentError):
            implicit_derivatives(CIRCLE, (1.0, 0.0), 2)

    def test_off_curve_rejected(self):
        with pytest.raises(ContractViolation):
            implicit_derivatives(CIRCLE, (0.0, 0.5), 1)

    def test_against_finite_differences(self):
        # Independent check: numerically differentiate the solved branch.
        P = MultiPoly(2, {(0, 1): 1.0, (2, 0): -0.7, (1, 0): 0.2, (0, 0): -0.3})
        x0 = 0.4
        y0 = 0.7 * x0**2 - 0.2 * x0 + 0.3
        d = implicit_derivatives(P, (x0, y0), 2)
        assert d == pytest.approx([1.4 * x0 - 0.2, 1.4], abs=1e-9)


class TestMaxSublevelInterval:
    def test_parabola_closed_form(self):
        P = MultiPoly.univariate([0.0, 0.0, 1.0])
        assert max_sublevel_interval(P, 0.01, (-1, 1)) == pytest.approx(0.2, abs=1e-9)

    def test_line(self):
        P = MultiPoly.univariate([0.0, 1.0])
        assert max_sublevel_interval(P, 0.5, (-1, 1)) == pytest.approx(1.0, abs=1e-9)

    def test_empty_sublevel(self):
        P = MultiPoly.univariate([10.0, 0.0, 1.0])
        assert max_sublevel_interval(P, 0.5, (-1, 1)) == 0.0

    def test_domain_clipping(self):
        P = MultiPoly.univariate([0.0, 1.0])
        assert max_sublevel_interval(P, 5.0, (-1, 1)) == pytest.approx(2.0, abs=1e-9)

    def test_nonpositive_w_rejected(self):
        with pytest.raises(ContractViolation):
            max_sublevel_interval(MultiPoly.univariate([0, 1]), 0.0, (-1, 1))

    @pytest.mark.parametrize("w", [1e-3, 1e-2])
    def test_leading_coefficient_bound(self, w):
        # t <= 8 * (w / |a_d|)^(1/d) on random degree <= 5 polynomials.
        rng = np.random.default_rng(1234)
        for _ in range(120):
            d = int(rng.integers(1, 6))
            coeffs = rng.uniform(-1, 1, d + 1)
            lead = rng.uniform(0.1, 1.0) * (1 if rng.random() < 0.5 else -1)
            coeffs[d] = lead
            P = MultiPoly.univariate(coeffs)
            t = max_sublevel_interval(P, w, (-1, 1), grid_cells=1 << 16)
            assert t <= 8.0 * (w / abs(lead)) ** (1.0 / d) + 1e-9


class TestResultant:
    def test_circle_vs_vertical_line(self):
        R = resultant(CIRCLE, MultiPoly(2, {(1, 0): 1.0}), eliminate=1)
        # Hand-expanded Sylvester determinant: y^2 - 1.
        coeffs = R.univariate_coeffs()
        assert coeffs == pytest.approx([-1.0, 0.0, 1.0], abs=1e-9)

    def test_shared_factor_gives_zero(self):
        P = MultiPoly(2, {(2, 0): 1.0, (1, 0): 1.0})  # (x+1) x
        Q = MultiPoly(2, {(1, 1): 1.0, (0, 1): 1.0})  # (x+1) y
        assert resultant(P, Q, eliminate=1).is_zero

    def test_one_by_one_sylvester(self):
        R = resultant(
            MultiPoly(2, {(1, 0): 1.0}), MultiPoly(2, {(0, 1): 1.0}), eliminate=1
        )
        assert R == MultiPoly.univariate([0.0, 1.0])

    def test_constructed_shared_factor_pairs(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            common = random_poly(rng, 2, 1)
            A = random_poly(rng, 2, 1)
            B = random_poly(rng, 2, 2)
            assert resultant(common * A, common * B, eliminate=1).is_zero

    def test_coprime_pairs_nonzero(self):
        rng = np.random.default_rng(22)
        hits = 0
        for _ in range(10):
            P = random_poly(rng, 2, 2)
            Q = random_poly(rng, 2, 2)
            if not resultant(P, Q, eliminate=1).is_zero:
                hits += 1
        assert hits == 10  # random dense pairs are coprime

    def test_matches_pointwise_determinant(self):
        # Oracle: evaluate the interpolated resultant and compare with a
        # directly assembled numeric Sylvester determinant at fresh points.
        rng = np.random.default_rng(23)
        P = random_poly(rng, 2, 3)
        Q = random_poly(rng, 2, 2)
        R = resultant(P, Q, eliminate=1)
        for y0 in rng.uniform(-0.9, 0.9, 5):
            pu = np.zeros(4)
            qu = np.zeros(3)
            for (i, j), c in P.terms.items():
                pu[i] += c * y0**j
            for (i, j), c in Q.terms.items():
                qu[i] += c * y0**j
            m = np.zeros((5, 5))
            for r in range(2):
                m[r, r : r + 4] = pu[::-1]
            for r in range(3):
                m[2 + r, r : r + 3] = qu[::-1]
            expected = np.linalg.det(m)
            assert evaluate(R, (y0,)) == pytest.approx(expected, rel=1e-7, abs=1e-9)


class TestDeterminantToolbox:
    def test_vandermonde_examples(self):
        assert vandermonde_det([1, 2, 3]) == pytest.approx(2.0)
        assert vandermonde_det([4.2]) == 1.0
        assert vandermonde_det([1, 1, 2]) == 0.0

    def test_schur_trivial_shapes(self):
        assert schur(Partition([0, 0, 0]), [1.3, 0.2, 5.0]) == 1.0
        assert schur(Partition([1, 0]), [1.0, 1.0]) == 2.0
        assert schur(Partition([2, 0]), [1.0, 1.0]) == 3.0

    def test_schur_budget(self):
        with pytest.raises(EnumerationBudgetExceeded):
            schur(Partition([20, 10, 5]), [1.0] * 8, budget=100)

    def test_gen_vandermonde_reduces_to_vandermonde(self):
        xs = [1.1, 1.5, 1.9]
        assert gen_vandermonde_det(Partition([0, 0, 0]), xs) == pytest.approx(
            vandermonde_det(xs), rel=1e-12
        )

    def test_factorization_identity(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            xs = rng.uniform(1, 2, n)
            while np.min(np.diff(np.sort(xs))) < 1e-3:
                xs = rng.uniform(1, 2, n)
            lam = Partition(sorted(rng.integers(0, 4, n), reverse=True))
            lhs = gen_vandermonde_det(lam, xs)
            rhs = vandermonde_det(xs) * schur(lam, xs)
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_ratio_bounded_by_tableau_count(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            xs = np.sort(rng.uniform(1, 2, n))
            while np.min(np.diff(xs)) < 1e-2:
                xs = np.sort(rng.uniform(1, 2, n))
            lam = Partition(sorted(rng.integers(0, 4, n), reverse=True))
            count = schur(lam, [1.0] * n)
            ratio = gen_vandermonde_det(lam, xs) / vandermonde_det(xs)
            assert 1.0 - 1e-9 <= ratio <= count * 2.0 ** lam.size + 1e-9

    def test_multilinearity(self):
        rng = np.random.default_rng(33)
        for _ in range(40):
            A = rng.normal(size=(4, 4))
            j = int(rng.integers(0, 4))
            r = rng.normal()
            w = rng.normal(size=4)
            v = A[:, j] - r * w
            Aw = A.copy()
            Aw[:, j] = w
            Av = A.copy()
            Av[:, j] = v
            lhs = determinant(A)
            rhs = r * determinant(Aw) + determinant(Av)
            assert lhs == pytest.approx(rhs, abs=1e-9 * max(1.0, abs(lhs)))

    def test_monic_param_count(self):
        assert monic_param_count(2, 4) == 14
        assert monic_param_count(2, 5) == 20
        assert monic_param_count(2, 1) == 2
        assert [monic_param_count(2, d) for d in range(1, 6)] == [2, 5, 9, 14, 20]


class TestPartitionType:
    def test_must_be_weakly_decreasing(self):
        with pytest.raises(ContractViolation):
            Partition([1, 2])
        with pytest.raises(ContractViolation):
            Partition([2, -1])

    def test_size(self):
        assert Partition([3, 1, 0]).size == 4


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            P = random_poly(rng, int(rng.integers(1, 4)), 3)
            Q = poly_from_json(poly_to_json(P))
            assert Q == P

    def test_json_shape(self):
        data = poly_to_json(CIRCLE)
        assert data["dim"] == 2
        assert [[0, 0], -1.0] in data["terms"]
