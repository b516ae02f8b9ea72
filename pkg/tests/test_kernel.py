import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from foldedwiener.exceptions import DimensionMismatchError, DomainError, FactorizationError
from foldedwiener.kernel import (
    JITTER_LADDER,
    ProblemSpec,
    cov,
    cross_cov,
    cross_moment,
    factor1d,
    factor1d_moment,
    factor1d_trace,
    gram,
    kernel_trace,
    representer1d,
    rkhs_norm_sq,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def quad_factor(t, x, r):
    f = lambda s: (t - s) ** r * (x - s) ** r / math.factorial(r) ** 2
    return integrate.quad(f, 0.0, min(t, x), epsabs=0, epsrel=1e-13, limit=200)[0]


class TestProblemSpec:
    def test_rate_exponents(self):
        spec = ProblemSpec.from_r([1, 1, 3])
        assert (spec.d, spec.r_min, spec.k_star) == (3, 1, 2)
        assert spec.rate_exponent == 1.5
        assert spec.log_exponent == 2.0

    def test_equal_smoothness_has_full_log_power(self):
        assert ProblemSpec.from_r([0, 0]).log_exponent == 1.0
        assert ProblemSpec.from_r([0]).log_exponent == 0.0

    @pytest.mark.parametrize(
        "kwargs, exc",
        [
            (dict(d=2, r=(0,)), DimensionMismatchError),
            (dict(d=1, r=(-1,)), DomainError),
            (dict(d=0, r=()), DomainError),
            (dict(d=1, r=(0,), c=0.0), DomainError),
        ],
    )
    def test_rejects_invalid(self, kwargs, exc):
        with pytest.raises(exc):
            ProblemSpec(**kwargs)


class TestFactor:
    def test_integrated_brownian_corner(self):
        assert factor1d(1.0, 1.0, 1) == pytest.approx(1 / 3, rel=1e-15)

    def test_brownian_is_min(self):
        assert factor1d(0.3, 0.7, 0) == 0.3

    @settings(max_examples=80, deadline=None)
    @given(unit, unit, st.integers(0, 4))
    def test_matches_adaptive_quadrature(self, t, x, r):
        expected = quad_factor(t, x, r)
        assert factor1d(t, x, r) == pytest.approx(expected, rel=1e-10, abs=1e-300)

    @settings(max_examples=60, deadline=None)
    @given(unit, unit, st.integers(0, 4))
    def test_symmetric(self, t, x, r):
        assert factor1d(t, x, r) == factor1d(x, t, r)

    def test_vanishes_on_zero_face(self):
        assert np.all(factor1d(0.0, np.linspace(0, 1, 11), 2) == 0.0)

    def test_broadcasts(self):
        out = factor1d(np.array([[0.2], [0.4]]), np.array([0.1, 0.5, 0.9]), 1)
        assert out.shape == (2, 3)

    @pytest.mark.parametrize("r", range(5))
    def test_trace_closed_form(self, r):
        expected = integrate.quad(lambda t: factor1d(t, t, r), 0, 1, epsrel=1e-13)[0]
        assert factor1d_trace(r) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("bad", [-0.1, 1.5, np.nan])
    def test_rejects_points_outside_cube(self, bad):
        with pytest.raises(DomainError):
            factor1d(bad, 0.5, 0)

    def test_rejects_fractional_order(self):
        with pytest.raises(DomainError):
            factor1d(0.5, 0.5, 0.5)

    @pytest.mark.parametrize("r", [0, 1, 3])
    def test_moment_against_quadrature(self, r):
        a, b = 0.37, 0.81
        f = lambda t: factor1d(a, t, r) * factor1d(b, t, r)
        expected = integrate.quad(f, 0, 1, points=[a, b], epsrel=1e-13)[0]
        assert factor1d_moment(a, b, r) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("r", [0, 1, 2])
    def test_representer_reproduces_factor(self, r):
        x, y = 0.45, 0.9
        f = lambda s: representer1d(x, s, r) * representer1d(y, s, r)
        expected = integrate.quad(f, 0, 1, points=[x], epsrel=1e-13)[0]
        assert factor1d(x, y, r) == pytest.approx(expected, rel=1e-11)


class TestCovariance:
    def test_tensor_product(self):
        spec = ProblemSpec.from_r([0, 1])
        t, x = np.array([0.3, 0.6]), np.array([0.8, 0.2])
        assert cov(t, x, spec) == pytest.approx(factor1d(0.3, 0.8, 0) * factor1d(0.6, 0.2, 1))

    def test_sheet_value(self, sheet):
        assert cov([0.5, 0.5], [0.25, 1.0], sheet) == 0.125

    @settings(max_examples=60, deadline=None)
    @given(st.lists(unit, min_size=3, max_size=3), st.lists(st.integers(0, 3), min_size=3, max_size=3))
    def test_diagonal_bounded_by_one(self, t, r):
        assert 0.0 <= cov(np.array(t), np.array(t), ProblemSpec.from_r(r)) <= 1.0

    def test_dimension_mismatch(self, sheet):
        with pytest.raises(DimensionMismatchError):
            cov([0.5], [0.5], sheet)

    def test_cross_cov_matches_pairwise(self, rng):
        spec = ProblemSpec.from_r([1, 0])
        X, Y = rng.random((7, 2)), rng.random((4, 2))
        brute = np.array([[cov(a, b, spec) for b in Y] for a in X])
        np.testing.assert_allclose(cross_cov(X, Y, spec), brute, rtol=1e-14)

    def test_cross_moment_matches_quadrature(self, sheet):
        X = np.array([[0.3, 0.7], [0.9, 0.4]])
        def moment(a, b):
            total = 1.0
            for j in range(2):
                f = lambda t: min(a[j], t) * min(b[j], t)
                total *= integrate.quad(f, 0, 1, points=sorted({a[j], b[j]}))[0]
            return total
        brute = np.array([[moment(a, b) for b in X] for a in X])
        np.testing.assert_allclose(cross_moment(X, X, sheet), brute, rtol=1e-12)

    def test_trace(self):
        assert kernel_trace(ProblemSpec.from_r([0, 1])) == pytest.approx(0.5 / 12)


class TestGram:
    def test_factor_reproduces_matrix(self, rng):
        spec = ProblemSpec.from_r([1, 1])
        fact = gram(rng.random((30, 2)) * 0.98 + 0.01, spec)
        assert fact.jitter in tuple(j * np.trace(fact.matrix) / fact.n for j in JITTER_LADDER)
        recon = fact.factor @ fact.factor.T - fact.jitter * np.eye(fact.n)
        np.testing.assert_allclose(recon, fact.matrix, atol=1e-14)

    def test_solve(self, rng):
        spec = ProblemSpec.from_r([0])
        fact = gram(np.linspace(0.1, 1, 10), spec)
        b = rng.random(10)
        np.testing.assert_allclose(fact.matrix @ fact.solve(b), b, rtol=1e-10)

    def test_empty_design_rejected(self, brownian):
        with pytest.raises(DomainError):
            gram(np.zeros((0, 1)), brownian)

    def test_zero_coordinate_rejected(self, sheet):
        with pytest.raises(DomainError):
            gram([[0.0, 0.5], [0.5, 0.5]], sheet)

    def test_duplicates_need_jitter(self, brownian):
        assert gram([0.5, 0.5, 0.5], brownian).jitter > 0.0

    def test_failure_after_last_rung(self, brownian, monkeypatch):
        monkeypatch.setattr("foldedwiener.kernel.JITTER_LADDER", (0.0,))
        with pytest.raises(FactorizationError):
            gram([0.5, 0.5, 0.5], brownian)


class TestRkhsNorm:
    def test_matches_double_sum(self, rng):
        spec = ProblemSpec.from_r([0, 1])
        pts = rng.random((6, 2)) * 0.9 + 0.05
        c = rng.standard_normal(6)
        fact = gram(pts, spec)
        brute = sum(c[i] * c[j] * cov(pts[i], pts[j], spec) for i in range(6) for j in range(6))
        assert rkhs_norm_sq(c, fact) == pytest.approx(brute, rel=1e-12)

    def test_section_norm_is_diagonal(self, brownian):
        fact = gram([0.25, 0.75], brownian)
        assert rkhs_norm_sq([0.0, 1.0], fact) == pytest.approx(0.75)

    def test_wrong_length(self, brownian):
        with pytest.raises(DimensionMismatchError):
            rkhs_norm_sq([1.0], gram([0.25, 0.75], brownian))
