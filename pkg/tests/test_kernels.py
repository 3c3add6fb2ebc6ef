"""Kernels, kernel norms, Forelli-Rudin integrals, degree scaling."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bergmanlab.geometry import BallPoint, generate_lattice
from bergmanlab.kernels import (HoloPoly, KernelParams, UNWEIGHTED,
                                apply_forelli_rudin, apply_fractional,
                                binomial_series_coeffs, derivative_kernel,
                                forelli_rudin, graded_indices, kernel_ap_norm,
                                kernel_eval, kernel_poly, kernel_values,
                                normalized_kernel_eval)
from bergmanlab.quadrature import (DEFAULT_SCHEME, QuadratureScheme,
                                   disk_grid, integrate_ball)
from bergmanlab._fastpath import pairwise_sum


def _indep_binomials(power: float, degree: int) -> np.ndarray:
    # independent recurrence b_{j+1} = b_j (j + power)/(j + 1), b_0 = 1
    out = np.empty(degree + 1)
    out[0] = 1.0
    for j in range(degree):
        out[j + 1] = out[j] * (j + power) / (j + 1)
    return out


class TestKernelEval:
    def test_vanishing_inner_product(self):
        kp = UNWEIGHTED
        for w in (0.3, -0.8j, 0.5 + 0.4j):
            assert kernel_eval(kp, BallPoint.of(0), BallPoint.of(w)) == 1.0

    def test_direct_substitution(self):
        got = kernel_eval(UNWEIGHTED, BallPoint.of(0.5), BallPoint.of(0.5))
        assert got == pytest.approx(16.0 / 9.0, rel=1e-15)

    @given(st.floats(0, 0.9), st.floats(0, 1), st.floats(0, 0.9),
           st.floats(0, 1))
    def test_hermitian_symmetry(self, r1, t1, r2, t2):
        z = BallPoint.of(r1 * np.exp(2j * np.pi * t1))
        w = BallPoint.of(r2 * np.exp(2j * np.pi * t2))
        kp = KernelParams(alpha=0.5)
        assert kernel_eval(kp, z, w) == pytest.approx(
            np.conj(kernel_eval(kp, w, z)), rel=1e-14)

    def test_two_variables(self):
        kp = KernelParams(n=2)
        z = BallPoint.of([0.5, 0.0])
        w = BallPoint.of([0.5, 0.0])
        assert kernel_eval(kp, z, w) == pytest.approx((1 - 0.25) ** -3)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            KernelParams(alpha=-1.0)
        with pytest.raises(ValueError):
            KernelParams(n=0)


class TestKernelNorm:
    def test_center_is_one_for_every_p(self):
        for p in (1.5, 2.0, 3.7, 8.0):
            assert kernel_ap_norm(UNWEIGHTED, BallPoint.of(0), p) \
                == pytest.approx(1.0, rel=1e-14)

    def test_hilbert_case_closed_form(self):
        got = kernel_ap_norm(UNWEIGHTED, BallPoint.of(0.6), 2.0)
        assert got == pytest.approx(1.0 / (1 - 0.36), rel=1e-14)

    def test_p4_against_independent_series(self):
        # oracle: ||K_z||_4^4 = sum_j b_j^2 |z|^(2j) / (j+1), b_j the
        # binomial coefficients of (1-x)^-4, summed term by term
        x = 0.25
        b = _indep_binomials(4.0, 400)
        j = np.arange(401)
        oracle = float(np.sum(b * b * x ** j / (j + 1))) ** 0.25
        got = kernel_ap_norm(UNWEIGHTED, BallPoint.of(0.5), 4.0)
        assert got == pytest.approx(oracle, rel=1e-8)

    def test_quadrature_cross_check(self):
        z = 0.55
        p = 4.0 / 3.0
        val = integrate_ball(
            lambda w: np.abs(kernel_values(UNWEIGHTED, z, w)) ** 0
            * np.abs(1 - np.conj(z) * w) ** (-2 * p))
        assert kernel_ap_norm(UNWEIGHTED, BallPoint.of(z), p) \
            == pytest.approx(val.real ** (1 / p), rel=1e-9)

    def test_borderline_warns(self):
        with pytest.warns(RuntimeWarning, match="borderline"):
            kernel_ap_norm(UNWEIGHTED, BallPoint.of(0.5), 1.0)

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            kernel_ap_norm(UNWEIGHTED, BallPoint.of(0.5), 0.5)


class TestNormalizedKernel:
    def test_center_kernel_is_constant_one(self):
        for p in (1.5, 2.0, 4.0):
            for w in (0.2, -0.7j):
                assert normalized_kernel_eval(UNWEIGHTED, BallPoint.of(0), p,
                                              BallPoint.of(w)) \
                    == pytest.approx(1.0)

    def test_diagonal_hilbert_value(self):
        z = BallPoint.of(0.4 + 0.3j)
        got = normalized_kernel_eval(UNWEIGHTED, z, 2.0, z)
        expected = math.sqrt((1 - 0.25) ** -2)
        assert got == pytest.approx(expected, rel=1e-14)

    def test_unit_norm_by_quadrature(self):
        z = 0.62 - 0.21j
        val = integrate_ball(lambda w: np.abs(
            (1 - w * np.conj(z)) ** -2.0) ** 2)
        nrm2 = kernel_ap_norm(UNWEIGHTED, BallPoint.of(z), 2.0) ** 2
        assert val.real / nrm2 == pytest.approx(1.0, abs=1e-8)


class TestForelliRudin:
    def test_normalized_volume(self):
        assert forelli_rudin(0.0, 0.0, UNWEIGHTED, BallPoint.of(0.7)) \
            == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("z", [0.1, 0.45, 0.9])
    def test_reproducing_identity_b0c4(self, z):
        got = forelli_rudin(0.0, 4.0, UNWEIGHTED, BallPoint.of(z))
        assert got == pytest.approx((1 - z * z) ** -2, rel=1e-6)

    def test_divergent_weight_flags_infinite(self):
        got = forelli_rudin(-1.0, 2.0, UNWEIGHTED, BallPoint.of(0.2),
                            details=True)
        assert got["diverged"]
        assert math.isinf(got["value"])
        assert got["refinements"][1] > got["refinements"][0]

    def test_borderline_exponent_warns(self):
        with pytest.warns(RuntimeWarning, match="borderline"):
            forelli_rudin(0.0, 2.0, UNWEIGHTED, BallPoint.of(0.5))

    def test_dimension_guard(self):
        with pytest.raises(ValueError, match="n = 1"):
            forelli_rudin(0.0, 3.0, KernelParams(n=2),
                          BallPoint.of([0.1, 0.1]))


class TestApplyForelliRudin:
    def test_constant_consistency(self):
        z = BallPoint.of(0.3 + 0.2j)
        via_op = apply_forelli_rudin(1.0, 3.5,
                                     lambda w: np.ones_like(w, dtype=float), z)
        direct = forelli_rudin(1.0, 3.5, UNWEIGHTED, z)
        assert via_op.real == pytest.approx(direct, rel=1e-12)

    def test_zero_function(self):
        got = apply_forelli_rudin(0.0, 2.0,
                                  lambda w: np.zeros_like(w, dtype=float),
                                  BallPoint.of(0.1))
        assert got == 0

    def test_against_nested_polar_oracle(self):
        # oracle: independent two-pass integration, uniform radial panels
        # then angular trapezoid, written without the package machinery
        z = 0.4 + 0.25j
        b, c = 0.0, 2.0
        x, gw = np.polynomial.legendre.leggauss(40)
        r = 0.5 * (x + 1.0)
        wr = 0.5 * gw * 2.0 * r
        theta = 2 * np.pi * np.arange(1024) / 1024
        total = 0.0
        for ri, wi in zip(r, wr):
            w = ri * np.exp(1j * theta)
            vals = (1 - ri * ri) * 0 + (1 - np.abs(w) ** 2) ** b \
                * np.abs(1 - z * np.conj(w)) ** -c * (1 - np.abs(w) ** 2)
            total += wi * np.mean(vals)
        got = apply_forelli_rudin(b, c, lambda w: 1 - np.abs(w) ** 2,
                                  BallPoint.of(z))
        assert got.real == pytest.approx(total, rel=1e-7)

    def test_divergent_mass_flags_infinite(self):
        got = apply_forelli_rudin(-1.2, 2.0,
                                  lambda w: np.ones_like(w, dtype=float),
                                  BallPoint.of(0.1))
        assert np.isinf(got)


class TestDerivativeKernel:
    def test_vanishes_at_zero_argument(self):
        for z in (0.1, 0.5j):
            assert derivative_kernel(BallPoint.of(z), BallPoint.of(0)) == 0

    def test_substitution(self):
        assert derivative_kernel(BallPoint.of(0), BallPoint.of(0.5)) \
            == pytest.approx(1.0)

    def test_finite_difference_oracle(self):
        w = BallPoint.of(0.3 - 0.45j)
        h = 1e-5
        for z in (0.2 + 0.1j, -0.5j):
            plus = kernel_eval(UNWEIGHTED, BallPoint.of(z + h), w)
            minus = kernel_eval(UNWEIGHTED, BallPoint.of(z - h), w)
            fd = (plus - minus) / (2 * h)
            got = derivative_kernel(BallPoint.of(z), w)
            assert got == pytest.approx(fd, rel=1e-6)


class TestFractional:
    def test_constant_unchanged(self):
        f = HoloPoly.make(1, {(0,): 3.5 - 1j})
        for order in (0.5, 2.0):
            for direction in ("raise", "lower"):
                out = apply_fractional(direction, order, f)
                assert out.coeff_map() == f.coeff_map()

    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False,
                                       allow_infinity=False),
                    min_size=1, max_size=12),
           st.floats(0.1, 5.0))
    def test_lower_raise_identity(self, coeffs, order):
        f = HoloPoly.from_dense(coeffs)
        back = apply_fractional("lower", order, apply_fractional(
            "raise", order, f))
        for m, v in f.coeffs:
            assert back.coeff_map()[m] == pytest.approx(v, rel=1e-12)

    @pytest.mark.parametrize("order", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("w", [0.3, 0.7])
    def test_raise_maps_kernel_to_higher_power(self, order, w):
        # the defining identity: raising the degree-truncated kernel gives
        # the truncated binomial series of the higher-power kernel
        degree = 128
        base = kernel_poly(BallPoint.of(w), 2.0, degree)
        raised = apply_fractional("raise", order, base)
        target = _indep_binomials(2.0 + order, degree) \
            * np.conj(w) ** np.arange(degree + 1)
        got = raised.dense(degree)
        assert np.max(np.abs(got - target)) < 1e-10

    def test_direction_validation(self):
        f = HoloPoly.from_dense([1.0])
        with pytest.raises(ValueError):
            apply_fractional("up", 1.0, f)
        with pytest.raises(ValueError):
            apply_fractional("raise", -1.0, f)


class TestHoloPoly:
    def test_json_round_trip(self):
        f = HoloPoly.make(2, {(1, 0): 2j, (0, 3): -1.5})
        back = HoloPoly.from_json(f.to_json())
        assert back == f

    def test_evaluation_horner(self):
        f = HoloPoly.from_dense([1, 0, -2])
        pts = np.array([0.5, 0.1j])
        assert np.allclose(f(pts), 1 - 2 * pts ** 2)

    def test_graded_ordering(self):
        idx = graded_indices(2, 2)
        assert idx[0] == (0, 0)
        assert set(idx[1:3]) == {(1, 0), (0, 1)}
        assert len(idx) == 6


class TestPointwiseBoundAndReproducing:
    @pytest.mark.parametrize("p", [4.0 / 3.0, 2.0, 4.0])
    def test_pointwise_bound(self, p, rng):
        # |f(z)| <= ||f||_{A^p} K(z,z)^(1/p) for polynomials, with the norm
        # computed by quadrature
        coeffs = rng.normal(size=10) + 1j * rng.normal(size=10)
        f = HoloPoly.from_dense(coeffs)
        norm = integrate_ball(lambda w: np.abs(f(w)) ** p).real ** (1 / p)
        zs = 0.95 * np.sqrt(rng.uniform(0, 1, 60)) \
            * np.exp(2j * np.pi * rng.uniform(0, 1, 60))
        kdiag = (1 - np.abs(zs) ** 2) ** (-2.0 / p)
        assert np.all(np.abs(f(zs)) <= (1 + 1e-6) * norm * kdiag)

    def test_reproducing_property(self, rng):
        coeffs = rng.normal(size=14) + 1j * rng.normal(size=14)
        f = HoloPoly.from_dense(coeffs)
        for z in 0.9 * np.exp(2j * np.pi * rng.uniform(0, 1, 8)):
            got = integrate_ball(lambda w: f(w) * kernel_values(
                UNWEIGHTED, z, w))
            assert got == pytest.approx(complex(f(np.asarray([z]))[0]),
                                        rel=1e-7)

    def test_lattice_synthesis_bounded(self, lattice_one_r25, rng):
        # random l^p-normalized coefficient sums of normalized kernels stay
        # uniformly bounded in A^p
        from bergmanlab.summing import kernel_family, poly_norms_ap
        from bergmanlab.operators import build_basis
        scheme = QuadratureScheme(panels=12, nodes_per_panel=10, angular=512)
        basis = build_basis(1, 0.0, 96)
        worst = 0.0
        for p in (4.0 / 3.0, 2.0, 4.0):
            fam = kernel_family(lattice_one_r25, p, 96)
            mat = fam.member_matrix(basis)
            draws = rng.normal(size=(len(fam), 50)) \
                + 1j * rng.normal(size=(len(fam), 50))
            draws /= np.sum(np.abs(draws) ** p, axis=0) ** (1 / p)
            norms = poly_norms_ap(mat @ draws, p, basis, scheme)
            worst = max(worst, float(np.max(norms)))
        assert worst <= 10.0


def test_kernel_poly_truncation_matches_kernel():
    w = BallPoint.of(0.45 - 0.2j)
    f = kernel_poly(w, 2.0, 64)
    zs = np.array([0.3 + 0.1j, -0.5, 0.2j])
    exact = (1 - zs * np.conj(w.z)) ** -2.0
    assert np.allclose(f(zs), exact, rtol=1e-10)
