"""Tests for Riesz potentials, the fractional Laplacian and the inversion formula."""

import logging
import math

import numpy as np
import pytest


class TestRieszOrder:
    def test_normal_order(self):
        from riesz_tomo import RieszOrder
        assert RieszOrder.normal(2).alpha == 1.0
        assert RieszOrder.normal(3).alpha == 2.0
        assert RieszOrder.normal(3).s == 0.5

    def test_divergent_kernel(self):
        from riesz_tomo import DivergentKernelError, RieszOrder
        with pytest.raises(DivergentKernelError):
            RieszOrder(alpha=2.0, d=2)

    @pytest.mark.parametrize("alpha,d", [(0.0, 2), (-1.0, 3), (1.0, 3), (float("nan"), 2)])
    def test_rejected_orders(self, alpha, d):
        from riesz_tomo import ParameterError, RieszOrder
        with pytest.raises(ParameterError):
            RieszOrder(alpha=alpha, d=d)

    def test_rejected_dimension(self):
        from riesz_tomo import DimensionError, RieszOrder
        with pytest.raises(DimensionError):
            RieszOrder(alpha=0.5, d=4)

    def test_exact_alpha(self):
        import sympy
        from riesz_tomo import RieszOrder
        assert RieszOrder(alpha=2.5, d=3).exact_alpha == sympy.Rational(5, 2)
        assert RieszOrder(alpha=1 / 3, d=2).exact_alpha == sympy.Rational(1, 3)

    def test_multiplier_constant(self):
        from riesz_tomo import RieszOrder
        assert RieszOrder.normal(2).multiplier_constant == pytest.approx(2 * math.pi)
        assert RieszOrder.normal(3).multiplier_constant == pytest.approx(2 * math.pi ** 2)

    def test_inversion_constant(self):
        from riesz_tomo import DimensionError, inversion_constant
        assert inversion_constant(2) == pytest.approx(1 / (4 * math.pi))
        assert inversion_constant(3) == pytest.approx(1 / (4 * math.pi ** 2))
        with pytest.raises(DimensionError):
            inversion_constant(4)


class TestRieszPotential:
    def test_is_the_discrete_convolution_off_support(self, annulus32):
        from riesz_tomo import RieszOrder, riesz_potential
        order = RieszOrder(alpha=0.5, d=2)
        potential = riesz_potential(annulus32, order)
        x1, x2 = annulus32.centers()
        # corner cell (0, 0) is outside the annulus, so no center-cell term enters
        r = np.hypot(x1 - x1[0, 0], x2 - x2[0, 0])
        direct = np.sum(annulus32.values[r > 0] * r[r > 0] ** -0.5) * annulus32.h ** 2
        assert potential.values[0, 0] == pytest.approx(direct, rel=1e-10)

    def test_linear(self, annulus32):
        from riesz_tomo import RieszOrder, preset_phantom, rasterize, riesz_potential
        order = RieszOrder.normal(2)
        other = rasterize(preset_phantom("offset_bump", cx=-0.4, cy=0.1), 32)
        combined = riesz_potential(annulus32 * 2.0 + other, order).values
        separate = 2.0 * riesz_potential(annulus32, order).values + riesz_potential(other, order).values
        assert np.allclose(combined, separate, rtol=1e-10, atol=1e-12)

    def test_dimension_mismatch(self, bump64):
        from riesz_tomo import DimensionError, RieszOrder, riesz_potential
        with pytest.raises(DimensionError):
            riesz_potential(bump64, RieszOrder.normal(3))

    def test_center_cell_weight_scaling(self):
        from riesz_tomo import RieszOrder
        from riesz_tomo.riesz import center_cell_weight
        order = RieszOrder(alpha=1.5, d=3)
        ratio = center_cell_weight(order, 0.1) / center_cell_weight(order, 0.05)
        assert ratio == pytest.approx(2 ** 1.5)

    def test_center_cell_weight_constant_kernel_limit(self):
        from riesz_tomo import RieszOrder
        from riesz_tomo.riesz import center_cell_weight
        # small alpha: the kernel is nearly 1 on the cell
        assert center_cell_weight(RieszOrder(alpha=0.01, d=2), 1.0) == pytest.approx(1.0, rel=0.02)

    def test_normal_operator_matches_kernel(self):
        from riesz_tomo import RieszOrder, normal_operator, preset_phantom, rasterize, relative_l2_error, riesz_potential
        errors = []
        for n in (64, 256):
            f = rasterize(preset_phantom("bump", radius=0.5), n)
            expected = riesz_potential(f, RieszOrder.normal(2)) * 2.0
            errors.append(relative_l2_error(normal_operator(f), expected))
        assert errors[1] <= 0.02
        assert errors[1] < errors[0]


class TestFractionalLaplacian:
    def test_order_range(self, bump64):
        from riesz_tomo import ParameterError, fractional_laplacian
        for s in (0.0, 1.5, -0.5):
            with pytest.raises(ParameterError):
                fractional_laplacian(bump64, s)

    def test_warns_without_decay(self, caplog):
        from riesz_tomo import fractional_laplacian, preset_phantom, rasterize
        f = rasterize(preset_phantom("disc", radius=1.0), 32)
        with caplog.at_level(logging.WARNING, logger="riesz_tomo.riesz"):
            fractional_laplacian(f, 0.5)
        assert "has not decayed" in caplog.text

    def test_silent_for_compact_support(self, bump64, caplog):
        from riesz_tomo import fractional_laplacian
        with caplog.at_level(logging.WARNING, logger="riesz_tomo.riesz"):
            fractional_laplacian(bump64, 0.5)
        assert "has not decayed" not in caplog.text

    def test_semigroup(self, bump64):
        from riesz_tomo import fractional_laplacian, relative_l2_error
        half_twice = fractional_laplacian(fractional_laplacian(bump64, 0.5), 0.5)
        full = fractional_laplacian(bump64, 1.0)
        assert relative_l2_error(half_twice, full) < 0.05

    def test_laplacian_of_bump(self, bump64):
        from riesz_tomo import fractional_laplacian
        # -Laplacian of (1 - 4 r^2)^4 at the origin is 64
        values = fractional_laplacian(bump64, 1.0).values
        assert values[31:33, 31:33].mean() == pytest.approx(64.0, rel=0.05)


class TestInversion:
    def test_inverts_the_kernel_form(self, bump64):
        from riesz_tomo import RieszOrder, invert_normal, relative_l2_error, riesz_potential
        nf = riesz_potential(bump64, RieszOrder.normal(2)) * 2.0
        assert relative_l2_error(invert_normal(nf), bump64) <= 0.1

    def test_inverts_the_discrete_normal_operator(self):
        from riesz_tomo import invert_normal, normal_operator, preset_phantom, rasterize, relative_l2_error
        errors = {}
        for n in (64, 256):
            f = rasterize(preset_phantom("bump", radius=0.5), n)
            errors[n] = relative_l2_error(invert_normal(normal_operator(f)), f)
        assert errors[256] <= 0.05
        assert errors[64] <= 0.1

    def test_unwindowed_inversion_amplifies_backprojection_ripple(self):
        from riesz_tomo import invert_normal, normal_operator, preset_phantom, rasterize, relative_l2_error
        f = rasterize(preset_phantom("bump", radius=0.5), 128)
        nf = normal_operator(f)
        windowed = relative_l2_error(invert_normal(nf), f)
        raw = relative_l2_error(invert_normal(nf, window=False), f)
        assert windowed < raw

    def test_window_keeps_smooth_fields(self, bump64):
        from riesz_tomo import relative_l2_error
        from riesz_tomo.riesz import SpectralField, _block_slices, _pad
        padded = _pad(bump64, 4, None)
        spectral = SpectralField.from_array(padded, bump64.h).apply_window(0.25, 0.5)
        kept = bump64.with_values(spectral.to_array()[_block_slices(64, 2, 4)])
        assert spectral.exponent == 0.0
        assert relative_l2_error(kept, bump64) <= 1e-2

    @pytest.mark.parametrize("passband,stopband", [(0.0, 0.5), (0.5, 0.25), (0.25, 1.5)])
    def test_window_band_validation(self, bump64, passband, stopband):
        from riesz_tomo import ParameterError
        from riesz_tomo.riesz import SpectralField
        spectral = SpectralField.from_array(bump64.values, bump64.h)
        with pytest.raises(ParameterError):
            spectral.apply_window(passband, stopband)

    def test_zero_and_scaling(self, bump64):
        from riesz_tomo import GridField, invert_normal, normal_operator
        assert np.all(invert_normal(GridField.zeros(16)).values == 0.0)
        nf = normal_operator(bump64)
        scaled = invert_normal(nf * 3.0).values
        assert np.allclose(scaled, 3.0 * invert_normal(nf).values, rtol=1e-10, atol=1e-12)

    def test_far_field_continuation_helps(self, bump64):
        from riesz_tomo import RieszOrder, invert_normal, relative_l2_error, riesz_potential
        nf = riesz_potential(bump64, RieszOrder.normal(2)) * 2.0
        with_tail = relative_l2_error(invert_normal(nf, far_field=True, window=False), bump64)
        truncated = relative_l2_error(invert_normal(nf, far_field=False, window=False), bump64)
        assert with_tail < truncated

    def test_far_field_fit_recovers_mass(self, bump64):
        from riesz_tomo import RieszOrder, riesz_potential
        from riesz_tomo.riesz import fit_far_field
        nf = riesz_potential(bump64, RieszOrder.normal(2))
        # I_1 f ~ (int f) / |x| far from the support
        assert fit_far_field(nf, 1.0) == pytest.approx(bump64.integral(), rel=0.05)

    def test_constant_fit(self, bump64):
        from riesz_tomo import RieszOrder, riesz_constant_fit
        fit = riesz_constant_fit(bump64, RieszOrder.normal(2))
        assert fit.analytic == pytest.approx(2 * math.pi)
        assert fit.fitted == pytest.approx(fit.analytic, rel=0.05)

    def test_constant_fit_needs_nonzero_field(self):
        from riesz_tomo import GridField, PreconditionError, RieszOrder, riesz_constant_fit
        with pytest.raises(PreconditionError):
            riesz_constant_fit(GridField.zeros(16), RieszOrder.normal(2))


class TestPotentialDerivatives:
    def test_radial_field_has_vanishing_odd_derivatives(self, annulus32):
        from riesz_tomo import RieszOrder, potential_derivatives
        from riesz_tomo.riesz import kernel_derivative_values
        order = RieszOrder.normal(2)
        derivatives = potential_derivatives(annulus32, order, (0.0, 0.0), 8)
        assert len(derivatives) == 45
        assert derivatives[0][1] > 0
        support = annulus32.values != 0.0
        weights = np.abs(annulus32.values[support]) * annulus32.h ** 2
        points = tuple(-c[support] for c in annulus32.centers())
        for beta, value in derivatives:
            if beta[0] % 2 or beta[1] % 2:
                scale = np.dot(weights, np.abs(kernel_derivative_values(beta, order, points)))
                assert abs(value) <= 1e-10 * scale

    def test_zeroth_order_is_the_potential(self, annulus32):
        from riesz_tomo import RieszOrder, potential_derivatives
        order = RieszOrder(alpha=0.5, d=2)
        x1, x2 = annulus32.centers()
        point = (float(x1[0, 0]), float(x2[0, 0]))
        (beta, value), *_ = potential_derivatives(annulus32, order, point, 0)
        r = np.hypot(x1 - point[0], x2 - point[1])
        direct = np.sum(annulus32.values[r > 0] * r[r > 0] ** -0.5) * annulus32.h ** 2
        assert beta == (0, 0)
        assert value == pytest.approx(direct, rel=1e-10)

    def test_requires_clearance(self, bump64):
        from riesz_tomo import PreconditionError, RieszOrder, potential_derivatives
        with pytest.raises(PreconditionError):
            potential_derivatives(bump64, RieszOrder.normal(2), (0.0, 0.0), 2)

    def test_order_range(self, annulus32):
        from riesz_tomo import ParameterError, RieszOrder, potential_derivatives
        with pytest.raises(ParameterError):
            potential_derivatives(annulus32, RieszOrder.normal(2), (0.0, 0.0), 13)

    def test_kernel_derivative_values_match_finite_differences(self):
        from riesz_tomo import RieszOrder
        from riesz_tomo.riesz import kernel_derivative_values
        order = RieszOrder(alpha=0.5, d=2)
        x = (np.array([0.7]), np.array([-0.3]))
        eps = 1e-6
        analytic = kernel_derivative_values((1, 0), order, x)[0]
        plus = kernel_derivative_values((0, 0), order, (x[0] + eps, x[1]))[0]
        minus = kernel_derivative_values((0, 0), order, (x[0] - eps, x[1]))[0]
        assert analytic == pytest.approx((plus - minus) / (2 * eps), rel=1e-6)


class TestKelvinPullback:
    def test_support_moves_outside(self, annulus32):
        from riesz_tomo import RieszOrder, kelvin_pullback
        pulled = kelvin_pullback(annulus32, RieszOrder.normal(2), extent=2.5)
        x1, x2 = pulled.centers()
        r = 2.5 * np.hypot(x1, x2)
        # the annulus 0.5 <= |y| <= 0.9 maps into 1/0.9 <= |x| <= 2, widened by one cell of interpolation
        assert not pulled.values[(r < 1.0) | (r > 2.6)].any()
        assert pulled.values.max() > 0

    def test_rejects_bad_extent(self, annulus32):
        from riesz_tomo import ParameterError, RieszOrder, kelvin_pullback
        with pytest.raises(ParameterError):
            kelvin_pullback(annulus32, RieszOrder.normal(2), extent=0.0)
