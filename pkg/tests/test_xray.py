"""Tests for the discrete X-ray transform, its adjoint and line masks."""

import math

import numpy as np
import pytest


def _bump_projection(s, radius):
    """Line integral of (1 - |x|^2/R^2)^4 at offset s."""
    sigma = np.clip(1.0 - (s / radius) ** 2, 0.0, None)
    return radius * 256.0 / 315.0 * sigma ** 4.5


class TestForward:
    def test_matches_analytic_bump(self, bump64):
        from riesz_tomo import SinogramGeometry, xray_forward
        from riesz_tomo.xray import offsets
        sino = xray_forward(bump64)
        expected = _bump_projection(offsets(SinogramGeometry.for_grid(64)), 0.5)
        assert expected.max() == pytest.approx(0.5 * 256 / 315)
        assert np.allclose(sino.values, expected[None, :], atol=5e-3)

    def test_oriented_line_symmetry(self, annulus32):
        from riesz_tomo import preset_phantom, rasterize, xray_forward
        f = rasterize(preset_phantom("offset_bump", cx=0.3, cy=-0.2), 32)
        for field in (f, annulus32):
            values = xray_forward(field).values
            half = values.shape[0] // 2
            assert np.array_equal(values[half:], values[:half, ::-1])

    def test_zero_field(self):
        from riesz_tomo import GridField, xray_forward
        assert not xray_forward(GridField.zeros(16)).values.any()

    def test_rejects_3d(self):
        from riesz_tomo import DimensionError, GridField, xray_forward
        with pytest.raises(DimensionError):
            xray_forward(GridField.zeros(8, dim=3))

    def test_rejects_mismatched_geometry(self, bump64):
        from riesz_tomo import DimensionError, SinogramGeometry, xray_forward
        with pytest.raises(DimensionError):
            xray_forward(bump64, SinogramGeometry.for_grid(32))


class TestAdjoint:
    @pytest.mark.parametrize("n", [16, 32, 64])
    def test_adjoint_identity(self, n):
        from riesz_tomo import GridField, Sinogram, SinogramGeometry, xray_adjoint, xray_forward
        geometry = SinogramGeometry.for_grid(n)
        rng = np.random.default_rng(n)
        for _ in range(20):
            f = GridField(dim=2, n=n, values=rng.standard_normal((n, n)))
            g = Sinogram(geometry=geometry, values=rng.standard_normal((geometry.n_theta, geometry.n_s)))
            lhs = xray_forward(f, geometry).inner(g)
            rhs = f.inner(xray_adjoint(g))
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_rejects_foreign_sinogram(self, geometry16):
        from riesz_tomo import DimensionError, Sinogram, SinogramGeometry, XRayOperator
        op = XRayOperator(SinogramGeometry.for_grid(16))
        with pytest.raises(DimensionError):
            op.adjoint(Sinogram.zeros(geometry16))

    def test_normal_is_positive_semidefinite(self, annulus32):
        from riesz_tomo import normal_operator
        assert annulus32.inner(normal_operator(annulus32)) > 0.0

    def test_backprojection_of_ones(self):
        from riesz_tomo import Sinogram, SinogramGeometry, xray_adjoint
        geometry = SinogramGeometry.for_grid(64)
        back = xray_adjoint(Sinogram(geometry=geometry, values=np.ones((geometry.n_theta, geometry.n_s))))
        x1, x2 = back.centers()
        interior = back.values[np.hypot(x1, x2) < 0.5]
        assert interior.mean() == pytest.approx(2 * math.pi, rel=0.01)
        assert np.abs(interior - 2 * math.pi).max() <= 0.05 * 2 * math.pi

    def test_normal_of_unit_disc_at_origin(self):
        from riesz_tomo import normal_operator, preset_phantom, rasterize
        nf = normal_operator(rasterize(preset_phantom("disc", radius=1.0), 64))
        assert nf.values[31:33, 31:33].mean() == pytest.approx(4 * math.pi, rel=0.03)


class TestMatrixFreePath:
    def test_forward_agrees_with_matrix(self, annulus32):
        from riesz_tomo import SinogramGeometry, XRayOperator
        geometry = SinogramGeometry.for_grid(32)
        cached = XRayOperator(geometry).forward(annulus32).values
        streamed = XRayOperator(geometry, cache_matrix=False).forward(annulus32).values
        assert np.allclose(cached, streamed, rtol=1e-12, atol=1e-14)

    def test_adjoint_agrees_with_matrix(self, geometry16):
        from riesz_tomo import Sinogram, XRayOperator
        rng = np.random.default_rng(7)
        g = Sinogram(geometry=geometry16, values=rng.standard_normal((64, 65)))
        cached = XRayOperator(geometry16).adjoint(g).values
        streamed = XRayOperator(geometry16, cache_matrix=False).adjoint(g).values
        assert np.allclose(cached, streamed, rtol=1e-12, atol=1e-12)

    def test_thread_count_does_not_change_results(self, annulus32):
        from riesz_tomo import SinogramGeometry, XRayOperator
        geometry = SinogramGeometry.for_grid(32)
        one = XRayOperator(geometry, threads=1, cache_matrix=False)
        four = XRayOperator(geometry, threads=4, cache_matrix=False)
        sino = one.forward(annulus32)
        assert np.array_equal(sino.values, four.forward(annulus32).values)
        assert np.array_equal(one.adjoint(sino).values, four.adjoint(sino).values)


class TestSinogram:
    def test_shape_checked(self, geometry16):
        from riesz_tomo import DimensionError, Sinogram
        with pytest.raises(DimensionError):
            Sinogram(geometry=geometry16, values=np.zeros((64, 64)))

    def test_finite_values_required(self, geometry16):
        from riesz_tomo import ParameterError, Sinogram
        values = np.zeros((64, 65))
        values[3, 4] = np.inf
        with pytest.raises(ParameterError):
            Sinogram(geometry=geometry16, values=values)

    def test_inner_uses_line_measure(self, geometry16):
        from riesz_tomo import Sinogram
        ones = Sinogram(geometry=geometry16, values=np.ones((64, 65)))
        expected = 64 * 65 * geometry16.ds * geometry16.dtheta
        assert ones.inner(ones) == pytest.approx(expected)

    def test_masked_zeroes_unselected_bins(self, geometry16):
        from riesz_tomo import RegionSpec, Sinogram, lines_meeting_region
        mask = lines_meeting_region(geometry16, RegionSpec.ball(0.2))
        masked = Sinogram(geometry=geometry16, values=np.ones((64, 65))).masked(mask)
        assert np.array_equal(masked.values != 0.0, mask.values)


class TestLineMasks:
    def test_ball_at_origin(self, geometry16):
        from riesz_tomo import RegionSpec, lines_meeting_region
        from riesz_tomo.xray import offsets
        mask = lines_meeting_region(geometry16, RegionSpec.ball(0.2))
        expected = np.abs(offsets(geometry16)) <= 0.2 + 0.5 * geometry16.h
        assert np.array_equal(mask.values, np.broadcast_to(expected, mask.values.shape))

    def test_annulus_uses_outer_radius(self, geometry16):
        from riesz_tomo import RegionSpec, lines_meeting_region
        a = lines_meeting_region(geometry16, RegionSpec.annulus(0.5, 0.9))
        b = lines_meeting_region(geometry16, RegionSpec.ball(0.9))
        assert np.array_equal(a.values, b.values)

    def test_full_arc_sees_every_crossing_line(self, geometry16):
        from riesz_tomo import RegionSpec, lines_meeting_region
        from riesz_tomo.xray import offsets
        mask = lines_meeting_region(geometry16, RegionSpec.disc_segment(math.pi))
        expected = np.abs(offsets(geometry16)) <= 1.0
        assert np.array_equal(mask.values, np.broadcast_to(expected, mask.values.shape))

    def test_short_arc_at_angle_zero(self, geometry16):
        from riesz_tomo import RegionSpec, lines_meeting_region
        from riesz_tomo.xray import offsets
        mask = lines_meeting_region(geometry16, RegionSpec.disc_segment(0.4))
        s = offsets(geometry16)
        # lines perpendicular to the arc midpoint meet it for cos(0.4) <= s <= 1
        assert np.array_equal(mask.values[0], (s >= math.cos(0.4)) & (s <= 1.0))
        assert np.array_equal(mask.values[32], mask.values[0][::-1])

    def test_union(self, geometry16):
        from riesz_tomo import LineMask, RegionSpec, lines_meeting_region
        small = lines_meeting_region(geometry16, RegionSpec.ball(0.2))
        assert (small | LineMask.full(geometry16)).count == 64 * 65
        assert (small | small).count == small.count


class TestPlanes:
    def test_plane_through_axis(self):
        from riesz_tomo import plane_slice, preset_phantom, rasterize
        f = rasterize(preset_phantom("bump", radius=0.5), 16, 3)
        plane = plane_slice(f, 0.0)
        # x2 = 0 falls midway between the two central cell layers
        expected = 0.5 * (f.values[:, 7, :] + f.values[:, 8, :])
        assert np.allclose(plane.values, expected, atol=1e-12)

    def test_one_sinogram_per_plane(self):
        from riesz_tomo import preset_phantom, rasterize, xray_forward_planes
        f = rasterize(preset_phantom("bump", radius=0.5), 32, 3)
        planes = xray_forward_planes(f, 4)
        assert [psi for psi, _ in planes] == pytest.approx([0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])
        peaks = [sino.values.max() for _, sino in planes]
        assert max(peaks) == pytest.approx(min(peaks), rel=0.05)

    def test_plane_input_checks(self, bump64):
        from riesz_tomo import DimensionError, GridField, ParameterError, plane_slice, xray_forward_planes
        with pytest.raises(DimensionError):
            plane_slice(bump64, 0.0)
        with pytest.raises(ParameterError):
            xray_forward_planes(GridField.zeros(8, dim=3), 0)
