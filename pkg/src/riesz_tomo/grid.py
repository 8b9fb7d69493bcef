"""Uniform cell-centered grids on [-1, 1]^d, phantoms and geometric masks.

Every other module consumes :class:`GridField`. Cell ``i`` along an axis has
center ``-1 + (i + 1/2) h`` with ``h = 2 / n``; array axis 0 is x1, axis 1
is x2 (and axis 2 is x3 in 3D).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ParameterError, UnsupportedGeometryError
from .schemas import PhantomComponent, PhantomSpec, ProfileSpec, RegionSpec

logger = logging.getLogger(__name__)

# Exponent of the polynomial bump (1 - t^2)^p used by radial profiles.
BUMP_POWER = 4


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar field sampled at the cell centers of an n^dim grid.

    ``values`` is stored read-only with shape ``(n,) * dim``.
    """

    dim: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise DimensionError(f"dim must be 2 or 3, got {self.dim}")
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.size != self.n ** self.dim:
            raise DimensionError(
                f"expected {self.n ** self.dim} values for n={self.n}, dim={self.dim}, got {arr.size}"
            )
        arr = arr.reshape((self.n,) * self.dim)
        if not np.all(np.isfinite(arr)):
            raise ParameterError("GridField values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def h(self) -> float:
        return 2.0 / self.n

    @classmethod
    def zeros(cls, n: int, dim: int = 2) -> "GridField":
        return cls(dim=dim, n=n, values=np.zeros((n,) * dim))

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(dim=self.dim, n=self.n, values=values)

    def centers(self) -> tuple[np.ndarray, ...]:
        return cell_center_mesh(self.n, self.dim)

    def integral(self) -> float:
        return float(self.values.sum() * self.h ** self.dim)

    def inner(self, other: "GridField") -> float:
        """L2 pairing with cell-volume weight h^d."""
        _check_congruent(self, other)
        return float(np.vdot(self.values, other.values) * self.h ** self.dim)

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self), 0.0))

    def __add__(self, other: "GridField") -> "GridField":
        _check_congruent(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        _check_congruent(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, factor: float) -> "GridField":
        return self.with_values(self.values * factor)

    __rmul__ = __mul__

    def __neg__(self) -> "GridField":
        return self.with_values(-self.values)


def _check_congruent(a: GridField, b: GridField) -> None:
    if a.dim != b.dim or a.n != b.n:
        raise DimensionError(f"grids differ: ({a.dim}, {a.n}) vs ({b.dim}, {b.n})")


def cell_centers(n: int) -> np.ndarray:
    h = 2.0 / n
    return -1.0 + (np.arange(n) + 0.5) * h


def cell_center_mesh(n: int, dim: int) -> tuple[np.ndarray, ...]:
    axis = cell_centers(n)
    return tuple(np.meshgrid(*([axis] * dim), indexing="ij"))


def relative_l2_error(estimate: GridField, truth: GridField, mask: np.ndarray | None = None) -> float:
    """||estimate - truth|| / ||truth||, optionally restricted to ``mask`` cells."""
    _check_congruent(estimate, truth)
    diff = estimate.values - truth.values
    ref = truth.values
    if mask is not None:
        diff = diff[mask]
        ref = ref[mask]
    denom = float(np.linalg.norm(ref))
    if denom == 0.0:
        return float(np.linalg.norm(diff))
    return float(np.linalg.norm(diff)) / denom


# ============================================================================
# Bilinear sampling
# ============================================================================

def bilinear_stencil(n: int, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat cell indices and weights of bilinear interpolation at points (x, y).

    Returns arrays of shape ``(4,) + x.shape``. Neighbours outside the grid
    get weight 0 (zero extension beyond the outermost cell centers).
    """
    h = 2.0 / n
    u = (np.asarray(x) + 1.0) / h - 0.5
    v = (np.asarray(y) + 1.0) / h - 0.5
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = u - i0
    fv = v - j0
    corners = (
        (0, 0, (1.0 - fu) * (1.0 - fv)),
        (1, 0, fu * (1.0 - fv)),
        (0, 1, (1.0 - fu) * fv),
        (1, 1, fu * fv),
    )
    idx = np.empty((4,) + u.shape, dtype=np.int64)
    w = np.empty((4,) + u.shape, dtype=np.float64)
    for c, (di, dj, weight) in enumerate(corners):
        i = i0 + di
        j = j0 + dj
        inside = (i >= 0) & (i < n) & (j >= 0) & (j < n)
        idx[c] = np.where(inside, i * n + j, 0)
        w[c] = np.where(inside, weight, 0.0)
    return idx, w


def sample_bilinear(f: GridField, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a 2D field at arbitrary points."""
    if f.dim != 2:
        raise DimensionError("bilinear sampling needs a 2D field")
    idx, w = bilinear_stencil(f.n, x, y)
    return (f.values.ravel()[idx] * w).sum(axis=0)


# ============================================================================
# Regions
# ============================================================================

def _center(region: RegionSpec, dim: int) -> np.ndarray:
    c = np.zeros(dim)
    given = np.asarray(region.center, dtype=np.float64)[:dim]
    c[: given.size] = given
    return c


def _region_indicator(region: RegionSpec, points: tuple[np.ndarray, ...]) -> np.ndarray:
    dim = len(points)
    if region.kind == "ball":
        c = _center(region, dim)
        r2 = sum((p - ci) ** 2 for p, ci in zip(points, c))
        return r2 <= region.radius ** 2
    r = np.sqrt(sum(p ** 2 for p in points))
    if region.kind == "annulus":
        return (r >= region.r_inner) & (r <= region.r_outer)
    if region.kind == "disc_segment":
        rho = region.circle_radius
        a = region.arc_center_angle
        proj = points[0] * math.cos(a) + points[1] * math.sin(a)
        return (r <= rho) & (proj >= rho * math.cos(region.arc_half_width))
    raise UnsupportedGeometryError(f"unknown region kind {region.kind!r}")


def _bump(t: np.ndarray) -> np.ndarray:
    return np.where(np.abs(t) < 1.0, (1.0 - t ** 2) ** BUMP_POWER, 0.0)


def _normalized_radius(region: RegionSpec, points: tuple[np.ndarray, ...]) -> np.ndarray:
    """Coordinate t in [-1, 1] (or [0, 1]) across the region's radial extent."""
    dim = len(points)
    if region.kind == "ball":
        c = _center(region, dim)
        return np.sqrt(sum((p - ci) ** 2 for p, ci in zip(points, c))) / region.radius
    r = np.sqrt(sum(p ** 2 for p in points))
    if region.kind == "annulus":
        mid = 0.5 * (region.r_inner + region.r_outer)
        half = 0.5 * (region.r_outer - region.r_inner)
        return (r - mid) / half
    return r / region.circle_radius


def _angle(region: RegionSpec, points: tuple[np.ndarray, ...]) -> np.ndarray:
    c = _center(region, len(points)) if region.kind == "ball" else np.zeros(len(points))
    return np.arctan2(points[1] - c[1], points[0] - c[0])


def _profile_values(profile: ProfileSpec, region: RegionSpec, points: tuple[np.ndarray, ...]) -> np.ndarray:
    if profile.kind == "constant":
        return np.full(points[0].shape, profile.value)
    t = _normalized_radius(region, points)
    if profile.kind == "radial_bump":
        return profile.value * _bump(t)
    radial = _bump(t) if profile.radial_profile == "bump" else np.ones_like(t)
    return profile.value * np.cos(profile.k * _angle(region, points)) * radial


def _check_grid(n: int, dim: int) -> None:
    if dim not in (2, 3):
        raise ParameterError(f"dim must be 2 or 3, got {dim}")
    if n < 8 or n % 2:
        raise ParameterError(f"n must be even and >= 8, got {n}")


def rasterize(spec: PhantomSpec, n: int, dim: int = 2) -> GridField:
    """Evaluate a phantom at the cell centers; zero outside all regions."""
    _check_grid(n, dim)
    points = cell_center_mesh(n, dim)
    values = np.zeros((n,) * dim)
    for comp in spec.components:
        inside = _region_indicator(comp.region, points)
        values += np.where(inside, _profile_values(comp.profile, comp.region, points), 0.0)
    return GridField(dim=dim, n=n, values=values)


def region_mask(spec: RegionSpec, n: int, dim: int = 2) -> GridField:
    """0/1 indicator of a region at the cell centers."""
    _check_grid(n, dim)
    inside = _region_indicator(spec, cell_center_mesh(n, dim))
    return GridField(dim=dim, n=n, values=inside.astype(np.float64))


def region_cells(spec: RegionSpec, n: int, dim: int = 2) -> np.ndarray:
    """Boolean cell mask of a region."""
    return region_mask(spec, n, dim).values > 0.5


def convex_hull_of_arc(arc: RegionSpec) -> RegionSpec:
    """Circular segment bounded by an arc and the chord joining its endpoints."""
    if arc.kind != "disc_segment":
        raise UnsupportedGeometryError(f"convex hull needs a disc_segment arc, got {arc.kind}")
    if arc.arc_half_width >= math.pi / 2:
        raise UnsupportedGeometryError(
            f"arc half-width {arc.arc_half_width:.4f} >= pi/2 is not a proper arc"
        )
    return arc.model_copy()


def segment_area(segment: RegionSpec) -> float:
    """Analytic area rho^2 (beta - sin beta cos beta) of a 2D circular segment."""
    if segment.kind != "disc_segment":
        raise UnsupportedGeometryError("segment_area needs a disc_segment")
    b = segment.arc_half_width
    return segment.circle_radius ** 2 * (b - math.sin(b) * math.cos(b))


# ============================================================================
# Named phantoms (used by key=value configs)
# ============================================================================

PHANTOM_PRESETS = ("disc", "annulus", "bump", "offset_bump", "cosine_mode", "odd_dipole")


def preset_phantom(name: str, **params: float) -> PhantomSpec:
    """Build a phantom by name; ``params`` override the preset's defaults.

    disc: constant on ball(0, radius). annulus: constant or bump on
    annulus(r_inner, r_outer). bump: smooth bump on ball(center, radius).
    offset_bump: bump centered at (cx, cy). cosine_mode: cos(k phi) a(r) on an
    annulus. odd_dipole: two opposite bumps, odd under x -> -x.
    """
    value = float(params.get("value", 1.0))
    if name == "disc":
        return PhantomSpec.single(RegionSpec.ball(params.get("radius", 1.0)), ProfileSpec.constant(value))
    if name == "annulus":
        region = RegionSpec.annulus(params.get("r_inner", 0.5), params.get("r_outer", 0.9))
        profile = ProfileSpec.radial_bump(value) if params.get("smooth", 0) else ProfileSpec.constant(value)
        return PhantomSpec.single(region, profile)
    if name == "bump":
        return PhantomSpec.single(RegionSpec.ball(params.get("radius", 0.5)), ProfileSpec.radial_bump(value))
    if name == "offset_bump":
        center = (params.get("cx", 0.5), params.get("cy", 0.0))
        return PhantomSpec.single(RegionSpec.ball(params.get("radius", 0.2), center),
                                  ProfileSpec.radial_bump(value))
    if name == "cosine_mode":
        region = RegionSpec.annulus(params.get("r_inner", 0.3), params.get("r_outer", 0.8))
        return PhantomSpec.single(region, ProfileSpec.cosine_mode(int(params.get("k", 3)), value))
    if name == "odd_dipole":
        r = params.get("radius", 0.2)
        offset = params.get("offset", 0.5)
        return PhantomSpec(components=(
            PhantomComponent(region=RegionSpec.ball(r, (offset, 0.0)), profile=ProfileSpec.radial_bump(value)),
            PhantomComponent(region=RegionSpec.ball(r, (-offset, 0.0)), profile=ProfileSpec.radial_bump(-value)),
        ))
    raise ParameterError(f"unknown phantom preset {name!r}; choose one of {PHANTOM_PRESETS}")
