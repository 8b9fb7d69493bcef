"""Discrete parallel-beam X-ray transform, its exact adjoint and line masks.

A line is ``{s w + t w_perp : t in R}`` with ``w = (cos theta, sin theta)`` and
``w_perp = (-sin theta, cos theta)``. Directions cover the full circle, so
every unoriented line is stored twice and ``X* X`` carries the factor 2 of
the normal operator ``N f = 2 f * |x|^(1-d)``.

The forward map samples each line at step h/2 with bilinear interpolation.
Only the first half of the directions is computed; the second half is the
offset-reversed copy (``Xf(s, theta + pi) = Xf(-s, theta)``), which makes the
oriented-line symmetry exact. The adjoint is the literal transpose of the
forward map, scaled so that

    sum(Xf * g) * ds * dtheta == sum(f * X*g) * h^2.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse

from . import config
from .exceptions import DimensionError, ParameterError, UnsupportedGeometryError
from .grid import GridField, bilinear_stencil
from .schemas import RegionSpec, SinogramGeometry

logger = logging.getLogger(__name__)

# Grids up to this size keep an explicit sparse projection matrix.
MATRIX_CACHE_MAX_N = 64


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Line-integral data, shape ``(n_theta, n_s)``."""

    geometry: SinogramGeometry
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        expected = (self.geometry.n_theta, self.geometry.n_s)
        if arr.shape != expected:
            raise DimensionError(f"sinogram shape {arr.shape} does not match geometry {expected}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("sinogram values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, geometry: SinogramGeometry) -> "Sinogram":
        return cls(geometry=geometry, values=np.zeros((geometry.n_theta, geometry.n_s)))

    def with_values(self, values: np.ndarray) -> "Sinogram":
        return Sinogram(geometry=self.geometry, values=values)

    def masked(self, mask: "LineMask") -> "Sinogram":
        if mask.geometry != self.geometry:
            raise DimensionError("mask geometry does not match sinogram geometry")
        return self.with_values(np.where(mask.values, self.values, 0.0))

    def inner(self, other: "Sinogram") -> float:
        """Pairing with line-measure weight ds * dtheta."""
        if other.geometry != self.geometry:
            raise DimensionError("sinogram geometries differ")
        g = self.geometry
        return float(np.vdot(self.values, other.values) * g.ds * g.dtheta)


@dataclass(frozen=True, eq=False)
class LineMask:
    """Boolean selection of sinogram bins (a partial-data line family)."""

    geometry: SinogramGeometry
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=bool, copy=True)
        expected = (self.geometry.n_theta, self.geometry.n_s)
        if arr.shape != expected:
            raise DimensionError(f"mask shape {arr.shape} does not match geometry {expected}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def full(cls, geometry: SinogramGeometry) -> "LineMask":
        return cls(geometry=geometry, values=np.ones((geometry.n_theta, geometry.n_s), dtype=bool))

    @property
    def count(self) -> int:
        return int(self.values.sum())

    def __or__(self, other: "LineMask") -> "LineMask":
        return LineMask(geometry=self.geometry, values=self.values | other.values)


# ============================================================================
# Line parametrization
# ============================================================================

def offsets(geometry: SinogramGeometry) -> np.ndarray:
    """Offsets s_i, symmetric about 0 bit for bit."""
    half = np.linspace(-math.sqrt(2.0), math.sqrt(2.0), geometry.n_s)
    return 0.5 * (half - half[::-1])


def directions(geometry: SinogramGeometry) -> np.ndarray:
    """Unit vectors (n_theta, 2); the second half is the exact negation of the first."""
    half = geometry.n_theta // 2
    theta = 2.0 * math.pi * np.arange(half) / geometry.n_theta
    first = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return np.concatenate([first, -first], axis=0)


def angles(geometry: SinogramGeometry) -> np.ndarray:
    return 2.0 * math.pi * np.arange(geometry.n_theta) / geometry.n_theta


def _steps(geometry: SinogramGeometry) -> np.ndarray:
    step = 0.5 * geometry.h
    k = math.ceil(math.sqrt(2.0) / step)
    return np.arange(-k, k + 1) * step


def _direction_stencil(geometry: SinogramGeometry, j: int) -> tuple[np.ndarray, np.ndarray]:
    c, s = directions(geometry)[j]
    off = offsets(geometry)[:, None]
    t = _steps(geometry)[None, :]
    x = off * c - t * s
    y = off * s + t * c
    return bilinear_stencil(geometry.n, x, y)


# ============================================================================
# Operator
# ============================================================================

class XRayOperator:
    """Forward/adjoint pair for one sinogram geometry.

    Small grids (n <= MATRIX_CACHE_MAX_N) build an explicit sparse matrix on
    first use; larger grids recompute the bilinear stencils per direction,
    parallel over directions with a fixed reduction order.
    """

    def __init__(self, geometry: SinogramGeometry, threads: int | None = None,
                 cache_matrix: bool | None = None):
        self.geometry = geometry
        self.threads = config.get_threads(threads)
        self.cache_matrix = geometry.n <= MATRIX_CACHE_MAX_N if cache_matrix is None else cache_matrix
        self._matrix: sparse.csr_matrix | None = None

    @property
    def _half(self) -> int:
        return self.geometry.n_theta // 2

    @property
    def _step(self) -> float:
        return 0.5 * self.geometry.h

    @property
    def adjoint_scale(self) -> float:
        g = self.geometry
        return g.ds * g.dtheta / g.h ** 2

    def as_matrix(self) -> sparse.csr_matrix:
        """Sparse matrix of the first half of the directions (rows j * n_s + i)."""
        if self._matrix is not None:
            return self._matrix
        g = self.geometry
        rows, cols, data = [], [], []
        for j in range(self._half):
            idx, w = _direction_stencil(g, j)
            row = (j * g.n_s + np.arange(g.n_s))[None, :, None]
            row = np.broadcast_to(row, idx.shape)
            keep = w > 0.0
            rows.append(row[keep])
            cols.append(idx[keep])
            data.append(w[keep] * self._step)
        matrix = sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self._half * g.n_s, g.n * g.n),
        )
        if self.cache_matrix:
            self._matrix = matrix
        logger.debug(f"Assembled projection matrix {matrix.shape} with {matrix.nnz} nonzeros")
        return matrix

    def _map(self, fn, count: int):
        if self.threads == 1:
            return map(fn, range(count))
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, range(count)))

    def forward(self, f: GridField) -> Sinogram:
        g = self.geometry
        if f.dim != 2:
            raise DimensionError("xray_forward takes 2D fields; use xray_forward_planes for 3D")
        if f.n != g.n:
            raise DimensionError(f"field n={f.n} does not match geometry n={g.n}")
        flat = f.values.ravel()
        if self.cache_matrix:
            top = (self.as_matrix() @ flat).reshape(self._half, g.n_s)
        else:
            def row(j: int) -> np.ndarray:
                idx, w = _direction_stencil(g, j)
                return (flat[idx] * w).sum(axis=(0, 2)) * self._step
            top = np.stack(list(self._map(row, self._half)))
        return Sinogram(geometry=g, values=np.concatenate([top, top[:, ::-1]], axis=0))

    def adjoint(self, sino: Sinogram) -> GridField:
        g = self.geometry
        if sino.geometry != g:
            raise DimensionError("sinogram geometry does not match operator geometry")
        folded = sino.values[: self._half] + sino.values[self._half:, ::-1]
        if self.cache_matrix:
            back = self.as_matrix().T @ folded.ravel()
        else:
            def splat(j: int) -> np.ndarray:
                idx, w = _direction_stencil(g, j)
                weights = w * folded[j][None, :, None]
                return np.bincount(idx.ravel(), weights=weights.ravel(), minlength=g.n * g.n)
            back = np.zeros(g.n * g.n)
            for part in self._map(splat, self._half):
                back += part
            back *= self._step
        return GridField(dim=2, n=g.n, values=(back * self.adjoint_scale).reshape(g.n, g.n))

    def normal(self, f: GridField) -> GridField:
        return self.adjoint(self.forward(f))


@functools.lru_cache(maxsize=8)
def get_operator(geometry: SinogramGeometry, threads: int | None = None) -> XRayOperator:
    """Shared operator per (geometry, threads); keeps cached matrices alive."""
    return XRayOperator(geometry, threads=threads)


def _geometry_for(f: GridField, geometry: SinogramGeometry | None) -> SinogramGeometry:
    return SinogramGeometry.for_grid(f.n) if geometry is None else geometry


def xray_forward(f: GridField, geometry: SinogramGeometry | None = None,
                 threads: int | None = None) -> Sinogram:
    """Line integrals of a 2D field over every stored line."""
    return get_operator(_geometry_for(f, geometry), threads).forward(f)


def xray_adjoint(g: Sinogram, threads: int | None = None) -> GridField:
    """Backprojection: exact transpose of :func:`xray_forward` under the weighted pairings."""
    return get_operator(g.geometry, threads).adjoint(g)


def normal_operator(f: GridField, geometry: SinogramGeometry | None = None,
                    threads: int | None = None) -> GridField:
    """X* X f, approximating 2 (f * |.|^(1-d))."""
    return get_operator(_geometry_for(f, geometry), threads).normal(f)


# ============================================================================
# Line masks
# ============================================================================

def lines_meeting_region(geometry: SinogramGeometry, region: RegionSpec) -> LineMask:
    """Bins whose line meets the region.

    Balls and annuli use the line tube of width h (distance <= h/2); an arc
    (disc_segment) selects lines whose chord endpoints on its circle include
    a point of the arc.
    """
    dirs = directions(geometry)
    off = offsets(geometry)[None, :]
    tol = 0.5 * geometry.h
    if region.kind == "ball":
        c = np.zeros(2)
        given = np.asarray(region.center, dtype=np.float64)[:2]
        c[: given.size] = given
        proj = (dirs @ c)[:, None]
        values = np.abs(off - proj) <= region.radius + tol
    elif region.kind == "annulus":
        values = np.broadcast_to(np.abs(off) <= region.r_outer + tol, (geometry.n_theta, geometry.n_s))
    elif region.kind == "disc_segment":
        rho = region.circle_radius
        a = region.arc_center_angle
        u = np.array([math.cos(a), math.sin(a)])
        cos_beta = math.cos(region.arc_half_width)
        crosses = np.abs(off) <= rho
        half_chord = np.sqrt(np.clip(rho ** 2 - off ** 2, 0.0, None))
        along = (dirs @ u)[:, None] * off
        perp = (dirs[:, 0] * u[1] - dirs[:, 1] * u[0])[:, None]
        first = along + perp * half_chord
        second = along - perp * half_chord
        values = crosses & ((first >= rho * cos_beta) | (second >= rho * cos_beta))
    else:
        raise UnsupportedGeometryError(f"lines_meeting_region does not handle {region.kind!r}")
    return LineMask(geometry=geometry, values=values)


# ============================================================================
# 3D reduction
# ============================================================================

def plane_slice(f: GridField, psi: float, axis: int = 2) -> GridField:
    """Restriction of a 3D field to the plane through the origin that contains
    the coordinate axis ``axis`` and the horizontal direction at angle ``psi``.

    In-plane coordinates are (u, v) with u along the horizontal direction and
    v along ``axis``; sampling is trilinear on the same n x n cell centers.
    """
    if f.dim != 3:
        raise DimensionError("plane_slice takes 3D fields")
    others = [a for a in range(3) if a != axis]
    n = f.n
    h = f.h
    axis_vals = -1.0 + (np.arange(n) + 0.5) * h
    uu, vv = np.meshgrid(axis_vals, axis_vals, indexing="ij")
    coords = np.zeros((3,) + uu.shape)
    coords[others[0]] = uu * math.cos(psi)
    coords[others[1]] = uu * math.sin(psi)
    coords[axis] = vv
    index_coords = (coords + 1.0) / h - 0.5
    values = ndimage.map_coordinates(np.asarray(f.values), index_coords, order=1, mode="constant", cval=0.0)
    return GridField(dim=2, n=n, values=values)


def xray_forward_planes(f: GridField, n_planes: int, axis: int = 2,
                        geometry: SinogramGeometry | None = None,
                        threads: int | None = None) -> list[tuple[float, Sinogram]]:
    """3D transform restricted to the planes containing ``axis``: one 2D sinogram per plane."""
    if f.dim != 3:
        raise DimensionError("xray_forward_planes takes 3D fields")
    if n_planes < 1:
        raise ParameterError("n_planes must be >= 1")
    result = []
    for p in range(n_planes):
        psi = math.pi * p / n_planes
        result.append((psi, xray_forward(plane_slice(f, psi, axis), geometry, threads)))
    return result


def sinogram_inner(a: Sinogram, b: Sinogram) -> float:
    """<a, b>_Gamma with weight ds * dtheta."""
    return a.inner(b)


def grid_inner(f: GridField, g: GridField) -> float:
    """<f, g> with weight h^d."""
    return f.inner(g)
