"""Partial-data reconstruction: masked least squares, uniqueness probes and spectra.

Unknowns live on the free cells (support minus known-zero cells); every other
cell is pinned to 0. The masked operator ``A x = mask * X(embed(x))`` maps
(free cells, weight h^2) to (sinogram bins, weight ds * dtheta), and its
adjoint is ``restrict(X*(mask * r))``.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import sparse

from .exceptions import (
    DimensionError,
    NumericalFailureError,
    ParameterError,
    PreconditionError,
    UnsupportedGeometryError,
)
from .grid import GridField, convex_hull_of_arc, region_cells, relative_l2_error
from .schemas import ReconReport, RegionSpec, SinogramGeometry
from .xray import LineMask, Sinogram, XRayOperator, get_operator, lines_meeting_region

logger = logging.getLogger(__name__)

# Allowed relative increase of the residual between CGLS iterations.
RESIDUAL_SLACK = 1e-10
MAX_SPECTRUM_N = 32
# Dense direct solves factor at most this many matrix entries.
MAX_DIRECT_ENTRIES = 30_000_000
METHODS = ("cgls", "landweber", "direct")


@dataclass(frozen=True, eq=False)
class MaskedProblem:
    """Masked data plus the cell constraints of a partial-data problem."""

    operator: XRayOperator
    data: Sinogram
    mask: LineMask
    support: np.ndarray
    known_zero: np.ndarray
    truth: GridField | None = field(default=None)

    def __post_init__(self):
        g = self.operator.geometry
        if self.data.geometry != g or self.mask.geometry != g:
            raise DimensionError("data, mask and operator must share one sinogram geometry")
        shape = (g.n, g.n)
        for name in ("support", "known_zero"):
            arr = np.array(getattr(self, name), dtype=bool, copy=True)
            if arr.shape != shape:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        overlap = int(np.count_nonzero(self.support & self.known_zero))
        if overlap:
            raise ParameterError(f"support and known_zero overlap in {overlap} cells")

    @property
    def geometry(self) -> SinogramGeometry:
        return self.operator.geometry

    @property
    def free(self) -> np.ndarray:
        return self.support & ~self.known_zero

    @property
    def masked_data(self) -> Sinogram:
        return self.data.masked(self.mask)

    def embed(self, x: np.ndarray) -> GridField:
        n = self.geometry.n
        values = np.zeros((n, n))
        values[self.free] = x
        return GridField(dim=2, n=n, values=values)

    def apply(self, x: np.ndarray) -> Sinogram:
        return self.operator.forward(self.embed(x)).masked(self.mask)

    def apply_adjoint(self, r: Sinogram) -> np.ndarray:
        return np.asarray(self.operator.adjoint(r.masked(self.mask)).values[self.free])

    @functools.cached_property
    def least_squares(self) -> "DenseLeastSquares":
        """Factored dense system, built on first use and shared by later solves."""
        return DenseLeastSquares.factor(self)


def _grid_inner(problem: MaskedProblem, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b)) * problem.geometry.h ** 2


def _residual_norm(r: Sinogram) -> float:
    return math.sqrt(max(r.inner(r), 0.0))


def _check_step(history: list[float], value: float, iteration: int) -> None:
    if not math.isfinite(value):
        raise NumericalFailureError(f"residual became non-finite at iteration {iteration}")
    if value > history[-1] * (1.0 + RESIDUAL_SLACK) + RESIDUAL_SLACK:
        raise NumericalFailureError(
            f"residual increased from {history[-1]:.6e} to {value:.6e} at iteration {iteration}"
        )


def _cgls(problem: MaskedProblem, x: np.ndarray, max_iter: int, tol: float,
          scale: float) -> tuple[np.ndarray, list[float], int, bool]:
    b = problem.masked_data
    r = b.with_values(b.values - problem.apply(x).values)
    s = problem.apply_adjoint(r)
    p = s.copy()
    gamma = _grid_inner(problem, s, s)
    history = [_residual_norm(r) / scale]
    iterations = 0
    converged = history[-1] <= tol
    while not converged and iterations < max_iter and gamma > 0.0:
        q = problem.apply(p)
        qq = q.inner(q)
        if qq <= 0.0:
            break
        step = gamma / qq
        x = x + step * p
        r = r.with_values(r.values - step * q.values)
        s = problem.apply_adjoint(r)
        gamma_next = _grid_inner(problem, s, s)
        iterations += 1
        rel = _residual_norm(r) / scale
        _check_step(history, rel, iterations)
        history.append(rel)
        logger.debug(f"CGLS iteration {iterations}: relative residual {rel:.3e}")
        converged = rel <= tol
        p = s + (gamma_next / gamma) * p
        gamma = gamma_next
    if gamma == 0.0:
        # normal equations solved exactly
        converged = True
    return x, history, iterations, converged


def operator_norm_estimate(problem: MaskedProblem, iterations: int = 30, seed: int = 0) -> float:
    """Largest singular value of the masked operator by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(int(problem.free.sum()))
    sigma = 0.0
    for _ in range(iterations):
        norm = math.sqrt(max(_grid_inner(problem, v, v), 0.0))
        if norm == 0.0:
            return 0.0
        v = v / norm
        w = problem.apply_adjoint(problem.apply(v))
        sigma = math.sqrt(max(_grid_inner(problem, v, w), 0.0))
        v = w
    return sigma


def _landweber(problem: MaskedProblem, x: np.ndarray, max_iter: int, tol: float,
               scale: float) -> tuple[np.ndarray, list[float], int, bool]:
    sigma = operator_norm_estimate(problem)
    b = problem.masked_data
    r = b.with_values(b.values - problem.apply(x).values)
    history = [_residual_norm(r) / scale]
    if sigma == 0.0:
        return x, history, 0, history[-1] <= tol
    omega = 1.0 / sigma ** 2
    iterations = 0
    converged = history[-1] <= tol
    while not converged and iterations < max_iter:
        x = x + omega * problem.apply_adjoint(r)
        r = b.with_values(b.values - problem.apply(x).values)
        iterations += 1
        rel = _residual_norm(r) / scale
        _check_step(history, rel, iterations)
        history.append(rel)
        converged = rel <= tol
    return x, history, iterations, converged


def _line_rows(problem: MaskedProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Masked bins (theta, s) and the first-half matrix row of the line each one measures."""
    g = problem.geometry
    half = g.n_theta // 2
    theta_idx, s_idx = np.nonzero(problem.mask.values)
    # bins of the second half are reversed copies of first-half rows
    rows = np.where(theta_idx < half, theta_idx * g.n_s + s_idx,
                    (theta_idx - half) * g.n_s + (g.n_s - 1 - s_idx))
    return theta_idx, s_idx, rows


@dataclass(frozen=True, eq=False)
class DenseLeastSquares:
    """Thin SVD of the masked system with one row per measured line.

    Bins measuring the same line are merged: the least-squares objective over
    the duplicates equals a row weighted by sqrt(count) against their mean.
    Columns are scaled to unit norm before factoring; ``column_scale`` undoes it,
    and ``singular_values`` belong to the scaled matrix.
    """

    q: np.ndarray
    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray
    column_scale: np.ndarray
    inverse: np.ndarray
    counts: np.ndarray
    rank: int

    @classmethod
    def factor(cls, problem: MaskedProblem) -> "DenseLeastSquares":
        _, _, rows = _line_rows(problem)
        unique, inverse, counts = np.unique(rows, return_inverse=True, return_counts=True)
        cols = np.flatnonzero(problem.free.ravel())
        if not cols.size:
            raise PreconditionError("the problem has no free cells")
        entries = unique.size * cols.size
        if entries > MAX_DIRECT_ENTRIES:
            raise ParameterError(
                f"direct solve needs a {unique.size} x {cols.size} dense matrix, "
                f"above the limit of {MAX_DIRECT_ENTRIES} entries; use method='cgls'"
            )
        weights = np.sqrt(counts.astype(np.float64))
        matrix = problem.operator.as_matrix()[unique][:, cols]
        dense = (sparse.diags(weights) @ matrix).toarray()
        shape = dense.shape
        norms = np.linalg.norm(dense, axis=0)
        column_scale = np.where(norms > 0.0, 1.0 / np.where(norms > 0.0, norms, 1.0), 1.0)
        dense *= column_scale
        # QR first keeps the SVD workspace at (free cells)^2
        q, r = scipy.linalg.qr(dense, mode="economic", overwrite_a=True, check_finite=False)
        u, singular_values, vt = scipy.linalg.svd(r, full_matrices=False, check_finite=False)
        cutoff = singular_values[0] * np.finfo(np.float64).eps * max(shape)
        rank = int(np.count_nonzero(singular_values > cutoff))
        logger.info(
            f"Factored {unique.size} lines x {cols.size} cells: rank {rank}, "
            f"sigma range [{singular_values[-1]:.3e}, {singular_values[0]:.3e}]"
        )
        return cls(q=q, u=u, singular_values=singular_values, vt=vt, column_scale=column_scale,
                   inverse=inverse, counts=counts, rank=rank)

    def solve(self, values: np.ndarray) -> np.ndarray:
        """Minimum-norm least-squares cells for the masked bin values (in mask order)."""
        mean = np.bincount(self.inverse, weights=values, minlength=self.counts.size) / self.counts
        rhs = np.sqrt(self.counts) * mean
        coeffs = (self.u.T @ (self.q.T @ rhs))[:self.rank] / self.singular_values[:self.rank]
        return self.column_scale * (self.vt[:self.rank].T @ coeffs)


def _direct(problem: MaskedProblem, x: np.ndarray, tol: float,
            scale: float) -> tuple[np.ndarray, list[float], int, bool]:
    system = problem.least_squares
    b = problem.masked_data
    r = b.with_values(b.values - problem.apply(x).values)
    history = [_residual_norm(r) / scale]
    x = x + system.solve(r.values[problem.mask.values])
    r = b.with_values(b.values - problem.apply(x).values)
    rel = _residual_norm(r) / scale
    if not math.isfinite(rel) or not np.all(np.isfinite(x)):
        raise NumericalFailureError("direct solve produced non-finite values")
    history.append(rel)
    return x, history, 1, rel <= tol


def cgls_solve(problem: MaskedProblem, max_iter: int = 500, tol: float = 1e-6,
               x0: np.ndarray | GridField | None = None, method: str = "cgls",
               seed: int | None = None) -> tuple[GridField, ReconReport]:
    """Least-squares solution of the masked problem, starting from x0 (default 0).

    ``method="landweber"`` switches to the fixed-step gradient iteration.
    ``method="direct"`` adds the minimum-norm least-squares correction from
    the factored dense system (``MaskedProblem.least_squares``) in one step;
    it is the method that resolves the badly conditioned ROI and half-local
    problems, and ``max_iter`` does not apply to it.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if max_iter < 0:
        raise ParameterError(f"max_iter must be >= 0, got {max_iter}")
    if problem.mask.count == 0:
        raise PreconditionError("line mask selects no bins")
    free = problem.free
    if x0 is None:
        x = np.zeros(int(free.sum()))
    elif isinstance(x0, GridField):
        x = np.asarray(x0.values[free], dtype=np.float64)
    else:
        x = np.asarray(x0, dtype=np.float64).copy()
    scale = _residual_norm(problem.masked_data) or 1.0
    sigma_min = sigma_max = None
    if method == "cgls":
        x, history, iterations, converged = _cgls(problem, x, max_iter, tol, scale)
    elif method == "landweber":
        x, history, iterations, converged = _landweber(problem, x, max_iter, tol, scale)
    elif method == "direct":
        x, history, iterations, converged = _direct(problem, x, tol, scale)
        singular_values = problem.least_squares.singular_values
        sigma_min, sigma_max = float(singular_values[-1]), float(singular_values[0])
    else:
        raise ParameterError(f"unknown method {method!r}; use one of {', '.join(METHODS)}")
    estimate = problem.embed(x)
    report = ReconReport(
        method=method,
        iterations=iterations,
        converged=converged,
        relative_residual=history[-1],
        relative_error=None if problem.truth is None else relative_l2_error(estimate, problem.truth),
        sigma_min=sigma_min,
        sigma_max=sigma_max,
        seed=seed,
        residual_history=history,
    )
    logger.info(
        f"{method} stopped after {iterations} iterations "
        f"(relative residual {history[-1]:.3e}, converged={converged})"
    )
    return estimate, report


def uniqueness_probe(problem: MaskedProblem, trials: int = 5, seed: int = 0,
                     max_iter: int = 500, tol: float = 1e-8, method: str = "cgls") -> float:
    """Max pairwise relative distance of solutions started from random feasible points.

    With ``method="direct"`` each start gets the minimum-norm correction, so
    any null-space component of the start survives and shows up here.
    """
    if trials < 2:
        raise ParameterError(f"trials must be >= 2, got {trials}")
    rng = np.random.default_rng(seed)
    count = int(problem.free.sum())
    solutions = []
    for _ in range(trials):
        x0 = rng.standard_normal(count)
        estimate, _ = cgls_solve(problem, max_iter=max_iter, tol=tol, x0=x0, method=method, seed=seed)
        solutions.append(estimate.values[problem.free])
    distance = 0.0
    for i in range(trials):
        for j in range(i + 1, trials):
            denom = max(np.linalg.norm(solutions[i]), np.linalg.norm(solutions[j]))
            if denom > 0:
                distance = max(distance, float(np.linalg.norm(solutions[i] - solutions[j]) / denom))
    logger.info(f"Uniqueness probe over {trials} starts: max distance {distance:.3e}")
    return distance


# ============================================================================
# Spectra
# ============================================================================

@dataclass(frozen=True, eq=False)
class SpectrumReport:
    singular_values: np.ndarray

    @property
    def sigma_min(self) -> float | None:
        return float(self.singular_values[-1]) if self.singular_values.size else None

    @property
    def sigma_max(self) -> float | None:
        return float(self.singular_values[0]) if self.singular_values.size else None

    @property
    def condition_number(self) -> float:
        if not self.singular_values.size:
            return float("nan")
        if self.sigma_min == 0.0:
            return float("inf")
        return self.sigma_max / self.sigma_min


def masked_matrix(problem: MaskedProblem) -> sparse.csr_matrix:
    """Sparse matrix of the masked, support-restricted operator in the weighted norms."""
    g = problem.geometry
    top = problem.operator.as_matrix()
    _, _, rows = _line_rows(problem)
    cols = np.flatnonzero(problem.free.ravel())
    weight = math.sqrt(g.ds * g.dtheta) / g.h
    return (top[rows][:, cols] * weight).tocsr()


def spectrum_report(problem: MaskedProblem, n_small: int | None = None) -> SpectrumReport:
    """All singular values (descending) of the masked operator; optionally only the n_small smallest."""
    if problem.geometry.n > MAX_SPECTRUM_N:
        raise ParameterError(f"dense spectra are limited to n <= {MAX_SPECTRUM_N}, got {problem.geometry.n}")
    if not problem.free.any():
        return SpectrumReport(singular_values=np.zeros(0))
    dense = masked_matrix(problem).toarray()
    values = scipy.linalg.svdvals(dense)
    if n_small is not None:
        values = values[-n_small:]
    report = SpectrumReport(singular_values=values)
    logger.info(f"Spectrum: sigma_max={report.sigma_max:.4e}, sigma_min={report.sigma_min:.4e}")
    return report


def compare_conditioning(full: MaskedProblem, partial: MaskedProblem) -> dict:
    """Condition numbers of two problems on the same unknowns."""
    if not np.array_equal(full.free, partial.free):
        raise ParameterError("problems must constrain the same cells")
    a, b = spectrum_report(full), spectrum_report(partial)
    return {
        "full_condition": a.condition_number,
        "partial_condition": b.condition_number,
        "full_sigma_min": a.sigma_min,
        "partial_sigma_min": b.sigma_min,
    }


# ============================================================================
# Problem builders
# ============================================================================

def helgason_step(f_support: RegionSpec, arc: RegionSpec) -> RegionSpec:
    """Circular segment cut off by the arc's chord, on the boundary circle of ``f_support``.

    Line integrals vanishing on every line meeting the arc force f to vanish
    on this segment.
    """
    if f_support.kind != "ball" or any(c != 0.0 for c in f_support.center):
        raise UnsupportedGeometryError("f_support must be a ball centered at the origin")
    return convex_hull_of_arc(arc.model_copy(update={"radius": f_support.radius}))


def roi_geometry(n: int) -> SinogramGeometry:
    """Denser line set for partial-data experiments (4n directions, 4n + 1 offsets)."""
    return SinogramGeometry(n=n, n_theta=4 * n, n_s=4 * n + 1)


def add_noise(data: Sinogram, mask: LineMask, level: float, seed: int) -> Sinogram:
    """Gaussian noise with std ``level`` times the RMS of the masked data."""
    if level < 0:
        raise ParameterError(f"noise level must be >= 0, got {level}")
    if level == 0:
        return data
    rng = np.random.default_rng(seed)
    selected = data.values[mask.values]
    rms = float(np.sqrt(np.mean(selected ** 2))) if selected.size else 0.0
    noise = rng.standard_normal(data.values.shape) * level * rms
    return data.with_values(data.values + noise)


def _build(truth: GridField, geometry: SinogramGeometry, mask: LineMask, support: np.ndarray,
           known_zero: np.ndarray, noise_level: float, seed: int, threads: int | None) -> MaskedProblem:
    operator = get_operator(geometry, threads)
    data = add_noise(operator.forward(truth), mask, noise_level, seed)
    return MaskedProblem(operator=operator, data=data, mask=mask, support=support,
                         known_zero=known_zero, truth=truth)


def full_data_problem(truth: GridField, geometry: SinogramGeometry | None = None,
                      support: RegionSpec | None = None, noise_level: float = 0.0,
                      seed: int = 0, threads: int | None = None) -> MaskedProblem:
    """Every line measured; unknowns on ``support`` (default: the whole grid)."""
    geometry = SinogramGeometry.for_grid(truth.n) if geometry is None else geometry
    n = truth.n
    cells = np.ones((n, n), dtype=bool) if support is None else region_cells(support, n)
    return _build(truth, geometry, LineMask.full(geometry), cells, np.zeros((n, n), dtype=bool),
                  noise_level, seed, threads)


def roi_problem(truth: GridField, mask_region: RegionSpec, known_zero: RegionSpec | None,
                support: RegionSpec | None, geometry: SinogramGeometry | None = None,
                noise_level: float = 0.0, seed: int = 0, threads: int | None = None) -> MaskedProblem:
    """Lines meeting ``mask_region`` only; f pinned to 0 on ``known_zero`` and off ``support``."""
    n = truth.n
    geometry = roi_geometry(n) if geometry is None else geometry
    mask = lines_meeting_region(geometry, mask_region)
    support_cells = np.ones((n, n), dtype=bool) if support is None else region_cells(support, n)
    zero_cells = np.zeros((n, n), dtype=bool) if known_zero is None else region_cells(known_zero, n)
    return _build(truth, geometry, mask, support_cells & ~zero_cells, zero_cells, noise_level, seed, threads)
