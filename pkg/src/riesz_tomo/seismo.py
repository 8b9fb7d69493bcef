"""Shear-wave splitting pipelines on straight rays.

Two quasi-S waves travel with speeds c_i = c0 + dc_i. To first order their
arrival-time difference along a ray gamma is

    dt = int_gamma 1/c1 - 1/c2 ds  ~  int_gamma (dc2 - dc1) / c0^2 ds,

so the data is the X-ray transform of (dc2 - dc1) / c0^2 restricted to the
measured rays.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError

from .exceptions import ParameterError, PreconditionError
from .grid import GridField, cell_center_mesh, rasterize, region_cells
from .recon import MaskedProblem, cgls_solve, helgason_step, roi_geometry
from .schemas import PhantomSpec, ProfileSpec, RegionSpec, SinogramGeometry, SpeedProfile, SplitScenario
from .xray import LineMask, Sinogram, get_operator, lines_meeting_region

logger = logging.getLogger(__name__)

# |dc_i| <= LINEAR_REGIME * min(c0) keeps the first-order model accurate.
LINEAR_REGIME = 0.05


@dataclass(frozen=True, eq=False)
class TravelTimeDiffData:
    """Travel-time differences on the measured rays (zero elsewhere)."""

    sinogram: Sinogram
    mask: LineMask
    linearization_ok: bool = True

    def __post_init__(self):
        if np.any(self.sinogram.values[~self.mask.values] != 0.0):
            raise ParameterError("travel-time data must vanish on unmeasured bins")


def speed_field(c0: SpeedProfile, n: int) -> GridField:
    """Background speed at the cell centers (linear profiles are clamped at r = 1)."""
    x1, x2 = cell_center_mesh(n, 2)
    if c0.kind == "constant":
        values = np.full((n, n), c0.center)
    else:
        r = np.minimum(np.sqrt(x1 ** 2 + x2 ** 2), 1.0)
        values = c0.center + (c0.surface - c0.center) * r
    return GridField(dim=2, n=n, values=values)


def _perturbations(scenario: SplitScenario, n: int) -> tuple[GridField, GridField, GridField]:
    c0 = speed_field(scenario.c0, n)
    dc1 = rasterize(scenario.dc1, n)
    dc2 = rasterize(scenario.dc2, n)
    outside = ~region_cells(scenario.geometry, n)
    for name, field in (("dc1", dc1), ("dc2", dc2)):
        if np.any(field.values[outside] != 0.0):
            raise ParameterError(f"{name} is nonzero outside the scenario annulus")
    return c0, dc1, dc2


def _linear_regime(scenario: SplitScenario, dc1: GridField, dc2: GridField) -> bool:
    bound = LINEAR_REGIME * scenario.c0.minimum
    peak = max(float(np.max(np.abs(dc1.values))), float(np.max(np.abs(dc2.values))))
    if peak > bound:
        logger.warning(
            f"perturbation amplitude {peak:.4g} exceeds {LINEAR_REGIME} * min(c0) = {bound:.4g}; "
            f"the linearized travel-time model is inaccurate"
        )
        return False
    return True


def _geometry(n: int, n_theta: int | None, n_s: int | None) -> SinogramGeometry:
    base = roi_geometry(n)
    return SinogramGeometry(n=n, n_theta=n_theta or base.n_theta, n_s=n_s or base.n_s)


def synthesize_splitting(scenario: SplitScenario, n: int, n_theta: int | None = None,
                         n_s: int | None = None, threads: int | None = None) -> TravelTimeDiffData:
    """X-ray transform of (dc2 - dc1)/c0^2 on the rays meeting B(0, inner_radius)."""
    geometry = _geometry(n, n_theta, n_s)
    c0, dc1, dc2 = _perturbations(scenario, n)
    ok = _linear_regime(scenario, dc1, dc2)
    g = (dc2 - dc1).with_values((dc2.values - dc1.values) / c0.values ** 2)
    mask = lines_meeting_region(geometry, RegionSpec.ball(scenario.inner_radius))
    sino = get_operator(geometry, threads).forward(g).masked(mask)
    return TravelTimeDiffData(sinogram=sino, mask=mask, linearization_ok=ok)


def splitting_problem(data: TravelTimeDiffData, scenario: SplitScenario,
                      threads: int | None = None) -> MaskedProblem:
    """Annulus support, inner ball pinned to zero, rays meeting B(0, inner_radius)."""
    geometry = data.sinogram.geometry
    n = geometry.n
    support = region_cells(scenario.geometry, n)
    known_zero = region_cells(RegionSpec.ball(scenario.geometry.r_inner), n) & ~support
    return MaskedProblem(operator=get_operator(geometry, threads), data=data.sinogram,
                         mask=data.mask, support=support, known_zero=known_zero)


def recover_difference(data: TravelTimeDiffData, scenario: SplitScenario, max_iter: int = 500,
                       tol: float = 1e-6, threads: int | None = None, method: str = "direct") -> GridField:
    """dc2 - dc1 on the annulus from travel-time differences.

    The rays only meet B(0, inner_radius), so the default is the direct
    least-squares solve; iterative methods stall on this interior problem.
    """
    c0 = speed_field(scenario.c0, data.sinogram.geometry.n)
    if float(np.min(c0.values)) <= 0.0:
        raise PreconditionError("background speed must be positive")
    problem = splitting_problem(data, scenario, threads)
    estimate, report = cgls_solve(problem, max_iter=max_iter, tol=tol, method=method)
    logger.info(f"Recovered dc2 - dc1 with {method} (relative residual {report.relative_residual:.3e})")
    return estimate.with_values(estimate.values * c0.values ** 2)


def half_local_problem(arc: RegionSpec, phantom: PhantomSpec, n: int, n_theta: int | None = None,
                       n_s: int | None = None, threads: int | None = None) -> tuple[MaskedProblem, GridField]:
    """Receivers on an arc of the unit circle; f pinned to 0 on the arc's segment.

    Arcs of half-width >= pi/2 have no proper segment and give an empty
    known-zero set.
    """
    truth = rasterize(phantom, n)
    x1, x2 = cell_center_mesh(n, 2)
    disc = x1 ** 2 + x2 ** 2 <= 1.0
    if np.any(truth.values[~disc] != 0.0):
        raise ParameterError("phantom must be supported in the unit disc")
    geometry = _geometry(n, n_theta, n_s)
    mask = lines_meeting_region(geometry, arc)
    if arc.arc_half_width is not None and arc.arc_half_width >= math.pi / 2:
        logger.info("arc half-width >= pi/2: no segment constraint")
        known_zero = np.zeros((n, n), dtype=bool)
    else:
        known_zero = region_cells(helgason_step(RegionSpec.ball(1.0), arc), n)
    operator = get_operator(geometry, threads)
    problem = MaskedProblem(operator=operator, data=operator.forward(truth), mask=mask,
                            support=disc & ~known_zero, known_zero=known_zero, truth=truth)
    return problem, truth


# ============================================================================
# Linearization accuracy
# ============================================================================

def exact_travel_time_difference(scenario: SplitScenario, n: int, n_theta: int | None = None,
                                 n_s: int | None = None, threads: int | None = None) -> Sinogram:
    """int 1/c1 - 1/c2 along the measured rays, without linearization."""
    geometry = _geometry(n, n_theta, n_s)
    c0, dc1, dc2 = _perturbations(scenario, n)
    c1 = c0.values + dc1.values
    c2 = c0.values + dc2.values
    if np.min(c1) <= 0 or np.min(c2) <= 0:
        raise PreconditionError("perturbed speeds must stay positive")
    slowness = GridField(dim=2, n=n, values=1.0 / c1 - 1.0 / c2)
    mask = lines_meeting_region(geometry, RegionSpec.ball(scenario.inner_radius))
    return get_operator(geometry, threads).forward(slowness).masked(mask)


def _scaled(scenario: SplitScenario, factor: float) -> SplitScenario:
    return scenario.model_copy(update={"dc1": scenario.dc1.scaled(factor), "dc2": scenario.dc2.scaled(factor)})


def linearization_discrepancy(scenario: SplitScenario, n: int, n_theta: int | None = None,
                              n_s: int | None = None, threads: int | None = None) -> dict:
    """Linearization error at full and half amplitude; the ratio is ~4 for a second-order error."""
    errors = []
    for factor in (1.0, 0.5):
        scaled = _scaled(scenario, factor)
        exact = exact_travel_time_difference(scaled, n, n_theta, n_s, threads)
        linear = synthesize_splitting(scaled, n, n_theta, n_s, threads).sinogram
        errors.append(float(np.linalg.norm(exact.values - linear.values)))
    ratio = errors[0] / errors[1] if errors[1] > 0 else float("nan")
    logger.info(f"Linearization discrepancy {errors[0]:.3e} -> {errors[1]:.3e} (ratio {ratio:.3f})")
    return {"full": errors[0], "half": errors[1], "ratio": ratio}


# ============================================================================
# Scenario files
# ============================================================================

SCENARIO_KEYS = frozenset({
    "c0", "c0_surface", "c0_kind", "r_inner", "r_outer", "inner_radius",
    "dc1_amplitude", "dc2_amplitude", "profile", "direction_dependent",
})


def scenario_from_params(params: dict[str, str]) -> SplitScenario:
    """Build a scenario from key=value parameters (unknown keys are rejected).

    dc1 and dc2 share one annulus profile (``profile=constant`` or ``bump``)
    with amplitudes ``dc1_amplitude`` and ``dc2_amplitude``.
    """
    unknown = set(params) - SCENARIO_KEYS
    if unknown:
        raise ParameterError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        annulus = RegionSpec.annulus(float(params.get("r_inner", 0.5)), float(params.get("r_outer", 0.9)))
        profile_kind = params.get("profile", "bump")
        if profile_kind not in ("constant", "bump"):
            raise ParameterError(f"profile must be 'constant' or 'bump', got {profile_kind!r}")

        def perturbation(key: str) -> PhantomSpec:
            value = float(params.get(key, 0.0))
            if value == 0.0:
                return PhantomSpec()
            profile = ProfileSpec.constant(value) if profile_kind == "constant" else ProfileSpec.radial_bump(value)
            return PhantomSpec.single(annulus, profile)

        c0 = SpeedProfile(kind=params.get("c0_kind", "constant"), center=float(params.get("c0", 1.0)),
                          surface=float(params.get("c0_surface", params.get("c0", 1.0))))
        return SplitScenario(
            c0=c0,
            dc1=perturbation("dc1_amplitude"),
            dc2=perturbation("dc2_amplitude"),
            geometry=annulus,
            inner_radius=float(params.get("inner_radius", 0.2)),
            direction_dependent=params.get("direction_dependent", "false").lower() in ("1", "true", "yes"),
        )
    except ValueError as e:
        if isinstance(e, (ParameterError, ValidationError)):
            raise
        raise ParameterError(f"invalid scenario value: {e}") from e
