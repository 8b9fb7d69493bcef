"""riesz-tomo: X-ray transforms, Riesz potentials and partial-data tomography.

Public API surface re-exports the data types, every schema, the numerical
operations and the CLI entry point so callers (and tests) can
``from riesz_tomo import X`` without knowing the internal module layout.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("riesz-tomo")
except PackageNotFoundError:
    __version__ = "0.0.0-dev"

from .__main__ import main
from .abel import (
    AbelTable,
    ChebTable,
    RadialProfile,
    a0,
    abel_apply,
    abel_coefficient,
    abel_coefficient_closed_form,
    abel_coefficients,
    abel_coefficients_oracle,
    angular_decompose,
    chebyshev_coeffs,
    double_factorial,
    positivity_threshold,
    sinogram_angular_modes,
)
from .cli import registry
from .exceptions import (
    DimensionError,
    DivergentKernelError,
    DomainError,
    LemmaHypothesisError,
    NumericalFailureError,
    ParameterError,
    PreconditionError,
    RieszTomoError,
    SearchRangeError,
    UnsupportedGeometryError,
)
from .fileio import (
    export_csv,
    read_grid,
    read_key_values,
    read_mask,
    read_sinogram,
    write_grid,
    write_key_values,
    write_mask,
    write_sinogram,
)
from .grid import (
    PHANTOM_PRESETS,
    GridField,
    cell_centers,
    convex_hull_of_arc,
    preset_phantom,
    rasterize,
    region_cells,
    region_mask,
    relative_l2_error,
    segment_area,
)
from .recon import (
    DenseLeastSquares,
    MaskedProblem,
    SpectrumReport,
    add_noise,
    cgls_solve,
    compare_conditioning,
    full_data_problem,
    helgason_step,
    operator_norm_estimate,
    roi_geometry,
    roi_problem,
    spectrum_report,
    uniqueness_probe,
)
from .riesz import (
    RieszConstantFit,
    RieszOrder,
    SpectralField,
    fractional_laplacian,
    inversion_constant,
    invert_normal,
    kelvin_pullback,
    potential_derivatives,
    riesz_constant_fit,
    riesz_potential,
)
from .schemas import (
    PhantomComponent,
    PhantomSpec,
    ProfileSpec,
    ReconReport,
    RegionSpec,
    RunConfig,
    SinogramGeometry,
    SpeedProfile,
    SplitScenario,
)
from .seismo import (
    TravelTimeDiffData,
    exact_travel_time_difference,
    half_local_problem,
    linearization_discrepancy,
    recover_difference,
    scenario_from_params,
    splitting_problem,
    synthesize_splitting,
)
from .symkernel import (
    Monomial,
    OracleReport,
    SymbolicExpansion,
    check_hypothesis,
    differentiate,
    evaluate_exact,
    expand_D,
    expand_polynomial_times_kernel,
    format_expansion,
    kelvin,
    kelvin_jacobian_abs,
    kernel_derivative,
    kernel_expansion,
    rejected_alphas,
    specialize,
    verify_expansion,
)
from .xray import (
    LineMask,
    Sinogram,
    XRayOperator,
    lines_meeting_region,
    normal_operator,
    plane_slice,
    xray_adjoint,
    xray_forward,
    xray_forward_planes,
)
