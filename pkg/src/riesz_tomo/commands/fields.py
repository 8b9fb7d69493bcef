"""Field commands: phantoms, the X-ray forward/adjoint/normal operators, Riesz potentials and inversion."""

import logging
from typing import Any

from pydantic import ValidationError

from ..cli import EXIT_NUMERICAL, EXIT_UNEXPECTED, EXIT_VALIDATION, registry
from ..exceptions import NumericalFailureError, RieszTomoError
from ..fileio import read_grid, read_sinogram, write_sinogram
from ..grid import PHANTOM_PRESETS, preset_phantom, rasterize, relative_l2_error
from ..riesz import RieszOrder, invert_normal, riesz_potential
from ..schemas import RunConfig, SinogramGeometry
from ..xray import get_operator
from .params import (
    PRESET_KEYS,
    optional_int,
    param_bool,
    param_float,
    param_int,
    param_str,
    require_input,
    require_out,
    save_field,
)

logger = logging.getLogger(__name__)

GEOMETRY_PARAMS = {
    "n_theta": "Number of oriented directions (default 2n)",
    "n_s": "Number of offsets (default 2 ceil(n / sqrt 2) + 1)",
}


def _geometry(cfg: RunConfig, n: int) -> SinogramGeometry:
    return SinogramGeometry.for_grid(n, optional_int(cfg, "n_theta"), optional_int(cfg, "n_s"))


@registry.command(
    "phantom",
    params={
        "preset": f"Phantom name, one of {', '.join(PHANTOM_PRESETS)}",
        "n": "Grid cells per axis (even, >= 8)",
        "dim": "2 or 3",
        **{key: "Preset parameter" for key in PRESET_KEYS},
    },
)
def cmd_phantom(cfg: RunConfig) -> dict[str, Any]:
    """Rasterize a named phantom to an RGF1 file."""
    try:
        overrides = {key: param_float(cfg, key) for key in PRESET_KEYS if key in cfg.params}
        spec = preset_phantom(param_str(cfg, "preset", "disc"), **overrides)
        field = rasterize(spec, param_int(cfg, "n", 64), param_int(cfg, "dim", 2))
        return {"success": True, **save_field(cfg, field), "integral": field.integral()}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid phantom request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_phantom: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command("xray", params=dict(GEOMETRY_PARAMS))
def cmd_xray(cfg: RunConfig) -> dict[str, Any]:
    """Forward-project an RGF1 field to an RSG1 sinogram."""
    try:
        f = read_grid(require_input(cfg))
        sino = get_operator(_geometry(cfg, f.n), cfg.threads).forward(f)
        path = require_out(cfg)
        write_sinogram(path, sino)
        return {
            "success": True,
            "path": str(path),
            "n_theta": sino.geometry.n_theta,
            "n_s": sino.geometry.n_s,
        }
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_xray: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid xray request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_xray: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command("adjoint", params={"n": "Grid cells per axis of the output field"})
def cmd_adjoint(cfg: RunConfig) -> dict[str, Any]:
    """Backproject an RSG1 sinogram to an RGF1 field."""
    try:
        sino = read_sinogram(require_input(cfg), param_int(cfg, "n"))
        field = get_operator(sino.geometry, cfg.threads).adjoint(sino)
        return {"success": True, **save_field(cfg, field)}
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_adjoint: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid adjoint request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_adjoint: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command("normal", params=dict(GEOMETRY_PARAMS))
def cmd_normal(cfg: RunConfig) -> dict[str, Any]:
    """Apply X* X to an RGF1 field."""
    try:
        f = read_grid(require_input(cfg))
        field = get_operator(_geometry(cfg, f.n), cfg.threads).normal(f)
        return {"success": True, **save_field(cfg, field)}
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_normal: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid normal request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_normal: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command("riesz", params={"alpha": "Kernel order, 0 < alpha < d (default d - 1)"})
def cmd_riesz(cfg: RunConfig) -> dict[str, Any]:
    """Riesz potential of an RGF1 field."""
    try:
        f = read_grid(require_input(cfg))
        order = RieszOrder(alpha=param_float(cfg, "alpha", float(f.dim - 1)), d=f.dim)
        field = riesz_potential(f, order, cfg.threads)
        return {"success": True, **save_field(cfg, field), "alpha": order.alpha}
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_riesz: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid riesz request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_riesz: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command(
    "invert",
    params={
        "far_field": "Continue N f outside the grid with its fitted |x|^(1-d) tail (default true)",
        "window": "Roll the inversion multiplier off above a quarter of the grid Nyquist frequency (default true)",
        "truth": "Optional RGF1 ground truth; adds relative_error to the report",
    },
)
def cmd_invert(cfg: RunConfig) -> dict[str, Any]:
    """Recover f from N f with the fractional-Laplacian inversion formula."""
    try:
        nf = read_grid(require_input(cfg))
        field = invert_normal(nf, far_field=param_bool(cfg, "far_field", True),
                              window=param_bool(cfg, "window", True), threads=cfg.threads)
        result = {"success": True, **save_field(cfg, field)}
        if "truth" in cfg.params:
            truth = read_grid(param_str(cfg, "truth"))
            result["relative_error"] = relative_l2_error(field, truth)
        return result
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_invert: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid invert request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_invert: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}
