"""Partial-data experiments: ROI reconstruction, shear-wave splitting and operator spectra."""

import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..cli import EXIT_NUMERICAL, EXIT_UNEXPECTED, EXIT_VALIDATION, registry
from ..exceptions import NumericalFailureError, ParameterError, RieszTomoError
from ..fileio import read_grid, write_key_values, write_mask, write_sinogram
from ..grid import GridField, preset_phantom, rasterize, relative_l2_error
from ..recon import (
    MAX_SPECTRUM_N,
    MaskedProblem,
    cgls_solve,
    full_data_problem,
    roi_geometry,
    roi_problem,
    spectrum_report,
    uniqueness_probe,
)
from ..schemas import RegionSpec, RunConfig, SinogramGeometry
from ..seismo import (
    SCENARIO_KEYS,
    half_local_problem,
    linearization_discrepancy,
    recover_difference,
    scenario_from_params,
    synthesize_splitting,
)
from ..xray import LineMask
from .params import PRESET_KEYS, optional_int, param_float, param_int, param_str, save_field

logger = logging.getLogger(__name__)

GEOMETRY_PARAMS = {
    "n": "Grid cells per axis (default 64)",
    "n_theta": "Number of oriented directions (default 4n)",
    "n_s": "Number of offsets (default 4n + 1)",
}
SOLVER_PARAMS = {
    "max_iter": "Iteration cap (default 500)",
    "tol": "Relative residual tolerance (default 1e-6)",
}
ROI_PARAMS = {
    "mask_radius": "Measured lines meet B(0, mask_radius) (default 0.2)",
    "known_zero_radius": "f is known to vanish on B(0, known_zero_radius); 0 disables (default 0.45)",
    "support_radius": "f is supported in B(0, support_radius) (default 1)",
    "support_r_inner": "Inner radius; when set, f is supported in the annulus out to support_r_outer",
    "support_r_outer": "Outer radius of the annular support (default support_radius)",
}


def _geometry(cfg: RunConfig, n: int) -> SinogramGeometry:
    base = roi_geometry(n)
    return SinogramGeometry(
        n=n,
        n_theta=optional_int(cfg, "n_theta") or base.n_theta,
        n_s=optional_int(cfg, "n_s") or base.n_s,
    )


def _truth(cfg: RunConfig, n: int) -> GridField:
    """Ground truth from the first input file, or from the named phantom."""
    if cfg.inputs:
        field = read_grid(cfg.inputs[0])
        if field.dim != 2:
            raise ParameterError("reconstruction experiments are two-dimensional")
        return field
    overrides = {key: param_float(cfg, key) for key in PRESET_KEYS if key in cfg.params}
    return rasterize(preset_phantom(param_str(cfg, "preset", "annulus"), **overrides), n)


def _arc(cfg: RunConfig) -> RegionSpec:
    return RegionSpec.disc_segment(
        half_width=param_float(cfg, "arc_half_width", 0.4),
        center_angle=param_float(cfg, "arc_center_angle", 0.0),
    )


def _support(cfg: RunConfig) -> RegionSpec:
    outer = param_float(cfg, "support_radius", 1.0)
    if "support_r_inner" in cfg.params:
        return RegionSpec.annulus(param_float(cfg, "support_r_inner"),
                                  param_float(cfg, "support_r_outer", outer))
    return RegionSpec.ball(outer)


def _roi(cfg: RunConfig, truth: GridField, geometry: SinogramGeometry) -> MaskedProblem:
    known_zero_radius = param_float(cfg, "known_zero_radius", 0.45)
    return roi_problem(
        truth,
        mask_region=RegionSpec.ball(param_float(cfg, "mask_radius", 0.2)),
        known_zero=RegionSpec.ball(known_zero_radius) if known_zero_radius > 0 else None,
        support=_support(cfg),
        geometry=geometry,
        noise_level=param_float(cfg, "noise", 0.0),
        seed=cfg.seed,
        threads=cfg.threads,
    )


@registry.command(
    "roi-recon",
    params={
        "mode": "full, roi or half_local (default roi)",
        "preset": "Phantom name when no input file is given (default annulus)",
        **{key: "Phantom preset parameter" for key in PRESET_KEYS},
        **GEOMETRY_PARAMS,
        **ROI_PARAMS,
        "arc_half_width": "Receiver arc half-width in radians, half_local mode (default 0.4)",
        "arc_center_angle": "Receiver arc midpoint angle in radians, half_local mode (default 0)",
        **SOLVER_PARAMS,
        "method": "cgls, landweber or direct (default direct; cgls in full mode)",
        "noise": "Gaussian noise level relative to the data RMS (default 0)",
        "trials": "Random starts of the uniqueness probe; 0 skips it (default 0)",
        "report": "Path of the key=value report",
    },
)
def cmd_roi_recon(cfg: RunConfig) -> dict[str, Any]:
    """Reconstruct a phantom from full, interior (ROI) or half-local line data."""
    try:
        mode = param_str(cfg, "mode", "roi")
        n = param_int(cfg, "n", 64)
        if mode == "full":
            truth = _truth(cfg, n)
            geometry = _geometry(cfg, truth.n)
            problem = full_data_problem(truth, geometry, support=_support(cfg),
                                        noise_level=param_float(cfg, "noise", 0.0), seed=cfg.seed,
                                        threads=cfg.threads)
        elif mode == "roi":
            truth = _truth(cfg, n)
            problem = _roi(cfg, truth, _geometry(cfg, truth.n))
        elif mode == "half_local":
            if cfg.inputs:
                raise ParameterError("half_local mode builds its phantom from the preset parameters")
            overrides = {key: param_float(cfg, key) for key in PRESET_KEYS if key in cfg.params}
            phantom = preset_phantom(param_str(cfg, "preset", "offset_bump"), **overrides)
            geometry = _geometry(cfg, n)
            problem, truth = half_local_problem(_arc(cfg), phantom, n, geometry.n_theta, geometry.n_s,
                                                cfg.threads)
        else:
            raise ParameterError(f"unknown mode {mode!r}; use full, roi or half_local")

        max_iter = param_int(cfg, "max_iter", 500)
        tol = param_float(cfg, "tol", 1e-6)
        method = param_str(cfg, "method", "cgls" if mode == "full" else "direct")
        estimate, report = cgls_solve(problem, max_iter=max_iter, tol=tol, method=method, seed=cfg.seed)
        result = {"success": True, "mode": mode, "measured_lines": problem.mask.count}
        if cfg.out is not None:
            result.update(save_field(cfg, estimate))

        trials = param_int(cfg, "trials", 0)
        distance = None
        if trials:
            distance = uniqueness_probe(problem, trials=trials, seed=cfg.seed, max_iter=max_iter,
                                        method=method)

        if "report" in cfg.params:
            text = report.to_text()
            if distance is not None:
                text += f"uniqueness_distance={distance}\n"
            Path(param_str(cfg, "report")).write_text(text)
            result["report"] = param_str(cfg, "report")

        result.update({
            "method": method,
            "iterations": report.iterations,
            "converged": report.converged,
            "relative_residual": report.relative_residual,
            "relative_error": report.relative_error,
        })
        if report.sigma_min is not None:
            result["sigma_min"] = report.sigma_min
            result["sigma_max"] = report.sigma_max
        if distance is not None:
            result["uniqueness_distance"] = distance
        return result
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_roi_recon: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid roi-recon request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_roi_recon: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command(
    "seismo",
    params={
        **{key: "Scenario parameter" for key in sorted(SCENARIO_KEYS)},
        **GEOMETRY_PARAMS,
        **SOLVER_PARAMS,
        "mode": "recover or linearization (default recover)",
        "method": "Solver for the recovery: direct, cgls or landweber (default direct)",
        "data_out": "Path for the travel-time sinogram (RSG1); its mask goes next to it as .rmk",
    },
)
def cmd_seismo(cfg: RunConfig) -> dict[str, Any]:
    """Shear-wave splitting: recover dc2 - dc1, or measure the linearization error."""
    try:
        scenario = scenario_from_params({k: v for k, v in cfg.params.items() if k in SCENARIO_KEYS})
        n = param_int(cfg, "n", 64)
        n_theta, n_s = optional_int(cfg, "n_theta"), optional_int(cfg, "n_s")
        mode = param_str(cfg, "mode", "recover")

        if mode == "linearization":
            errors = linearization_discrepancy(scenario, n, n_theta, n_s, cfg.threads)
            return {"success": True, "mode": mode, **errors}
        if mode != "recover":
            raise ParameterError(f"unknown mode {mode!r}; use recover or linearization")

        data = synthesize_splitting(scenario, n, n_theta, n_s, cfg.threads)
        if "data_out" in cfg.params:
            data_path = Path(param_str(cfg, "data_out"))
            write_sinogram(data_path, data.sinogram)
            write_mask(data_path.with_suffix(".rmk"), data.mask)
        difference = recover_difference(data, scenario, max_iter=param_int(cfg, "max_iter", 500),
                                        tol=param_float(cfg, "tol", 1e-6), threads=cfg.threads,
                                        method=param_str(cfg, "method", "direct"))
        truth = rasterize(scenario.dc2, n) - rasterize(scenario.dc1, n)
        result = {
            "success": True,
            "mode": mode,
            "linearization_ok": data.linearization_ok,
            "measured_lines": data.mask.count,
            "relative_error": relative_l2_error(difference, truth) if truth.norm() > 0 else None,
        }
        if cfg.out is not None:
            result.update(save_field(cfg, difference))
        return result
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_seismo: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid seismo request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_seismo: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command(
    "spectrum",
    params={
        **GEOMETRY_PARAMS,
        **ROI_PARAMS,
        "n_small": "Number of smallest singular values to list (default 5)",
    },
)
def cmd_spectrum(cfg: RunConfig) -> dict[str, Any]:
    """Singular values of the full-data and ROI operators on the same unknowns."""
    try:
        n = param_int(cfg, "n", 16)
        if n > MAX_SPECTRUM_N:
            raise ParameterError(f"spectrum needs n <= {MAX_SPECTRUM_N}, got {n}")
        geometry = _geometry(cfg, n)
        roi = _roi(cfg, GridField.zeros(n), geometry)
        full = MaskedProblem(operator=roi.operator, data=roi.data, mask=LineMask.full(geometry),
                             support=roi.support, known_zero=roi.known_zero)
        n_small = param_int(cfg, "n_small", 5)
        reports = {"full": spectrum_report(full), "roi": spectrum_report(roi)}

        lines = []
        summary: dict[str, Any] = {}
        for name, report in reports.items():
            summary[f"{name}_sigma_max"] = report.sigma_max
            summary[f"{name}_sigma_min"] = report.sigma_min
            summary[f"{name}_condition"] = report.condition_number
            smallest = report.singular_values[-n_small:][::-1]
            lines.extend(f"{name} sigma[{report.singular_values.size - 1 - i}]={value:.6e}"
                         for i, value in enumerate(smallest))
        if cfg.out is not None:
            write_key_values(cfg.out, summary)
            summary["path"] = str(cfg.out)
        return {"success": True, "n": n, "unknowns": int(roi.free.sum()), **summary, "lines": lines}
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_spectrum: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid spectrum request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_spectrum: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}
