"""Exact-arithmetic commands: kernel-derivative expansions and Abel coefficient tables."""

import itertools
import logging
import math
from pathlib import Path
from typing import Any

import sympy
from pydantic import ValidationError

from ..abel import MAX_ORACLE_N, abel_coefficients, abel_coefficients_oracle
from ..cli import EXIT_NUMERICAL, EXIT_UNEXPECTED, EXIT_VALIDATION, registry
from ..exceptions import LemmaHypothesisError, NumericalFailureError, RieszTomoError
from ..schemas import RunConfig
from ..symkernel import (
    check_hypothesis,
    coordinate_symbols,
    expand_polynomial_times_kernel,
    format_expansion,
    verify_expansion,
)
from .params import param_bool, param_int, param_str

logger = logging.getLogger(__name__)


def monomial_exponents(d: int, degree: int) -> list[tuple[int, ...]]:
    """All exponents gamma with |gamma| <= degree, by degree then lexicographically (descending)."""
    exponents = [g for g in itertools.product(range(degree + 1), repeat=d) if sum(g) <= degree]
    return sorted(exponents, key=lambda g: (sum(g), tuple(-e for e in g)))


def _label(gamma: tuple[int, ...]) -> str:
    xs = coordinate_symbols(len(gamma))
    return sympy.sstr(math.prod((x ** g for x, g in zip(xs, gamma)), start=sympy.Integer(1)))


@registry.command(
    "lemma-verify",
    params={
        "d": "Dimension (default 2)",
        "alpha": "Kernel order as an exact rational, e.g. 1 or 5/2 (default 1)",
        "degree": "Check every monomial of degree <= this (default 6)",
        "points": "Rational sample points per monomial (default 20)",
    },
)
def cmd_lemma_verify(cfg: RunConfig) -> dict[str, Any]:
    """Expand x^gamma K_alpha in derivatives of K_alpha and check each expansion exactly."""
    try:
        d = param_int(cfg, "d", 2)
        degree = param_int(cfg, "degree", 6)
        points = param_int(cfg, "points", 20)
        alpha = check_hypothesis(param_str(cfg, "alpha", "1"), d, degree)

        lines, dumps, failures = [], [], 0
        for gamma in monomial_exponents(d, degree):
            p = {gamma: 1}
            expansion = expand_polynomial_times_kernel(p, alpha, d)
            report = verify_expansion(expansion, p, n_points=points, seed=cfg.seed)
            status = "PASS" if report.passed else "FAIL"
            failures += not report.passed
            lines.append(f"{status} {_label(gamma)} terms={len(expansion)}")
            dumps.append(f"# {_label(gamma)}\n{format_expansion(expansion)}")

        if cfg.out is not None:
            Path(cfg.out).write_text("\n".join(dumps) + "\n")
        logger.info(f"lemma-verify d={d} alpha={alpha}: {len(lines) - failures}/{len(lines)} passed")
        if failures:
            return {
                "success": False,
                "error": f"{failures} of {len(lines)} expansions failed the exact check",
                "exit_code": EXIT_NUMERICAL,
                "lines": lines,
            }
        return {"success": True, "d": d, "alpha": str(alpha), "monomials": len(lines), "lines": lines}
    except LemmaHypothesisError as e:
        logger.error(f"Kernel order outside the admissible set: {e}")
        return {
            "success": False,
            "error": f"alpha={e.alpha} violates the lemma hypothesis: denominator {e.denominator} vanishes",
            "exit_code": EXIT_VALIDATION,
        }
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid lemma-verify request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_lemma_verify: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}


@registry.command(
    "abel-tables",
    params={
        "k_max": "Largest angular order (default 8)",
        "n_max": "Largest derivative order (default 40)",
        "verify": "Compare every entry with the Taylor-series oracle (default true)",
    },
)
def cmd_abel_tables(cfg: RunConfig) -> dict[str, Any]:
    """Exact A_k^n table with positivity thresholds."""
    try:
        k_max = param_int(cfg, "k_max", 8)
        n_max = param_int(cfg, "n_max", 40)
        table = abel_coefficients(k_max, n_max)

        checked = 0
        if param_bool(cfg, "verify", True):
            for k in range(k_max + 1):
                for n in range(min(n_max, MAX_ORACLE_N) + 1):
                    if abel_coefficients_oracle(k, n) != table.A[k][n]:
                        raise NumericalFailureError(f"table entry A_{k}^{n} disagrees with the series oracle")
                    checked += 1

        if cfg.out is not None:
            Path(cfg.out).write_text(table.dump() + "\n")
        lines = [f"N {k} {'none' if t is None else t}" for k, t in enumerate(table.N)]
        return {"success": True, "k_max": k_max, "n_max": n_max, "oracle_checked": checked, "lines": lines}
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in cmd_abel_tables: {e}")
        return {"success": False, "error": f"Numerical failure: {str(e)}", "exit_code": EXIT_NUMERICAL}
    except (RieszTomoError, ValidationError, OSError) as e:
        logger.error(f"Invalid abel-tables request: {e}")
        return {"success": False, "error": f"Invalid input: {str(e)}", "exit_code": EXIT_VALIDATION}
    except Exception as e:
        logger.error(f"Unexpected error in cmd_abel_tables: {e}", exc_info=True)
        return {"success": False, "error": f"Unexpected error: {str(e)}", "exit_code": EXIT_UNEXPECTED}
