"""Exception hierarchy shared by every riesz-tomo module.

Command functions in :mod:`riesz_tomo.commands` catch these by class and map
them onto the CLI exit-code contract: validation-type errors exit 2,
:class:`NumericalFailureError` exits 3.
"""

from __future__ import annotations


class RieszTomoError(Exception):
    """Base class for all library errors."""


class ParameterError(RieszTomoError, ValueError):
    """An argument is outside its documented range."""


class DimensionError(RieszTomoError, ValueError):
    """Array shapes or dimensions do not match."""


class UnsupportedGeometryError(RieszTomoError):
    """The requested region or geometry is not handled by the operation."""


class DivergentKernelError(RieszTomoError):
    """The Riesz kernel |x|^-alpha is not locally integrable (alpha >= d)."""


class PreconditionError(RieszTomoError):
    """Input data violates an operation precondition."""


class DomainError(RieszTomoError, ValueError):
    """Point outside the domain of a map (e.g. Kelvin transform at 0)."""


class SearchRangeError(RieszTomoError):
    """A threshold search did not terminate inside its range."""


class NumericalFailureError(RieszTomoError):
    """An iterative method diverged or produced non-finite values."""


class LemmaHypothesisError(RieszTomoError):
    """A denominator of the polynomial-generation recursion vanishes.

    ``m`` is the recursion level and ``denominator`` the vanishing factor,
    written as a function of alpha.
    """

    def __init__(self, m: int, denominator: str, alpha):
        self.m = m
        self.denominator = denominator
        self.alpha = alpha
        super().__init__(
            f"denominator {denominator} vanishes at m={m} for alpha={alpha}"
        )
