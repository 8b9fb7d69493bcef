"""Exact algebra on A_i = x_i |x|^-2, B = |x|^-2 and C = |x|^-alpha.

Every expression here carries exactly one factor C, so a monomial is an index
multiset (one A_i per entry) and a power of B. Derivatives follow the closed
rules

    d_j A_i = delta_ij B - 2 A_i A_j,   d_j B = -2 A_j B,   d_i C = -alpha A_i C.

:func:`expand_D` rewrites D_I = prod_{i in I} A_i C as a combination of
derivatives d^beta K_alpha of the kernel K_alpha = C, following the
induction

    D_{I,i} = 1/(2-2m-alpha) [ d_i D_I - 1/(d-m-alpha) sum_{j: I_j = i} sum_k d_k D_{I[j->k]} ]

with m = |I| + 1. Coefficients are rational functions of alpha (a sympy
symbol) or exact rationals once alpha is specialized.
"""

from __future__ import annotations

import functools
import logging
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, NamedTuple, Union

import numpy as np
import sympy

from .exceptions import DomainError, LemmaHypothesisError, ParameterError, PreconditionError

logger = logging.getLogger(__name__)

ALPHA = sympy.Symbol("alpha")
MAX_KERNEL_ORDER = 24

AlphaLike = Union[sympy.Expr, int, float, str, Fraction, None]


class Monomial(NamedTuple):
    """prod A_i (over ``a_powers``) * B^b_power * C, indices 1-based and sorted."""

    a_powers: tuple[int, ...]
    b_power: int

    @classmethod
    def of(cls, indices: Iterable[int], b_power: int = 0) -> "Monomial":
        return cls(tuple(sorted(indices)), b_power)

    @property
    def degree(self) -> int:
        """Homogeneity in 1/|x|, not counting C."""
        return len(self.a_powers) + 2 * self.b_power

    def exact_value(self, x: tuple[sympy.Rational, ...]) -> sympy.Rational:
        """Value at a rational point with the factor C removed."""
        r2 = sum(xi ** 2 for xi in x)
        num = sympy.Integer(1)
        for i in self.a_powers:
            num *= x[i - 1]
        return num / r2 ** (len(self.a_powers) + self.b_power)


Key = Union[Monomial, tuple[int, ...]]


@dataclass(frozen=True, eq=False)
class SymbolicExpansion:
    """Sparse linear combination over monomials or derivatives d^beta K_alpha."""

    basis: Literal["monomial", "derivative"]
    d: int
    alpha: sympy.Expr
    terms: Mapping[Key, sympy.Expr] = field(default_factory=dict)

    def __post_init__(self):
        simplify = sympy.expand if self.basis == "monomial" else sympy.cancel
        cleaned = {}
        for key, coeff in self.terms.items():
            value = simplify(sympy.sympify(coeff))
            if value != 0:
                cleaned[key] = value
        object.__setattr__(self, "terms", dict(sorted(cleaned.items())))

    def items(self):
        return self.terms.items()

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, key: Key) -> sympy.Expr:
        return self.terms.get(key, sympy.Integer(0))

    @property
    def is_symbolic(self) -> bool:
        return bool(self.alpha.free_symbols)

    @property
    def max_order(self) -> int:
        if self.basis == "derivative":
            return max((sum(beta) for beta in self.terms), default=0)
        return max((m.degree for m in self.terms), default=0)

    def _combine(self, other: "SymbolicExpansion", sign: int) -> "SymbolicExpansion":
        if (other.basis, other.d) != (self.basis, self.d) or sympy.simplify(other.alpha - self.alpha) != 0:
            raise ParameterError("cannot combine expansions with different basis, d or alpha")
        acc = defaultdict(lambda: sympy.Integer(0), self.terms)
        for key, coeff in other.items():
            acc[key] += sign * coeff
        return SymbolicExpansion(self.basis, self.d, self.alpha, acc)

    def __add__(self, other: "SymbolicExpansion") -> "SymbolicExpansion":
        return self._combine(other, 1)

    def __sub__(self, other: "SymbolicExpansion") -> "SymbolicExpansion":
        return self._combine(other, -1)

    def scaled(self, factor) -> "SymbolicExpansion":
        return SymbolicExpansion(self.basis, self.d, self.alpha,
                                 {k: factor * c for k, c in self.items()})


def coerce_alpha(alpha: AlphaLike) -> sympy.Expr:
    """Symbolic alpha for None, otherwise an exact rational."""
    if alpha is None:
        return ALPHA
    if isinstance(alpha, sympy.Basic):
        return alpha
    if isinstance(alpha, float):
        frac = Fraction(alpha).limit_denominator(10 ** 6)
        return sympy.Rational(frac.numerator, frac.denominator)
    if isinstance(alpha, Fraction):
        return sympy.Rational(alpha.numerator, alpha.denominator)
    try:
        return sympy.Rational(alpha)
    except (TypeError, ValueError) as e:
        raise ParameterError(f"alpha must be rational, got {alpha!r}") from e


def _check_d(d: int) -> None:
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")


# ============================================================================
# Monomial basis
# ============================================================================

def differentiate(expr: SymbolicExpansion, j: int) -> SymbolicExpansion:
    """d_j of a monomial-basis expansion (j is 1-based)."""
    if expr.basis != "monomial":
        raise ParameterError("differentiate works on monomial-basis expansions")
    if not 1 <= j <= expr.d:
        raise ParameterError(f"index {j} outside 1..{expr.d}")
    acc = defaultdict(lambda: sympy.Integer(0))
    for mono, c in expr.items():
        a, b = mono
        for pos, i in enumerate(a):
            if i == j:
                acc[Monomial(a[:pos] + a[pos + 1:], b + 1)] += c
        acc[Monomial.of(a + (j,), b)] += (-2 * len(a) - 2 * b - expr.alpha) * c
    return SymbolicExpansion("monomial", expr.d, expr.alpha, acc)


def kernel_expansion(alpha: AlphaLike = None, d: int = 2) -> SymbolicExpansion:
    """K_alpha = C as a one-term expansion."""
    return SymbolicExpansion("monomial", d, coerce_alpha(alpha), {Monomial((), 0): sympy.Integer(1)})


@functools.lru_cache(maxsize=4096)
def _kernel_derivative(beta: tuple[int, ...], alpha: sympy.Expr, d: int) -> SymbolicExpansion:
    if not any(beta):
        return kernel_expansion(alpha, d)
    k = max(i for i, b in enumerate(beta) if b)
    previous = beta[:k] + (beta[k] - 1,) + beta[k + 1:]
    return differentiate(_kernel_derivative(previous, alpha, d), k + 1)


def kernel_derivative(beta: tuple[int, ...], alpha: AlphaLike = None, d: int | None = None) -> SymbolicExpansion:
    """Monomial expansion of d^beta K_alpha."""
    beta = tuple(int(b) for b in beta)
    d = len(beta) if d is None else d
    _check_d(d)
    if len(beta) != d or any(b < 0 for b in beta):
        raise ParameterError(f"beta must be {d} nonnegative integers, got {beta}")
    if sum(beta) > MAX_KERNEL_ORDER:
        raise ParameterError(f"|beta| = {sum(beta)} exceeds {MAX_KERNEL_ORDER}")
    return _kernel_derivative(beta, coerce_alpha(alpha), d)


# ============================================================================
# Derivative basis
# ============================================================================

def rejected_alphas(d: int, degree: int) -> frozenset[sympy.Integer]:
    """Alpha values where some denominator of the degree-``degree`` recursion vanishes."""
    _check_d(d)
    first = {sympy.Integer(2 - 2 * m) for m in range(1, degree + 1)}
    second = {sympy.Integer(d - m) for m in range(2, degree + 1)}
    return frozenset(first | second)


def _check_denominators(d: int, degree: int, alpha: sympy.Expr) -> None:
    if alpha.free_symbols:
        return
    for m in range(1, degree + 1):
        if 2 - 2 * m - alpha == 0:
            raise LemmaHypothesisError(m, f"2-2m-alpha = {2 - 2 * m}-alpha", alpha)
        if m >= 2 and d - m - alpha == 0:
            raise LemmaHypothesisError(m, f"d-m-alpha = {d - m}-alpha", alpha)


def check_hypothesis(alpha: AlphaLike, d: int, degree: int) -> sympy.Expr:
    """Coerce alpha and reject it if the degree-``degree`` recursion would divide by zero."""
    _check_d(d)
    if degree < 0:
        raise ParameterError(f"degree must be >= 0, got {degree}")
    alpha = coerce_alpha(alpha)
    _check_denominators(d, degree, alpha)
    return alpha


def _shift(beta: tuple[int, ...], k: int) -> tuple[int, ...]:
    return beta[: k - 1] + (beta[k - 1] + 1,) + beta[k:]


@functools.lru_cache(maxsize=4096)
def _expand_sorted(indices: tuple[int, ...], d: int, alpha: sympy.Expr) -> dict[tuple[int, ...], sympy.Expr]:
    if not indices:
        return {(0,) * d: sympy.Integer(1)}
    head, last = indices[:-1], indices[-1]
    m = len(indices)
    acc = defaultdict(lambda: sympy.Integer(0))
    for beta, c in _expand_sorted(head, d, alpha).items():
        acc[_shift(beta, last)] += c
    repeats = head.count(last)
    if repeats:
        pos = head.index(last)
        factor = sympy.Integer(repeats) / (d - m - alpha)
        for k in range(1, d + 1):
            swapped = tuple(sorted(head[:pos] + (k,) + head[pos + 1:]))
            for beta, c in _expand_sorted(swapped, d, alpha).items():
                acc[_shift(beta, k)] -= factor * c
    scale = 1 / (2 - 2 * m - alpha)
    result = {}
    for beta, c in acc.items():
        value = sympy.cancel(scale * c)
        if value != 0:
            result[beta] = value
    return result


def expand_D(indices: Iterable[int], alpha: AlphaLike = None, d: int = 2) -> SymbolicExpansion:
    """D_indices = prod A_i C as sum_beta c_beta d^beta K_alpha."""
    _check_d(d)
    indices = tuple(sorted(int(i) for i in indices))
    if any(not 1 <= i <= d for i in indices):
        raise ParameterError(f"indices must lie in 1..{d}, got {indices}")
    alpha = coerce_alpha(alpha)
    _check_denominators(d, len(indices), alpha)
    return SymbolicExpansion("derivative", d, alpha, _expand_sorted(indices, d, alpha))


def coordinate_symbols(d: int) -> tuple[sympy.Symbol, ...]:
    return sympy.symbols(f"x1:{d + 1}")


def polynomial_terms(p, d: int) -> dict[tuple[int, ...], sympy.Expr]:
    """Exponent -> coefficient map of a polynomial given as a mapping, Poly or expression."""
    if isinstance(p, Mapping):
        terms = {tuple(int(g) for g in gamma): sympy.sympify(c) for gamma, c in p.items()}
    else:
        poly = p if isinstance(p, sympy.Poly) else sympy.Poly(sympy.sympify(p), *coordinate_symbols(d))
        terms = dict(poly.terms())
    for gamma in terms:
        if len(gamma) != d or any(g < 0 for g in gamma):
            raise ParameterError(f"exponent {gamma} is not a {d}-variable monomial")
    return terms


def exponent_indices(gamma: tuple[int, ...]) -> tuple[int, ...]:
    """x^gamma -> index multiset (1-based) of the matching A-product."""
    return tuple(i + 1 for i, g in enumerate(gamma) for _ in range(g))


def expand_polynomial_times_kernel(p, alpha: AlphaLike = None, d: int = 2) -> SymbolicExpansion:
    """p(K(x)) K_alpha(x) as derivatives of K_alpha; x^gamma maps to D_gamma."""
    alpha = coerce_alpha(alpha)
    result = SymbolicExpansion("derivative", d, alpha, {})
    for gamma, coeff in polynomial_terms(p, d).items():
        result = result + expand_D(exponent_indices(gamma), alpha, d).scaled(coeff)
    return result


def specialize(expansion: SymbolicExpansion, alpha_value: AlphaLike) -> SymbolicExpansion:
    """Substitute a rational alpha into a symbolic expansion."""
    if not expansion.is_symbolic:
        raise ParameterError("expansion already has a concrete alpha")
    value = coerce_alpha(alpha_value)
    if expansion.basis == "derivative":
        _check_denominators(expansion.d, expansion.max_order, value)
    terms = {k: c.subs(ALPHA, value) for k, c in expansion.items()}
    return SymbolicExpansion(expansion.basis, expansion.d, value, terms)


def homogeneity_degree(expansion: SymbolicExpansion) -> sympy.Expr:
    """Common degree -(n + alpha) in |x| of every monomial in a derivative-basis expansion."""
    if expansion.basis != "derivative":
        raise ParameterError("homogeneity_degree works on derivative-basis expansions")
    degrees = set()
    for beta in expansion.terms:
        for mono, _ in kernel_derivative(beta, expansion.alpha, expansion.d).items():
            degrees.add(mono.degree)
    if len(degrees) > 1:
        raise PreconditionError(f"expansion mixes homogeneity degrees {sorted(degrees)}")
    n = degrees.pop() if degrees else 0
    return -(n + expansion.alpha)


# ============================================================================
# Exact evaluation oracle
# ============================================================================

@dataclass(frozen=True)
class OracleReport:
    points: int
    mismatches: tuple[tuple[sympy.Rational, ...], ...] = ()

    @property
    def passed(self) -> bool:
        return not self.mismatches


def rational_points(d: int, count: int, seed: int = 0) -> list[tuple[sympy.Rational, ...]]:
    """Nonzero points with small rational coordinates."""
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < count:
        nums = rng.integers(-9, 10, size=d)
        dens = rng.integers(1, 10, size=d)
        if not nums.any():
            continue
        points.append(tuple(sympy.Rational(int(a), int(b)) for a, b in zip(nums, dens)))
    return points


@functools.lru_cache(maxsize=65536)
def _derivative_value(beta: tuple[int, ...], alpha: sympy.Expr, d: int,
                      x: tuple[sympy.Rational, ...]) -> sympy.Rational:
    inner = kernel_derivative(beta, alpha, d)
    return sum((c * m.exact_value(x) for m, c in inner.items()), sympy.Integer(0))


def evaluate_exact(expansion: SymbolicExpansion, x: tuple[sympy.Rational, ...]) -> sympy.Rational:
    """Value divided by C at a rational point (alpha must be concrete)."""
    if expansion.is_symbolic:
        raise ParameterError("exact evaluation needs a concrete alpha; call specialize first")
    total = sympy.Integer(0)
    for key, coeff in expansion.items():
        if expansion.basis == "monomial":
            total += coeff * key.exact_value(x)
        else:
            total += coeff * _derivative_value(key, expansion.alpha, expansion.d, x)
    return total


def verify_expansion(expansion: SymbolicExpansion, p, n_points: int = 20, seed: int = 0) -> OracleReport:
    """Compare sum c_beta d^beta K_alpha with p(K(x)) K_alpha at rational points, exactly."""
    d = expansion.d
    target = {}
    for gamma, coeff in polynomial_terms(p, d).items():
        mono = Monomial.of(exponent_indices(gamma))
        target[mono] = target.get(mono, 0) + coeff
    target_expansion = SymbolicExpansion("monomial", d, expansion.alpha, target)
    mismatches = []
    for x in rational_points(d, n_points, seed):
        if evaluate_exact(expansion, x) != evaluate_exact(target_expansion, x):
            mismatches.append(x)
    if mismatches:
        logger.warning(f"Expansion failed the exact oracle at {len(mismatches)} of {n_points} points")
    return OracleReport(points=n_points, mismatches=tuple(mismatches))


def format_expansion(expansion: SymbolicExpansion) -> str:
    """One ``beta=(b1,...,bd) coeff=p(alpha)/q(alpha)`` line per term."""
    lines = []
    for key, coeff in expansion.items():
        num, den = sympy.fraction(sympy.cancel(coeff))
        coeff_text = f"{sympy.sstr(sympy.expand(num))}/{sympy.sstr(sympy.expand(den))}"
        if expansion.basis == "derivative":
            lines.append(f"beta=({','.join(str(b) for b in key)}) coeff={coeff_text}")
        else:
            lines.append(f"a=({','.join(str(i) for i in key.a_powers)}) b={key.b_power} coeff={coeff_text}")
    return "\n".join(lines)


# ============================================================================
# Kelvin transform
# ============================================================================

def kelvin(x) -> np.ndarray:
    """x / |x|^2 (its own inverse)."""
    x = np.asarray(x, dtype=np.float64)
    r2 = float(np.dot(x, x))
    if r2 == 0.0:
        raise DomainError("the Kelvin transform is undefined at the origin")
    return x / r2


def kelvin_jacobian_abs(x, d: int | None = None) -> float:
    """|det DK(x)| = |x|^(-2d)."""
    x = np.asarray(x, dtype=np.float64)
    d = x.size if d is None else d
    if x.size != d:
        raise ParameterError(f"point has {x.size} coordinates, expected {d}")
    r2 = float(np.dot(x, x))
    if r2 == 0.0:
        raise DomainError("the Kelvin transform is undefined at the origin")
    return r2 ** (-d)
