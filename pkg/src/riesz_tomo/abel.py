"""Angular Fourier modes, generalized Abel transforms and the A_k^n tables.

For f(r, phi) = sum_k e^{ik phi} a_k(r) the sinogram splits the same way,
``Xf(s, theta) = sum_k e^{ik theta} (A_|k| a_k)(s)``, with

    A_k g(z) = 2 int_z^1 T_k(z/y) [1 - (z/y)^2]^(-1/2) g(y) dy.

Taylor coefficients of the kernel at z = 0 give the integers
A_k^n = n! [u^n] T_k(u) (1 - u^2)^(-1/2). Tables are exact (Python ints and
fractions); only the transforms use floating point.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import legendre

from . import config
from .exceptions import DimensionError, NumericalFailureError, ParameterError, SearchRangeError
from .grid import GridField, sample_bilinear

logger = logging.getLogger(__name__)

MAX_K = 64
MAX_ORACLE_N = 200


def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1."""
    return math.prod(range(n, 0, -2)) if n > 0 else 1


# ============================================================================
# Exact tables
# ============================================================================

@dataclass(frozen=True)
class ChebTable:
    """t[k][l] = coefficient of x^l in T_k, 0 <= l <= k <= k_max."""

    k_max: int
    rows: tuple[tuple[int, ...], ...]

    def t(self, k: int, l: int) -> int:
        if l < 0 or l > k:
            return 0
        return self.rows[k][l]


@functools.lru_cache(maxsize=8)
def chebyshev_coeffs(k_max: int) -> ChebTable:
    """Integer coefficients from T_{k+1} = 2x T_k - T_{k-1}."""
    if not 0 <= k_max <= MAX_K:
        raise ParameterError(f"k_max must lie in [0, {MAX_K}], got {k_max}")
    rows = [[1], [0, 1]]
    for k in range(1, k_max):
        nxt = [0] * (k + 2)
        for l, c in enumerate(rows[k]):
            nxt[l + 1] += 2 * c
        for l, c in enumerate(rows[k - 1]):
            nxt[l] -= c
        rows.append(nxt)
    return ChebTable(k_max=k_max, rows=tuple(tuple(r) for r in rows[: k_max + 1]))


def a0(n: int) -> int:
    """A_0^n = (n-1)!!^2 for even n, 0 for odd n."""
    return double_factorial(n - 1) ** 2 if n % 2 == 0 else 0


def abel_coefficient(k: int, n: int, cheb: ChebTable | None = None) -> int:
    """A_k^n = sum_l C(n, l) l! t_k^l A_0^(n-l)."""
    cheb = chebyshev_coeffs(k) if cheb is None else cheb
    return sum(math.comb(n, l) * math.factorial(l) * cheb.t(k, l) * a0(n - l)
               for l in range(min(n, k) + 1))


def abel_coefficient_closed_form(k: int, n: int, cheb: ChebTable | None = None) -> Fraction:
    """Even/odd closed forms (valid for n >= k with n = k mod 2)."""
    if n < k or (n - k) % 2:
        raise ParameterError(f"closed form needs n >= k and matching parity, got k={k}, n={n}")
    cheb = chebyshev_coeffs(k) if cheb is None else cheb
    df = double_factorial
    total = Fraction(0)
    if n % 2 == 0:
        prefactor = Fraction(math.factorial(n) * df(n - 1), df(n))
        for m in range(k // 2 + 1):
            t = cheb.t(k, 2 * m)
            ratio = Fraction(df(n - 2 * m - 1) * df(n), df(n - 2 * m) * df(n - 1))
            total += t * ratio
    else:
        prefactor = Fraction(math.factorial(n) * df(n - 2), df(n - 1))
        for m in range((k - 1) // 2 + 1):
            t = cheb.t(k, 2 * m + 1)
            ratio = Fraction(df(n - 2 * m - 2) * df(n - 1), df(n - 2 * m - 1) * df(n - 2))
            total += t * ratio
    return prefactor * total


def abel_coefficients_oracle(k: int, n: int) -> Fraction:
    """n! times the u^n Taylor coefficient of T_k(u) (1 - u^2)^(-1/2)."""
    if not 0 <= k <= MAX_K or not 0 <= n <= MAX_ORACLE_N:
        raise ParameterError(f"oracle needs k <= {MAX_K} and n <= {MAX_ORACLE_N}, got k={k}, n={n}")
    cheb = chebyshev_coeffs(k)
    # (1 - u^2)^(-1/2) = sum_m (2m-1)!!/(2m)!! u^(2m)
    series = [Fraction(0)] * (n + 1)
    for j in range(0, n + 1, 2):
        series[j] = Fraction(double_factorial(j - 1), double_factorial(j))
    coeff = sum((cheb.t(k, l) * series[n - l] for l in range(min(n, k) + 1)), Fraction(0))
    return math.factorial(n) * coeff


@dataclass(frozen=True)
class AbelTable:
    """A[k][n] for k <= k_max, n <= n_max, with thresholds N[k] (None if not reached)."""

    k_max: int
    n_max: int
    A: tuple[tuple[int, ...], ...]
    N: tuple[int | None, ...]

    def dump(self) -> str:
        """``k n A_k^n`` lines."""
        return "\n".join(f"{k} {n} {value}" for k, row in enumerate(self.A) for n, value in enumerate(row))


def _threshold_from_row(k: int, row: tuple[int, ...]) -> int:
    n_max = len(row) - 1
    candidates = [n for n in range(k % 2, n_max + 1, 2)]
    if not candidates or row[candidates[-1]] <= 0:
        raise SearchRangeError(f"A_{k}^n is not positive at n = {n_max}; raise n_max")
    threshold = candidates[-1]
    for n in reversed(candidates):
        if row[n] <= 0:
            break
        threshold = n
    return threshold


def positivity_threshold(k: int, n_max: int) -> int:
    """Least N with A_k^n > 0 for every n in [N, n_max] of the parity of k."""
    if n_max < 4 * k:
        raise ParameterError(f"n_max must be >= 4k = {4 * k}, got {n_max}")
    cheb = chebyshev_coeffs(k)
    row = tuple(abel_coefficient(k, n, cheb) for n in range(n_max + 1))
    return _threshold_from_row(k, row)


def abel_coefficients(k_max: int, n_max: int) -> AbelTable:
    """Exact table by the binomial sum, cross-checked against the closed forms."""
    if n_max < 0:
        raise ParameterError(f"n_max must be >= 0, got {n_max}")
    cheb = chebyshev_coeffs(k_max)
    rows, thresholds = [], []
    for k in range(k_max + 1):
        row = tuple(abel_coefficient(k, n, cheb) for n in range(n_max + 1))
        for n in range(k, n_max + 1, 2):
            if abel_coefficient_closed_form(k, n, cheb) != row[n]:
                raise NumericalFailureError(f"closed form disagrees with the binomial sum at k={k}, n={n}")
        rows.append(row)
        try:
            thresholds.append(_threshold_from_row(k, row))
        except SearchRangeError:
            thresholds.append(None)
    table = AbelTable(k_max=k_max, n_max=n_max, A=tuple(rows), N=tuple(thresholds))
    logger.info(f"Abel table k<={k_max}, n<={n_max}: thresholds {list(table.N)}")
    return table


# ============================================================================
# Radial profiles and transforms
# ============================================================================

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of a_k on ``radii``; values outside [r_min, r_max] are zeroed."""

    k: int
    radii: np.ndarray
    values: np.ndarray
    r_min: float = 0.0
    r_max: float = 1.0

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=np.float64)
        values = np.asarray(self.values)
        if radii.ndim != 1 or values.shape != radii.shape:
            raise DimensionError("radii and values must be 1D arrays of equal length")
        if np.any(np.diff(radii) <= 0):
            raise ParameterError("radii must be strictly increasing")
        if not 0 <= self.r_min <= self.r_max:
            raise ParameterError(f"support bounds need 0 <= r_min <= r_max, got {self.r_min}, {self.r_max}")
        values = np.where((radii >= self.r_min) & (radii <= self.r_max), values, 0)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, k: int, fn, r_min: float, r_max: float, samples: int = 2001) -> "RadialProfile":
        radii = np.linspace(0.0, 1.0, samples)
        return cls(k=k, radii=radii, values=fn(radii), r_min=r_min, r_max=r_max)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        """Piecewise-linear interpolation, zero outside the support."""
        r = np.asarray(r, dtype=np.float64)
        inside = (r >= self.r_min) & (r <= self.r_max)
        if np.iscomplexobj(self.values):
            out = (np.interp(r, self.radii, self.values.real, left=0.0, right=0.0)
                   + 1j * np.interp(r, self.radii, self.values.imag, left=0.0, right=0.0))
        else:
            out = np.interp(r, self.radii, self.values, left=0.0, right=0.0)
        return np.where(inside, out, 0)


def ring_samples(r: float, h: float, k_max: int) -> int:
    """Samples per ring: 8 ceil(pi r / h), never below 4 k_max + 4."""
    return max(8 * math.ceil(math.pi * r / h), 4 * k_max + 4)


def angular_decompose(f: GridField, k_max: int, radii: np.ndarray | None = None,
                      threads: int | None = None) -> list[RadialProfile]:
    """a_k(r) for k = -k_max..k_max from circle samples of a 2D field."""
    if f.dim != 2:
        raise DimensionError("angular_decompose takes 2D fields")
    if k_max < 0:
        raise ParameterError(f"k_max must be >= 0, got {k_max}")
    radii = (np.arange(f.n // 2) + 0.5) * f.h if radii is None else np.asarray(radii, dtype=np.float64)

    def ring(i: int) -> np.ndarray:
        r = radii[i]
        m = ring_samples(r, f.h, k_max)
        phi = 2.0 * np.pi * np.arange(m) / m
        coeffs = np.fft.fft(sample_bilinear(f, r * np.cos(phi), r * np.sin(phi))) / m
        return coeffs[np.arange(-k_max, k_max + 1) % m]

    workers = config.get_threads(threads)
    if workers == 1:
        table = np.array([ring(i) for i in range(radii.size)])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = np.array(list(pool.map(ring, range(radii.size))))
    r_max = float(radii[-1])
    return [RadialProfile(k=k, radii=radii, values=table[:, k + k_max], r_min=0.0, r_max=r_max)
            for k in range(-k_max, k_max + 1)]


def _chebyshev_t(k: int, x: np.ndarray) -> np.ndarray:
    return np.cos(k * np.arccos(np.clip(x, -1.0, 1.0)))


def abel_apply(k: int, g: RadialProfile, z: np.ndarray | None = None,
               panels: int = 64, nodes: int = 16) -> RadialProfile:
    """A_k g at offsets z, after the substitution w = sqrt(y^2 - z^2).

    The w-integral 2 int T_k(z/y) g(y) dw runs over y in [max(z, r_min), r_max]
    with composite Gauss-Legendre quadrature.
    """
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    z = g.radii if z is None else np.asarray(z, dtype=np.float64)
    x_ref, w_ref = legendre.leggauss(nodes)
    out = np.zeros(z.shape, dtype=np.result_type(g.values, np.float64))
    for idx, zi in enumerate(z):
        if zi >= g.r_max:
            continue
        lo = math.sqrt(max(g.r_min ** 2 - zi ** 2, 0.0))
        hi = math.sqrt(g.r_max ** 2 - zi ** 2)
        if hi <= lo:
            continue
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        w = (edges[:-1] + half)[:, None] + half[:, None] * x_ref[None, :]
        weights = half[:, None] * w_ref[None, :]
        y = np.sqrt(zi ** 2 + w ** 2)
        integrand = _chebyshev_t(k, zi / y) * g(y)
        out[idx] = 2.0 * np.sum(integrand * weights)
    return RadialProfile(k=k, radii=z, values=out, r_min=0.0, r_max=g.r_max)


def sinogram_angular_modes(values: np.ndarray, offsets: np.ndarray, k_max: int) -> list[RadialProfile]:
    """theta-Fourier modes k = 0..k_max of a sinogram (rows = directions) for s >= 0."""
    n_theta = values.shape[0]
    if k_max >= n_theta // 2:
        raise ParameterError(f"k_max must be below n_theta/2 = {n_theta // 2}")
    keep = offsets >= 0
    modes = np.fft.fft(values, axis=0) / n_theta
    radii = offsets[keep]
    return [RadialProfile(k=k, radii=radii, values=modes[k, keep], r_min=0.0, r_max=float(radii[-1]))
            for k in range(k_max + 1)]
