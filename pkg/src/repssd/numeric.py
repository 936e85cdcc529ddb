"""
Numerical primitives: normal distribution functions, bracketing root
finding, adaptive quadrature and a seeded counter-based random source.

The random source is SplitMix64 used in counter mode: the ``i``-th 64-bit
word of a stream is ``mix64(key + (i + 1) * GOLDEN)`` where ``key`` is derived
from the user seed. Uniforms take the top 53 bits (offset by half an ulp so
they never hit 0 or 1) and standard normals come from Box-Muller on
consecutive uniform pairs. Because every draw is a pure function of
``(seed, index)`` there is no generator state to share. The compiled kernel
and the numpy fallback produce the same stream up to last-bit differences
between the C library and numpy implementations of log, sin and cos.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _spi
from scipy import optimize as _spo
from scipy import special as _sps

from ._backend import count_region_hits as _count_region_hits
from ._backend import standard_normals as _standard_normals
from .errors import BracketError, DomainError, IntegrationError

__all__ = [
    "Interval",
    "RootBracket",
    "norm_cdf",
    "norm_sf",
    "norm_pdf",
    "norm_quantile",
    "find_root",
    "integrate",
    "seed_key",
    "standard_normals",
    "mc_sample",
    "count_region_hits",
]

_MASK64 = (1 << 64) - 1
_SEED_SALT = 0xD1B54A32D192ED03


# -- normal distribution ----------------------------------------------------

def norm_cdf(x: float) -> float:
    """Standard normal CDF. Accurate to a few ulps over the whole real line."""
    if math.isnan(x):
        raise DomainError("norm_cdf of NaN")
    return float(_sps.ndtr(x))


def norm_sf(x: float) -> float:
    """Upper tail ``1 - norm_cdf(x)`` without cancellation."""
    if math.isnan(x):
        raise DomainError("norm_sf of NaN")
    return float(_sps.ndtr(-x))


def norm_pdf(x: float, mean: float = 0.0, sd: float = 1.0) -> float:
    z = (x - mean) / sd
    return math.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))


def norm_quantile(p: float) -> float:
    """Inverse of :func:`norm_cdf` on the open unit interval."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    return float(_sps.ndtri(p))


# -- intervals and brackets -------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lower, upper]``; either end may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise DomainError("interval bounds must not be NaN")
        if self.lower > self.upper:
            raise DomainError(f"empty interval [{self.lower}, {self.upper}]")

    def contains(self, x):
        return (x >= self.lower) & (x <= self.upper)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.f_lo * self.f_hi > 0:
            raise BracketError(
                f"no sign change on [{self.lo}, {self.hi}]: "
                f"f(lo)={self.f_lo:.6g}, f(hi)={self.f_hi:.6g}"
            )

    @classmethod
    def evaluate(cls, f: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        return cls(lo, hi, f(lo), f(hi))


def find_root(f: Callable[[float], float], bracket, tol: float = 1e-9,
              maxiter: int = 500) -> float:
    """Brent's method on a sign-changing bracket.

    Parameters
    ----------
    f : callable
        Continuous function of one real argument.
    bracket : RootBracket or (lo, hi)
        Interval with ``f(lo)`` and ``f(hi)`` of opposite sign (or one zero).
    tol : float
        Absolute tolerance on the argument.

    Raises
    ------
    BracketError
        If ``f`` does not change sign over the bracket.
    """
    if not isinstance(bracket, RootBracket):
        lo, hi = bracket
        bracket = RootBracket.evaluate(f, lo, hi)
    if bracket.f_lo == 0:
        return bracket.lo
    if bracket.f_hi == 0:
        return bracket.hi
    return float(_spo.brentq(f, bracket.lo, bracket.hi, xtol=tol,
                             rtol=4 * np.finfo(float).eps, maxiter=maxiter))


def integrate(f: Callable[[float], float], a: float, b: float,
              tol: float = 1e-9, limit: int = 200, points=None) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    Infinite endpoints are allowed. ``points`` are breakpoints inside
    ``(a, b)``; an integrand that is sharply peaked far from the origin on an
    infinite range must get breakpoints around the peak, otherwise the
    infinite-range rule can step over it. Raises :class:`IntegrationError`
    when the requested relative tolerance is not reached within ``limit``
    subdivisions.
    """
    if math.isnan(a) or math.isnan(b) or not a < b:
        raise DomainError(f"integration requires a < b, got a={a}, b={b}")
    cuts = sorted(float(p) for p in (points or ()) if a < p < b)
    edges = [a] + cuts + [b]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", _spi.IntegrationWarning)
        for lo, hi in zip(edges, edges[1:]):
            if lo == hi:
                continue
            try:
                value, _ = _spi.quad(f, lo, hi, epsabs=1e-14, epsrel=tol, limit=limit)
            except _spi.IntegrationWarning as exc:
                raise IntegrationError(str(exc).strip().splitlines()[0]) from exc
            total += value
    return float(total)


# -- random source ----------------------------------------------------------

def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def seed_key(seed: int) -> int:
    """Map an arbitrary integer seed to a 64-bit stream key."""
    return _mix64((int(seed) ^ _SEED_SALT) & _MASK64)


def standard_normals(n: int, seed: int, start: int = 0) -> np.ndarray:
    """Normals ``start, ..., start + n - 1`` of the stream for ``seed``."""
    return _standard_normals(seed_key(seed), int(start), int(n))


def mc_sample(mean: float, sd: float, n: int, seed: int) -> np.ndarray:
    """Reproducible sample of ``n`` draws from ``N(mean, sd**2)``."""
    if sd < 0:
        raise DomainError("sd must be nonnegative")
    if n < 1:
        raise DomainError("n must be at least 1")
    return mean + sd * standard_normals(n, seed)


def count_region_hits(mean: float, sd_theta: float, tau: float, se: float,
                      lowers, uppers, n: int, seed: int) -> int:
    """Number of simulated replication estimates that land in a region.

    Draw ``i`` uses normals ``3i, 3i+1, 3i+2``: the effect from
    ``N(mean, sd_theta**2)``, the study effect around it with sd ``tau``,
    and the estimate around that with sd ``se``.
    """
    lowers = np.ascontiguousarray(lowers, dtype=float)
    uppers = np.ascontiguousarray(uppers, dtype=float)
    return int(_count_region_hits(seed_key(seed), float(mean), float(sd_theta),
                                  float(tau), float(se), lowers, uppers, int(n)))
