"""
Sample size determination: the largest replication standard error (smallest
sample size) whose probability of replication success reaches a target.

The two-trials rule and the skeptical p-value have closed-form solutions.
Every other method goes through :func:`ssd_generic`, which scans a log grid
of standard errors and refines the crossing with Brent's method; the scan
makes the non-monotone meta-analysis curve safe to solve.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InfeasibleOriginalError
from .methods import (Method, MethodConfig, SuccessRegion, lim_pr, pors,
                      pors_at, region_builder, success_region)
from .model import (DEFAULT_UNIT_SD, DesignPrior, EffectEstimate,
                    point_null_design_prior, predictive, se_to_n)
from .numeric import find_root, norm_quantile

__all__ = [
    "Status",
    "SSDResult",
    "MultiSSDResult",
    "Constraints",
    "ssd",
    "ssd_two_trials",
    "ssd_skeptical_p",
    "ssd_generic",
    "ssd_all",
    "type_one_error",
    "check_constraints",
    "default_bracket",
]

GRID_SIZE = 200
# rounding slack so that a rule calibrated at exactly max_t1e is not flagged
T1E_SLACK = 1e-12
# bracket on sr relative to the original standard error: c from 1e-4 to 1e8
BRACKET = (1e-4, 1e2)


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    ALWAYS_SATISFIED = "always-satisfied"


@dataclass(frozen=True)
class Constraints:
    max_n: Optional[int] = None
    max_t1e: Optional[float] = None

    def __post_init__(self):
        if self.max_n is not None and self.max_n < 1:
            raise DomainError("max_n must be at least 1")
        if self.max_t1e is not None and not 0.0 <= self.max_t1e <= 1.0:
            raise DomainError("max_t1e must be a probability")


@dataclass(frozen=True)
class SSDResult:
    """Outcome of a sample size calculation.

    ``sr_star``, ``c`` and ``n_r`` are ``None`` unless the status is
    feasible. ``c = se_o**2 / sr_star**2`` is the replication-to-original
    sample size ratio.
    """

    status: Status
    target: float
    limit: float
    se_o: float
    sr_star: Optional[float] = None
    c: Optional[float] = None
    n_r: Optional[int] = None
    achieved_pors: Optional[float] = None
    unit_sd: float = DEFAULT_UNIT_SD
    method: str = ""
    solver: str = ""
    note: str = ""
    t1e: Optional[float] = None
    violations: tuple = ()

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["status"] = self.status.value
        d["feasible"] = self.feasible
        d["violations"] = list(self.violations)
        return d


def default_bracket(se_o: float):
    return se_o * BRACKET[0], se_o * BRACKET[1]


def _result(status, dp, target, limit, sr=None, pors_value=None, *, unit_sd,
            rounding, method, solver, note=""):
    if sr is None:
        return SSDResult(status, target, limit, dp.se, unit_sd=unit_sd,
                         method=method, solver=solver, note=note,
                         achieved_pors=pors_value)
    return SSDResult(status, target, limit, dp.se, sr_star=sr,
                     c=dp.se ** 2 / sr ** 2, n_r=se_to_n(sr, unit_sd, rounding),
                     achieved_pors=pors_value, unit_sd=unit_sd, method=method,
                     solver=solver, note=note)


def ssd_generic(builder: Callable[[float], SuccessRegion], dp: DesignPrior,
                target: float, bracket=None, *, limit: float = math.nan,
                grid_size: int = GRID_SIZE, unit_sd: float = DEFAULT_UNIT_SD,
                rounding: str = "nearest", method: str = "custom",
                pors_fn: Optional[Callable[[float], float]] = None) -> SSDResult:
    """Numerical sample size for any success-region builder.

    Returns the largest ``sr`` in the bracket whose pors reaches ``target``.
    When every grid point reaches the target the status is
    ``ALWAYS_SATISFIED``; when none does it is ``INFEASIBLE``.

    Parameters
    ----------
    builder : callable
        Maps a replication standard error to a :class:`SuccessRegion`.
    bracket : (lo, hi), optional
        Search range for ``sr``; defaults to ``se_o * (1e-4, 1e2)``.
    pors_fn : callable, optional
        Overrides ``sr -> pors`` (used by the multisite solver).
    """
    _check_target(target)
    lo, hi = bracket if bracket is not None else default_bracket(dp.se)
    if pors_fn is None:
        def pors_fn(s):
            return pors_at(builder, dp, s)
    kw = dict(unit_sd=unit_sd, rounding=rounding, method=method, solver="root-finding")

    grid = np.geomspace(lo, hi, grid_size)
    values = np.array([pors_fn(s) for s in grid])
    ok = values >= target
    if ok.all():
        return _result(Status.ALWAYS_SATISFIED, dp, target, limit,
                       pors_value=float(values.min()),
                       note=f"pors >= {target:g} for every sr in [{lo:.3g}, {hi:.3g}]", **kw)
    if not ok.any():
        return _result(Status.INFEASIBLE, dp, target, limit,
                       pors_value=float(values.max()),
                       note=f"pors < {target:g} for every sr in [{lo:.3g}, {hi:.3g}]", **kw)
    i = int(np.flatnonzero(ok).max())
    if i == grid_size - 1:
        return _result(Status.FEASIBLE, dp, target, limit, float(hi), float(values[-1]),
                       note="target reached at the upper end of the sr bracket", **kw)
    sr = find_root(lambda s: pors_fn(s) - target, (grid[i], grid[i + 1]),
                   tol=1e-13 * grid[i + 1])
    return _result(Status.FEASIBLE, dp, target, limit, sr, pors_fn(sr), **kw)


def _check_target(target):
    if not 0.0 < target < 1.0:
        raise DomainError(f"target probability must lie in (0, 1), got {target!r}")


def ssd_two_trials(dp: DesignPrior, cfg: MethodConfig, target: float, *,
                   unit_sd: float = DEFAULT_UNIT_SD,
                   rounding: str = "nearest") -> SSDResult:
    """Closed-form sample size for the two-trials rule.

    Solves ``Phi((mu - z_alpha*sr) / sqrt(sr**2 + V)) = target`` with ``V`` the
    limiting predictive variance; requires ``alpha < 1 - target`` and falls
    back to :func:`ssd_generic` otherwise.
    """
    _check_target(target)
    builder = region_builder(cfg, dp.original)
    limit = lim_pr(cfg, dp)
    kw = dict(unit_sd=unit_sd, rounding=rounding, method=cfg.label())
    za, zb = cfg.z_alpha, norm_quantile(target)
    if not za > zb:
        return ssd_generic(builder, dp, target, limit=limit, **kw)
    if target >= limit:
        return _result(Status.INFEASIBLE, dp, target, limit, solver="closed-form",
                       note=f"target {target:g} not below the limit {limit:.6g}", **kw)
    den = za * za - zb * zb
    mu = dp.mean
    sr = (mu * za - zb * math.sqrt(den * dp.limit_variance + mu * mu)) / den
    if not sr > 0:
        return _result(Status.INFEASIBLE, dp, target, limit, solver="closed-form",
                       note="no positive standard error solves the equation", **kw)
    return _result(Status.FEASIBLE, dp, target, limit, sr, pors_at(builder, dp, sr),
                   solver="closed-form", **kw)


def ssd_skeptical_p(dp: DesignPrior, cfg: MethodConfig, target: float, *,
                    unit_sd: float = DEFAULT_UNIT_SD,
                    rounding: str = "nearest") -> SSDResult:
    """Closed-form sample size for the skeptical p-value.

    With ``k = (z_o/z_alpha)**2 - 1`` the region bound is
    ``z_alpha * y`` for ``y = sqrt(sr**2 + se_o**2/k)``, and ``y`` solves a
    quadratic; ``sr* = sqrt(y**2 - se_o**2/k)``.
    """
    _check_target(target)
    kw = dict(unit_sd=unit_sd, rounding=rounding, method=cfg.label())
    try:
        limit = lim_pr(cfg, dp)
    except InfeasibleOriginalError as exc:
        return _result(Status.INFEASIBLE, dp, target, math.nan, solver="closed-form",
                       note=str(exc), **kw)
    builder = region_builder(cfg, dp.original)
    za, zb = cfg.z_alpha, norm_quantile(target)
    if not za > zb:
        return ssd_generic(builder, dp, target, limit=limit, **kw)
    if target >= limit:
        return _result(Status.INFEASIBLE, dp, target, limit, solver="closed-form",
                       note=f"target {target:g} not below the limit {limit:.6g}", **kw)
    k = dp.original.z ** 2 / za ** 2 - 1.0
    skep = dp.se ** 2 / k
    den = za * za - zb * zb
    mu = dp.mean
    disc = mu * mu + den * (dp.limit_variance - skep)
    if disc < 0:
        return _result(Status.INFEASIBLE, dp, target, limit, solver="closed-form",
                       note="negative discriminant", **kw)
    y = (za * mu - zb * math.sqrt(disc)) / den
    if not (y > 0 and y * y > skep):
        return _result(Status.INFEASIBLE, dp, target, limit, solver="closed-form",
                       note="no positive standard error solves the equation", **kw)
    sr = math.sqrt(y * y - skep)
    return _result(Status.FEASIBLE, dp, target, limit, sr, pors_at(builder, dp, sr),
                   solver="closed-form", **kw)


def ssd(dp: DesignPrior, cfg: MethodConfig, target: float = 0.8, *,
        unit_sd: float = DEFAULT_UNIT_SD, rounding: str = "nearest",
        bracket=None) -> SSDResult:
    """Sample size for one analysis method, closed form where available."""
    if cfg.method is Method.TWO_TRIALS and bracket is None:
        return ssd_two_trials(dp, cfg, target, unit_sd=unit_sd, rounding=rounding)
    if cfg.method is Method.SKEPTICAL_P and bracket is None:
        return ssd_skeptical_p(dp, cfg, target, unit_sd=unit_sd, rounding=rounding)
    kw = dict(unit_sd=unit_sd, rounding=rounding, method=cfg.label())
    try:
        limit = lim_pr(cfg, dp)
    except InfeasibleOriginalError as exc:
        return _result(Status.INFEASIBLE, dp, target, math.nan, solver="root-finding",
                       note=str(exc), **kw)
    res = ssd_generic(region_builder(cfg, dp.original), dp, target, bracket,
                      limit=limit, **kw)
    if (res.status is Status.INFEASIBLE and cfg.method is Method.EQUIVALENCE
            and cfg.margin < -norm_quantile(cfg.alpha / 2) * dp.se):
        res = dataclasses.replace(res, note="success impossible for any n: margin "
                                  "below z_{alpha/2} * se_o")
    return res


@dataclass(frozen=True)
class MultiSSDResult:
    """Per-method results and the sample size satisfying all of them."""

    results: tuple
    status: Status
    sr_star: Optional[float] = None
    c: Optional[float] = None
    n_r: Optional[int] = None
    binding: Optional[str] = None


def ssd_all(dp: DesignPrior, cfgs: Sequence[MethodConfig], target: float = 0.8, *,
            unit_sd: float = DEFAULT_UNIT_SD, rounding: str = "nearest") -> MultiSSDResult:
    """Smallest sample size reaching ``target`` under every method at once.

    Methods that are always satisfied impose no requirement; a single
    infeasible method makes the joint requirement infeasible.
    """
    results = tuple(ssd(dp, cfg, target, unit_sd=unit_sd, rounding=rounding)
                    for cfg in cfgs)
    if any(r.status is Status.INFEASIBLE for r in results):
        return MultiSSDResult(results, Status.INFEASIBLE)
    feasible = [r for r in results if r.feasible]
    if not feasible:
        return MultiSSDResult(results, Status.ALWAYS_SATISFIED)
    best = min(feasible, key=lambda r: r.sr_star)
    return MultiSSDResult(results, Status.FEASIBLE, best.sr_star, best.c, best.n_r,
                          best.method)


def type_one_error(cfg: MethodConfig, original: EffectEstimate, sr: float) -> float:
    """pors when the effect is exactly zero and there is no heterogeneity."""
    region = success_region(cfg, original, sr)
    return pors(region, predictive(point_null_design_prior(original), sr))


def check_constraints(result: SSDResult, constraints: Constraints,
                      cfg: MethodConfig, original: EffectEstimate) -> SSDResult:
    """Annotate a result with the type I error at ``sr*`` and any violations.

    ``sr_star`` is never changed.
    """
    if not result.feasible:
        return result
    t1e = type_one_error(cfg, original, result.sr_star)
    violations = []
    if constraints.max_n is not None and result.n_r > constraints.max_n:
        violations.append(f"n_r = {result.n_r} exceeds max_n = {constraints.max_n}")
    if constraints.max_t1e is not None and t1e > constraints.max_t1e + T1E_SLACK:
        violations.append(f"type I error {t1e:.4g} exceeds max_t1e = {constraints.max_t1e:g}")
    return dataclasses.replace(result, t1e=t1e, violations=tuple(violations))
