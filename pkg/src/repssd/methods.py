"""
Success regions, probability of replication success and its limit.

Every analysis method maps a replication standard error ``sr`` to a success
region on the axis of the replication effect estimate. The probability of
replication success (pors) is the predictive mass of that region.

All regions assume a positive original estimate. For a negative original
estimate, reflect the study first (:meth:`EffectEstimate.reflected`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .errors import DomainError, InfeasibleOriginalError
from .model import (DesignPrior, EffectEstimate, InitialPrior, PredictiveDist,
                    design_prior, predictive)
from .numeric import (Interval, count_region_hits, integrate, norm_cdf,
                      norm_quantile)

__all__ = [
    "Method",
    "MethodConfig",
    "SuccessRegion",
    "PorsResult",
    "region_two_trials",
    "region_meta_analysis",
    "region_equivalence",
    "region_rep_bf",
    "region_skeptical_p",
    "success_region",
    "region_builder",
    "rep_bf",
    "pors",
    "pors_at",
    "pors_result",
    "pors_monte_carlo",
    "lim_pr",
    "pors_tau_marginal",
    "LIMIT_EPS",
]

# relative replication standard error at which limits without a closed form
# are evaluated: sr = se_o * LIMIT_EPS
LIMIT_EPS = 1e-6


class Method(str, enum.Enum):
    TWO_TRIALS = "two-trials"
    META_ANALYSIS = "meta-analysis"
    EQUIVALENCE = "equivalence"
    REP_BF = "replication-bf"
    SKEPTICAL_P = "skeptical-p"

    @classmethod
    def parse(cls, name: str) -> "Method":
        key = name.strip().lower().replace("_", "-")
        aliases = {
            "2tr": cls.TWO_TRIALS, "sig": cls.TWO_TRIALS, "twotrials": cls.TWO_TRIALS,
            "ma": cls.META_ANALYSIS, "meta": cls.META_ANALYSIS, "metaanalysis": cls.META_ANALYSIS,
            "e": cls.EQUIVALENCE, "equ": cls.EQUIVALENCE,
            "bfr": cls.REP_BF, "repbf": cls.REP_BF, "repbayesfactor": cls.REP_BF, "bf": cls.REP_BF,
            "ps": cls.SKEPTICAL_P, "pscep": cls.SKEPTICAL_P, "skepticalp": cls.SKEPTICAL_P,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown method {name!r}") from None


# conventional levels for the Labels example; used by the CLI when a level is
# not given explicitly
CONVENTIONAL = {
    Method.TWO_TRIALS: dict(alpha=0.025),
    Method.META_ANALYSIS: dict(alpha=0.025 ** 2),
    Method.EQUIVALENCE: dict(alpha=0.1, margin=0.2),
    Method.REP_BF: dict(gamma=0.1),
    Method.SKEPTICAL_P: dict(alpha=0.062),
}


@dataclass(frozen=True)
class MethodConfig:
    """Analysis method and its thresholds.

    ``alpha`` is the one-sided level for the two-trials rule, meta-analysis
    and skeptical p-value, and the confidence level ``1 - alpha`` of the
    equivalence interval. ``gamma`` is the Bayes factor threshold and
    ``margin`` the equivalence margin.
    """

    method: Method
    alpha: float = 0.025
    gamma: float = 0.1
    margin: float = 0.2
    same_sign_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not self.margin > 0:
            raise DomainError("margin must be positive")

    @classmethod
    def conventional(cls, method, **overrides) -> "MethodConfig":
        method = Method.parse(method) if isinstance(method, str) else Method(method)
        kwargs = dict(CONVENTIONAL[method])
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(method, **kwargs)

    @property
    def z_alpha(self) -> float:
        return -norm_quantile(self.alpha)

    def label(self) -> str:
        m = self.method
        if m is Method.REP_BF:
            return f"{m.value}(gamma={self.gamma:g})"
        if m is Method.EQUIVALENCE:
            return f"{m.value}(alpha={self.alpha:g}, margin={self.margin:g})"
        return f"{m.value}(alpha={self.alpha:g})"


@dataclass(frozen=True)
class SuccessRegion:
    """Finite union of sorted, disjoint closed intervals.

    An empty region means replication success is impossible. ``whole_line``
    flags the Bayes factor case where every estimate is a success.
    """

    intervals: tuple = ()
    whole_line: bool = field(default=False, compare=False)

    def __post_init__(self):
        ivs = tuple(iv if isinstance(iv, Interval) else Interval(*iv)
                    for iv in self.intervals)
        for a, b in zip(ivs, ivs[1:]):
            if not a.upper < b.lower:
                raise DomainError("success region intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lowers(self):
        return [iv.lower for iv in self.intervals]

    @property
    def uppers(self):
        return [iv.upper for iv in self.intervals]

    def contains(self, x):
        out = False
        for iv in self.intervals:
            out = out | iv.contains(x)
        return out

    def as_pairs(self):
        return [(iv.lower, iv.upper) for iv in self.intervals]


@dataclass(frozen=True)
class PorsResult:
    probability: float
    region: SuccessRegion
    limit: float


# -- regions ------------------------------------------------------------------

def _check_sr(sr: float):
    if not sr > 0:
        raise DomainError(f"replication standard error must be positive, got {sr!r}")


def region_two_trials(cfg: MethodConfig, sr: float) -> SuccessRegion:
    """Replication one-sided p-value at most ``alpha``: ``[z_alpha*sr, inf)``."""
    _check_sr(sr)
    return SuccessRegion(((cfg.z_alpha * sr, math.inf),))


def region_meta_analysis(cfg: MethodConfig, original: EffectEstimate,
                         sr: float) -> SuccessRegion:
    """Fixed-effect meta-analytic one-sided p-value at most ``alpha``."""
    _check_sr(sr)
    ratio = sr * sr / original.se ** 2
    lower = sr * cfg.z_alpha * math.sqrt(1.0 + ratio) - original.estimate * ratio
    return SuccessRegion(((lower, math.inf),))


def region_equivalence(cfg: MethodConfig, original: EffectEstimate,
                       sr: float) -> SuccessRegion:
    """``1 - alpha`` interval for the effect difference inside ``[-margin, margin]``.

    Empty when ``margin < z_{alpha/2} * sqrt(se_o**2 + sr**2)``.
    """
    _check_sr(sr)
    half = -norm_quantile(cfg.alpha / 2.0) * math.hypot(original.se, sr)
    if cfg.margin < half:
        return SuccessRegion(())
    return SuccessRegion(((original.estimate - cfg.margin + half,
                           original.estimate + cfg.margin - half),))


def rep_bf(x, original: EffectEstimate, sr: float):
    """Replication Bayes factor of an estimate ``x`` with standard error ``sr``.

    Ratio of the marginal densities under ``theta = 0`` and under the
    original-study posterior ``N(estimate, se_o**2)``. Works on arrays.
    """
    x = np.asarray(x, dtype=float)
    v0 = sr * sr
    v1 = original.se ** 2 + v0
    log_bf = (-0.5 * x * x / v0 + 0.5 * (x - original.estimate) ** 2 / v1
              + 0.5 * math.log(v1 / v0))
    out = np.exp(log_bf)
    return float(out) if out.ndim == 0 else out


def region_rep_bf(cfg: MethodConfig, original: EffectEstimate,
                  sr: float) -> SuccessRegion:
    """Replication Bayes factor at most ``gamma`` (no heterogeneity).

    Two-sided by default, including estimates of the opposite sign; set
    ``same_sign_only`` to keep only the component on the side of the
    original estimate.
    """
    _check_sr(sr)
    so2 = original.se ** 2
    sr2 = sr * sr
    a = sr2 * (1.0 + sr2 / so2) * (original.estimate ** 2 / so2
                                    - 2.0 * math.log(cfg.gamma)
                                    + math.log1p(so2 / sr2))
    if a < 0:
        return SuccessRegion(((-math.inf, math.inf),), whole_line=True)
    root = math.sqrt(a)
    shift = original.estimate * sr2 / so2
    left = Interval(-math.inf, -root - shift)
    right = Interval(root - shift, math.inf)
    if cfg.same_sign_only:
        return SuccessRegion((left,) if original.estimate < 0 else (right,))
    if left.upper >= right.lower:
        return SuccessRegion(((-math.inf, math.inf),), whole_line=True)
    return SuccessRegion((left, right))


def _skeptical_variance_ratio(cfg: MethodConfig, original: EffectEstimate) -> float:
    za2 = cfg.z_alpha ** 2
    zo2 = original.z ** 2
    if not zo2 > za2:
        raise InfeasibleOriginalError(
            f"skeptical p-value needs z_o^2 > z_alpha^2 (z_o={original.z:.4g}, "
            f"z_alpha={cfg.z_alpha:.4g})")
    return zo2 / za2 - 1.0


def region_skeptical_p(cfg: MethodConfig, original: EffectEstimate,
                       sr: float) -> SuccessRegion:
    """Skeptical p-value at most ``alpha``."""
    _check_sr(sr)
    k = _skeptical_variance_ratio(cfg, original)
    lower = cfg.z_alpha * math.sqrt(sr * sr + original.se ** 2 / k)
    return SuccessRegion(((lower, math.inf),))


def success_region(cfg: MethodConfig, original: EffectEstimate, sr: float) -> SuccessRegion:
    m = cfg.method
    if m is Method.TWO_TRIALS:
        return region_two_trials(cfg, sr)
    if m is Method.META_ANALYSIS:
        return region_meta_analysis(cfg, original, sr)
    if m is Method.EQUIVALENCE:
        return region_equivalence(cfg, original, sr)
    if m is Method.REP_BF:
        return region_rep_bf(cfg, original, sr)
    if m is Method.SKEPTICAL_P:
        return region_skeptical_p(cfg, original, sr)
    raise DomainError(f"unsupported method {m!r}")


def region_builder(cfg: MethodConfig, original: EffectEstimate) -> Callable[[float], SuccessRegion]:
    """``sr -> SuccessRegion`` for a fixed method and original study."""
    return partial(success_region, cfg, original)


# -- probability of replication success -----------------------------------------

def pors(region: SuccessRegion, pred: PredictiveDist) -> float:
    """Predictive probability of the success region."""
    total = 0.0
    for iv in region.intervals:
        # difference of upper tails is more accurate when both ends sit right of the mean
        lo = (iv.lower - pred.mean) / pred.sd
        hi = (iv.upper - pred.mean) / pred.sd
        if lo > 0:
            total += norm_cdf(-lo) - norm_cdf(-hi)
        else:
            total += norm_cdf(hi) - norm_cdf(lo)
    return min(max(total, 0.0), 1.0)


def pors_at(builder: Callable[[float], SuccessRegion], dp: DesignPrior, sr: float) -> float:
    return pors(builder(sr), predictive(dp, sr))


def pors_result(cfg: MethodConfig, dp: DesignPrior, sr: float) -> PorsResult:
    region = success_region(cfg, dp.original, sr)
    return PorsResult(pors(region, predictive(dp, sr)), region, lim_pr(cfg, dp))


def pors_monte_carlo(builder: Callable[[float], SuccessRegion], dp: DesignPrior,
                     sr: float, n: int = 10 ** 6, seed: int = 1):
    """Simulation estimate of pors and its binomial standard error.

    Draws the effect from the design prior, the replication's study-specific
    effect around it, and the replication estimate around that, then counts
    estimates inside the region. When no draw (or every draw) succeeds the
    standard error uses ``p = 0.5/n`` in place of 0.
    """
    if n < 1000:
        raise DomainError("use at least 1000 draws")
    region = builder(sr)
    if region.is_empty:
        hits = 0
    else:
        hits = count_region_hits(dp.mean, dp.sd, dp.tau, sr,
                                 region.lowers, region.uppers, n, seed)
    p = hits / n
    p_se = min(max(p, 0.5 / n), 1.0 - 0.5 / n)
    return p, math.sqrt(p_se * (1.0 - p_se) / n)


def lim_pr(cfg: MethodConfig, dp: DesignPrior) -> float:
    """Supremum of pors as the replication standard error goes to zero.

    Two-trials rule and meta-analysis share the closed-form limit; the
    equivalence test and skeptical p-value use their closed-form limiting
    regions; the replication Bayes factor is evaluated at
    ``sr = se_o * LIMIT_EPS``.
    """
    m = cfg.method
    spread = math.sqrt(dp.limit_variance)
    if spread == 0:
        # point-mass predictive in the limit: success iff the mean is inside
        # the limiting region
        return _limit_point_mass(cfg, dp)
    if m in (Method.TWO_TRIALS, Method.META_ANALYSIS):
        return norm_cdf(dp.mean / spread)
    if m is Method.EQUIVALENCE:
        half = -norm_quantile(cfg.alpha / 2.0) * dp.se
        if cfg.margin < half:
            return 0.0
        hi = dp.estimate + cfg.margin - half
        lo = dp.estimate - cfg.margin + half
        return norm_cdf((hi - dp.mean) / spread) - norm_cdf((lo - dp.mean) / spread)
    if m is Method.SKEPTICAL_P:
        k = _skeptical_variance_ratio(cfg, dp.original)
        bound = cfg.z_alpha * dp.se / math.sqrt(k)
        return norm_cdf((dp.mean - bound) / spread)
    return pors_at(region_builder(cfg, dp.original), dp, dp.se * LIMIT_EPS)


def _limit_point_mass(cfg, dp):
    sr = dp.se * LIMIT_EPS
    if cfg.method in (Method.TWO_TRIALS, Method.META_ANALYSIS):
        # both regions shrink to (0, inf) from the right
        return 1.0 if dp.mean > 0 else 0.0
    region = success_region(cfg, dp.original, sr)
    return 1.0 if region.contains(dp.mean) else 0.0


def pors_tau_marginal(cfg: MethodConfig, original: EffectEstimate,
                      initial: InitialPrior | None, tau_prior, sr: float,
                      tol: float = 1e-9) -> float:
    """pors averaged over a prior on the heterogeneity standard deviation.

    Parameters
    ----------
    tau_prior : float or frozen distribution
        A float is a point mass at that value of ``tau``. Otherwise any object
        with ``pdf`` and ``support()`` (e.g. ``scipy.stats.halfnorm(scale=0.05)``)
        describing a density on ``tau >= 0``.
    """
    region = success_region(cfg, original, sr)

    def conditional(tau):
        dp = design_prior(original, initial, tau * tau)
        return pors(region, predictive(dp, sr))

    if isinstance(tau_prior, (int, float)):
        return conditional(float(tau_prior))
    lo, hi = tau_prior.support()
    lo = max(float(lo), 0.0)
    return integrate(lambda t: conditional(t) * float(tau_prior.pdf(t)), lo, float(hi), tol)

