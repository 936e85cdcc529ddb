"""
Study summaries, initial priors, design priors and predictive distributions
in the normal-normal hierarchical model.

Study estimates are modelled marginally, ``estimate | theta ~ N(theta, se**2 + tau**2)``,
with initial prior ``theta ~ N(prior_mean, prior_variance)``. Combining the
original study with the initial prior gives the design prior; integrating the
replication sampling model over it gives the predictive distribution of the
replication estimate.

The relative prior variance ``g = prior_variance / (se_o**2 + tau**2)`` is kept
as ``math.inf`` for a flat initial prior so that the flat-prior formulas are
exact rather than limits of large floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError
from .numeric import norm_quantile, norm_sf

__all__ = [
    "GroupSummary",
    "EffectEstimate",
    "InitialPrior",
    "DesignPrior",
    "PredictiveDist",
    "design_prior",
    "conditional_design_prior",
    "point_null_design_prior",
    "empirical_bayes_variance",
    "shrinkage_prior",
    "update_with_pilot",
    "tau_absolute",
    "tau_relative",
    "predictive",
    "smd_from_groups",
    "se_to_n",
    "n_to_se",
]

DEFAULT_UNIT_SD = 2.0


@dataclass(frozen=True)
class GroupSummary:
    """Two-group summary statistics of a continuous outcome."""

    mean1: float
    mean2: float
    sd1: float
    sd2: float
    n1: int
    n2: int

    def __post_init__(self):
        if not (self.sd1 > 0 and self.sd2 > 0):
            raise DomainError("group standard deviations must be positive")
        if self.n1 < 2 or self.n2 < 2:
            raise DomainError("each group needs at least two observations")


@dataclass(frozen=True)
class EffectEstimate:
    """Effect estimate with its standard error.

    ``n`` is the total sample size when known; ``groups`` keeps the raw
    two-group summary when the estimate was derived from one.
    """

    estimate: float
    se: float
    n: Optional[int] = None
    groups: Optional[GroupSummary] = field(default=None, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.estimate):
            raise DomainError(f"estimate must be finite, got {self.estimate!r}")
        if not (self.se > 0 and math.isfinite(self.se)):
            raise DomainError(f"standard error must be positive, got {self.se!r}")
        if self.n is not None and self.n < 1:
            raise DomainError("sample size must be at least 1")

    @property
    def z(self) -> float:
        return self.estimate / self.se

    @property
    def p_one_sided(self) -> float:
        """One-sided p-value for ``H0: theta = 0`` against ``theta > 0``."""
        return norm_sf(self.z)

    def reflected(self) -> "EffectEstimate":
        """The same study with the sign of the effect flipped."""
        return EffectEstimate(-self.estimate, self.se, self.n)


@dataclass(frozen=True)
class InitialPrior:
    """Normal initial prior for the effect, or the improper flat prior."""

    kind: str = "flat"
    mean: float = 0.0
    variance: float = math.inf

    def __post_init__(self):
        if self.kind not in ("flat", "normal"):
            raise DomainError(f"unknown prior kind {self.kind!r}")
        if self.kind == "flat" and self.variance != math.inf:
            raise DomainError("a flat prior has infinite variance")
        if self.kind == "normal" and not (0 <= self.variance < math.inf):
            raise DomainError("a normal prior needs a finite nonnegative variance")

    @classmethod
    def flat(cls) -> "InitialPrior":
        return cls()

    @classmethod
    def normal(cls, mean: float, variance: float) -> "InitialPrior":
        return cls("normal", float(mean), float(variance))

    @property
    def is_flat(self) -> bool:
        return self.kind == "flat"

    def describe(self) -> str:
        if self.is_flat:
            return "flat"
        return f"N(mean = {self.mean:g}, sd = {math.sqrt(self.variance):g})"


@dataclass(frozen=True)
class DesignPrior:
    """Posterior of the effect given the original study and initial prior.

    Attributes
    ----------
    mean, variance : float
        Moments of the normal design prior.
    tau2 : float
        Between-study heterogeneity variance.
    g : float
        Relative prior variance; ``math.inf`` for a flat initial prior.
    estimate, se : float
        Original effect estimate and its standard error.
    prior_mean : float
        Mean of the initial prior (irrelevant when ``g`` is infinite).
    """

    mean: float
    variance: float
    tau2: float
    g: float
    estimate: float
    se: float
    prior_mean: float = 0.0

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def tau(self) -> float:
        return math.sqrt(self.tau2)

    @property
    def shrinkage(self) -> float:
        """``1 / (1 + 1/g)``: the weight the original estimate keeps."""
        return _weight(self.g)

    @property
    def limit_variance(self) -> float:
        """Predictive variance left when the replication standard error is 0."""
        return self.tau2 + self.variance

    @property
    def original(self) -> EffectEstimate:
        return EffectEstimate(self.estimate, self.se)


@dataclass(frozen=True)
class PredictiveDist:
    mean: float
    sd: float

    @property
    def variance(self) -> float:
        return self.sd * self.sd


def _weight(g: float) -> float:
    if g == math.inf:
        return 1.0
    return g / (1.0 + g)


def design_prior(original: EffectEstimate, initial: InitialPrior | None = None,
                 tau2: float = 0.0) -> DesignPrior:
    """Design prior for the effect size.

    With relative prior variance ``g = sigma_theta**2 / (se_o**2 + tau2)`` the
    design prior is normal with mean ``estimate/(1 + 1/g) + mu/(1 + g)`` and
    variance ``(se_o**2 + tau2)/(1 + 1/g)``. A flat initial prior gives
    ``N(estimate, se_o**2 + tau2)``.

    Examples
    --------
    >>> dp = design_prior(EffectEstimate(0.205, 0.051), tau2=0.05**2)
    >>> round(dp.mean, 3), round(dp.sd, 3)
    (0.205, 0.071)
    """
    if initial is None:
        initial = InitialPrior.flat()
    if tau2 < 0 or math.isnan(tau2):
        raise DomainError("tau2 must be nonnegative")
    total = original.se ** 2 + tau2
    if initial.is_flat:
        g = math.inf
    else:
        g = initial.variance / total
    w = _weight(g)
    mean = w * original.estimate + (1.0 - w) * initial.mean
    return DesignPrior(mean=mean, variance=total * w, tau2=float(tau2), g=g,
                       estimate=original.estimate, se=original.se,
                       prior_mean=initial.mean)


def conditional_design_prior(original: EffectEstimate) -> DesignPrior:
    """Point mass at the original estimate with no heterogeneity.

    This is the limit ``g -> 0`` with the initial prior centred on the
    original estimate; it reproduces classical power calculations.
    """
    return design_prior(original, InitialPrior.normal(original.estimate, 0.0), 0.0)


def point_null_design_prior(original: EffectEstimate) -> DesignPrior:
    """Point mass at zero with no heterogeneity (type I error rate)."""
    return design_prior(original, InitialPrior.normal(0.0, 0.0), 0.0)


def empirical_bayes_variance(original: EffectEstimate, mu: float = 0.0,
                             tau2: float = 0.0) -> float:
    """``max{(estimate - mu)**2 - tau2 - se**2, 0}``."""
    return max((original.estimate - mu) ** 2 - tau2 - original.se ** 2, 0.0)


def shrinkage_prior(original: EffectEstimate, tau2: float = 0.0,
                    mu: float = 0.0) -> InitialPrior:
    """Normal initial prior at ``mu`` with empirical Bayes variance."""
    return InitialPrior.normal(mu, empirical_bayes_variance(original, mu, tau2))


def update_with_pilot(pilot: EffectEstimate,
                      initial: InitialPrior | None = None) -> InitialPrior:
    """Update an initial prior with the estimate of a pilot study.

    A flat prior becomes ``N(pilot.estimate, pilot.se**2)``; a normal prior is
    combined with the pilot likelihood by precision weighting.
    """
    if initial is None or initial.is_flat:
        return InitialPrior.normal(pilot.estimate, pilot.se ** 2)
    if initial.variance == 0:
        return initial
    prec = 1.0 / initial.variance + 1.0 / pilot.se ** 2
    mean = (initial.mean / initial.variance + pilot.estimate / pilot.se ** 2) / prec
    return InitialPrior.normal(mean, 1.0 / prec)


def tau_absolute(d: float, coverage: float = 0.95) -> float:
    """Heterogeneity sd such that ``coverage`` of study effects span ``d``."""
    if d < 0:
        raise DomainError("d must be nonnegative")
    return d / (2.0 * norm_quantile((1.0 + coverage) / 2.0))


def tau_relative(i2: float, sigma_o2: float) -> float:
    """Heterogeneity variance implied by a relative heterogeneity ``I^2``."""
    if not 0.0 <= i2 < 1.0:
        raise DomainError(f"I^2 must lie in [0, 1), got {i2!r}")
    if sigma_o2 <= 0:
        raise DomainError("sigma_o2 must be positive")
    if i2 == 0:
        return 0.0
    # this form is exact for I^2 = 0.4: 1/0.4 - 1 rounds to exactly 1.5
    return sigma_o2 / (1.0 / i2 - 1.0)


def predictive(dp: DesignPrior, sr: float) -> PredictiveDist:
    """Predictive distribution of a replication estimate with standard error ``sr``."""
    if sr < 0:
        raise DomainError("replication standard error must be nonnegative")
    return PredictiveDist(dp.mean, math.sqrt(sr * sr + dp.tau2 + dp.variance))


def smd_from_groups(groups: GroupSummary) -> EffectEstimate:
    """Standardized mean difference and its large-sample standard error."""
    n1, n2 = groups.n1, groups.n2
    df = n1 + n2 - 2
    if df <= 0:
        raise DomainError("need n1 + n2 > 2")
    pooled = ((n1 - 1) * groups.sd1 ** 2 + (n2 - 1) * groups.sd2 ** 2) / df
    est = (groups.mean1 - groups.mean2) / math.sqrt(pooled)
    var = (n1 + n2) / (n1 * n2) + est ** 2 / (2 * (n1 + n2))
    return EffectEstimate(est, math.sqrt(var), n1 + n2, groups)


def se_to_n(se: float, unit_sd: float = DEFAULT_UNIT_SD,
            rounding: str = "nearest") -> int:
    """Sample size giving standard error ``se`` when ``se = unit_sd/sqrt(n)``.

    ``rounding`` is ``"nearest"`` (default) or ``"ceil"`` for a conservative
    count.
    """
    if not se > 0:
        raise DomainError("standard error must be positive")
    if not unit_sd > 0:
        raise DomainError("unit standard deviation must be positive")
    n = (unit_sd / se) ** 2
    if rounding == "nearest":
        return max(1, int(math.floor(n + 0.5)))
    if rounding == "ceil":
        # guard against 1136.0000000001 style float noise
        return max(1, int(math.ceil(n - 1e-9)))
    raise DomainError(f"unknown rounding mode {rounding!r}")


def n_to_se(n: float, unit_sd: float = DEFAULT_UNIT_SD) -> float:
    if not n >= 1:
        raise DomainError("sample size must be at least 1")
    return unit_sd / math.sqrt(n)
