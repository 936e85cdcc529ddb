"""
Multisite replication designs: ``m`` sites, each replicating the original
study, analysed jointly.

Site estimates share the effect drawn from the design prior, so their
predictive distribution is multivariate normal with covariance
``diag(sr_i**2 + tau2) + dp.variance * 1 1^T``.

Two joint analyses are supported for balanced designs (equal standard errors
and weights):

* two-trials rule on the pooled estimate, ``mean / se >= z_alpha`` with
  ``se**2 = (sr**2 + tau2) / m`` (random-effects pooling with ``tau2`` fixed
  at the design value);
* replication Bayes factor on the estimate vector: independent
  ``N(0, sr_i**2 + tau2)`` under the null against the compound-symmetric
  normal obtained by integrating the effect over ``N(estimate_o, se_o**2)``.

Both decisions depend on the data only through the mean of the site
estimates, so the success region lives on that axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError, UnsupportedDesignError
from .methods import Method, MethodConfig, SuccessRegion, pors
from .model import DEFAULT_UNIT_SD, DesignPrior, PredictiveDist, se_to_n
from .numeric import find_root, standard_normals
from .ssd import SSDResult, Status, default_bracket, ssd_generic

__all__ = [
    "MultisiteDesign",
    "CostModel",
    "CostPoint",
    "predictive_vector",
    "predictive_weighted_mean",
    "log_rep_bf_vector",
    "multisite_region",
    "pors_multisite",
    "pors_multisite_mc",
    "optimal_site_size",
    "ssd_multisite",
    "cost_curve",
    "optimal_m",
]

SUPPORTED = (Method.TWO_TRIALS, Method.REP_BF)


@dataclass(frozen=True)
class MultisiteDesign:
    """Standard errors of the ``m`` site estimates and their pooling weights."""

    ses: tuple
    weights: Optional[tuple] = None

    def __post_init__(self):
        ses = tuple(float(s) for s in self.ses)
        if not ses:
            raise DomainError("a design needs at least one site")
        if any(not s > 0 for s in ses):
            raise DomainError("site standard errors must be positive")
        weights = (tuple(1.0 for _ in ses) if self.weights is None
                   else tuple(float(w) for w in self.weights))
        if len(weights) != len(ses):
            raise DomainError("need one weight per site")
        if any(not w > 0 for w in weights):
            raise DomainError("weights must be positive")
        object.__setattr__(self, "ses", ses)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def balanced(cls, m: int, se: float) -> "MultisiteDesign":
        if m < 1:
            raise DomainError("m must be at least 1")
        return cls((se,) * m)

    @classmethod
    def from_sample_size(cls, m: int, n_per_site: float,
                         unit_sd: float = DEFAULT_UNIT_SD) -> "MultisiteDesign":
        return cls.balanced(m, unit_sd / math.sqrt(n_per_site))

    @property
    def m(self) -> int:
        return len(self.ses)

    @property
    def is_balanced(self) -> bool:
        return len(set(self.ses)) == 1 and len(set(self.weights)) == 1


@dataclass(frozen=True)
class CostModel:
    """Cost per additional site and per additional case."""

    cost_site: float
    cost_case: float = 1.0

    def __post_init__(self):
        if not (self.cost_site > 0 and self.cost_case > 0):
            raise DomainError("costs must be positive")

    def total(self, m: int, n_per_site: float) -> float:
        return m * (self.cost_case * n_per_site + self.cost_site)


@dataclass(frozen=True)
class CostPoint:
    m: int
    n_r: Optional[int]
    sr: Optional[float]
    total_cost: Optional[float]
    status: Status

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def total_n(self) -> Optional[int]:
        return None if self.n_r is None else self.m * self.n_r


def predictive_vector(dp: DesignPrior, design: MultisiteDesign):
    """Mean vector and covariance matrix of the site estimates."""
    m = design.m
    mean = np.full(m, dp.mean)
    cov = np.full((m, m), dp.variance)
    cov[np.diag_indices(m)] += np.square(design.ses) + dp.tau2
    return mean, cov


def predictive_weighted_mean(dp: DesignPrior, design: MultisiteDesign) -> PredictiveDist:
    """Predictive distribution of the weighted average of the site estimates."""
    w = np.asarray(design.weights)
    site_var = np.square(design.ses) + dp.tau2 + dp.variance
    cross = (w.sum() ** 2 - np.square(w).sum()) * dp.variance
    var = (np.square(w) @ site_var + cross) / w.sum() ** 2
    return PredictiveDist(dp.mean, math.sqrt(var))


def _require_balanced(cfg: MethodConfig, design: MultisiteDesign):
    if cfg.method not in SUPPORTED:
        raise UnsupportedDesignError(
            f"multisite analysis supports {[m.value for m in SUPPORTED]}, got {cfg.method.value}")
    if not design.is_balanced:
        raise UnsupportedDesignError("multisite success probability needs a balanced design")


def _log_mvn(x, mean, cov):
    m = cov.shape[0]
    sign, logdet = np.linalg.slogdet(cov)
    inv = np.linalg.inv(cov)
    d = x - mean
    quad = np.einsum("...i,ij,...j->...", d, inv, d)
    return -0.5 * (quad + logdet + m * math.log(2 * math.pi))


def log_rep_bf_vector(x, dp: DesignPrior, design: MultisiteDesign):
    """Log replication Bayes factor of site estimates ``x`` (shape ``(..., m)``)."""
    x = np.asarray(x, dtype=float)
    v = np.square(design.ses) + dp.tau2
    h0 = _log_mvn(x, np.zeros(design.m), np.diag(v))
    h1 = _log_mvn(x, np.full(design.m, dp.estimate), np.diag(v) + dp.se ** 2)
    return h0 - h1


def _bf_region(cfg: MethodConfig, dp: DesignPrior, design: MultisiteDesign) -> SuccessRegion:
    log_gamma = math.log(cfg.gamma)
    ones = np.ones(design.m)

    def h(xbar):
        return float(log_rep_bf_vector(xbar * ones, dp, design)) - log_gamma

    # h is a concave quadratic in the mean of the estimates; three points pin it down
    scale = math.sqrt(design.ses[0] ** 2 + dp.tau2 + dp.se ** 2) + abs(dp.estimate)
    hm, h0, hp = h(-scale), h(0.0), h(scale)
    curv = (hp + hm - 2.0 * h0) / (2.0 * scale * scale)
    slope = (hp - hm) / (2.0 * scale)
    if not curv < 0:
        raise RuntimeError("Bayes factor is not concave in the pooled estimate")
    vertex = -slope / (2.0 * curv)
    if h(vertex) <= 0:
        return SuccessRegion(((-math.inf, math.inf),), whole_line=True)

    def edge(direction):
        step = scale
        while h(vertex + direction * step) > 0:
            step *= 2.0
        a, b = sorted((vertex, vertex + direction * step))
        return find_root(h, (a, b), tol=1e-15 * max(1.0, abs(a), abs(b)))

    left, right = edge(-1.0), edge(1.0)
    if cfg.same_sign_only:
        return SuccessRegion(((-math.inf, left),) if dp.estimate < 0 else ((right, math.inf),))
    return SuccessRegion(((-math.inf, left), (right, math.inf)))


def multisite_region(cfg: MethodConfig, dp: DesignPrior, design: MultisiteDesign) -> SuccessRegion:
    """Success region on the axis of the pooled (mean) site estimate."""
    _require_balanced(cfg, design)
    if cfg.method is Method.TWO_TRIALS:
        se = math.sqrt((design.ses[0] ** 2 + dp.tau2) / design.m)
        return SuccessRegion(((cfg.z_alpha * se, math.inf),))
    return _bf_region(cfg, dp, design)


def pors_multisite(cfg: MethodConfig, dp: DesignPrior, design: MultisiteDesign) -> float:
    return pors(multisite_region(cfg, dp, design), predictive_weighted_mean(dp, design))


def pors_multisite_mc(cfg: MethodConfig, dp: DesignPrior, design: MultisiteDesign,
                      n: int = 10 ** 6, seed: int = 1, chunk: int = 1 << 17):
    """Simulation estimate of the multisite pors and its standard error.

    Simulates the full hierarchy (effect, site effects, site estimates) and
    applies the decision rule to each simulated vector directly.
    """
    _require_balanced(cfg, design)
    m = design.m
    width = 1 + 2 * m
    ses = np.asarray(design.ses)
    hits = 0
    for start in range(0, n, chunk):
        k = min(chunk, n - start)
        z = standard_normals(k * width, seed, start * width).reshape(k, width)
        theta = dp.mean + dp.sd * z[:, :1]
        site = theta + dp.tau * z[:, 1:1 + m]
        est = site + ses * z[:, 1 + m:]
        if cfg.method is Method.TWO_TRIALS:
            se = math.sqrt((ses[0] ** 2 + dp.tau2) / m)
            ok = est.mean(axis=1) / se >= cfg.z_alpha
        else:
            ok = log_rep_bf_vector(est, dp, design) <= math.log(cfg.gamma)
            if cfg.same_sign_only:
                ok &= np.sign(est.mean(axis=1)) == np.sign(dp.estimate)
        hits += int(ok.sum())
    p = hits / n
    p_se = min(max(p, 0.5 / n), 1 - 0.5 / n)
    return p, math.sqrt(p_se * (1 - p_se) / n)


def optimal_site_size(tau: float, unit_sd: float, cost: CostModel) -> float:
    """Per-site sample size minimising the pooled predictive variance at fixed cost.

    ``(unit_sd / tau) * sqrt(cost_site / cost_case)`` rounded to the nearest
    count (at least 1). Without heterogeneity the variance does not depend on
    the split, and ``math.inf`` is returned.
    """
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    if tau == 0:
        return math.inf
    n = unit_sd / tau * math.sqrt(cost.cost_site / cost.cost_case)
    return max(1, int(math.floor(n + 0.5)))


def ssd_multisite(cfg: MethodConfig, dp: DesignPrior, m: int, target: float = 0.8, *,
                  unit_sd: float = DEFAULT_UNIT_SD, rounding: str = "ceil",
                  bracket=None) -> SSDResult:
    """Per-site standard error and sample size for a balanced design with ``m`` sites."""
    if m < 1:
        raise DomainError("m must be at least 1")

    def fn(sr):
        return pors_multisite(cfg, dp, MultisiteDesign.balanced(m, sr))

    lo, hi = bracket if bracket is not None else default_bracket(dp.se)
    limit = fn(lo)
    return ssd_generic(None, dp, target, (lo, hi), limit=limit, unit_sd=unit_sd,
                       rounding=rounding, method=f"{cfg.label()} m={m}", pors_fn=fn)


def cost_curve(cfg: MethodConfig, dp: DesignPrior, target: float, cost: CostModel,
               m_range: Iterable[int], unit_sd: float = DEFAULT_UNIT_SD) -> list:
    """Total cost of the cheapest balanced design reaching ``target``, per ``m``.

    The per-site sample size is rounded up before costing.
    """
    points = []
    for m in m_range:
        res = ssd_multisite(cfg, dp, m, target, unit_sd=unit_sd, rounding="ceil")
        if res.feasible:
            n_r = se_to_n(res.sr_star, unit_sd, "ceil")
            points.append(CostPoint(m, n_r, res.sr_star, cost.total(m, n_r), res.status))
        else:
            points.append(CostPoint(m, None, None, None, res.status))
    return points


def optimal_m(points) -> Optional[CostPoint]:
    feasible = [p for p in points if p.feasible]
    if not feasible:
        return None
    return min(feasible, key=lambda p: (p.total_cost, p.m))
