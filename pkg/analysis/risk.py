"""
Asymptotic distributional bias (ADB) and quadratic risk (ADQR) of the
closed-form estimators under local alternatives beta_n = delta / sqrt(n),
plus the pairwise dominance comparisons built on them.

Conventions
-----------
* Δ² = delta' C delta / sigma², the noncentrality of the test statistic's
  limit. With C = I_p this gives delta'delta = sigma² Δ², which is how the
  Δ²-terms below are written.
* ADB is reported as the scalar b with ADB = b · delta.
* Loss is unweighted quadratic (W = I_p).

Every shrinkage rule considered here has the form beta_tilde · g(L) with L
the test statistic. For such rules

    E[beta_tilde g(L)]          = delta · E[g(chi2_{p+2}(Δ²))]
    E[beta_tilde'beta_tilde g²] = sigma² {tr C^-1 · E[g²(chi2_{p+2})] + Δ² E[g²(chi2_{p+4})]}

so ADQR = sigma² {tr C^-1 E[g²_{p+2}] + Δ² (E[g²_{p+4}] - 2 E[g_{p+2}] + 1)}.
The PTE and Stein risks are evaluated in their familiar closed forms, the
positive-rule risk as the Stein risk minus its negative-factor region, and
the improved-pretest risk from the general identity.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from analysis.distributions import (
    DEFAULT_CONTROL,
    SeriesControl,
    central_quantile,
    inv_moment,
    noncentral_cdf,
    trunc_inv_moment,
)
from environment.data import EstimatorId
from utils.errors import DomainError, RequiresP3
from utils.linalg import as_matrix, as_vector, spd_inverse

logger = logging.getLogger(__name__)

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class RiskContext:
    """Parameters shared by every analytic risk formula."""
    p: int
    tr_c_inv: float
    delta2: float
    sigma2: float = 1.0
    alpha: float = 0.05
    ctl: SeriesControl = DEFAULT_CONTROL

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise DomainError(f"p must be a positive integer, got {self.p}")
        for name in ("tr_c_inv", "delta2", "sigma2", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.tr_c_inv <= 0:
            raise DomainError(f"tr C^-1 must be > 0, got {self.tr_c_inv}")
        if self.delta2 < 0:
            raise DomainError(f"Δ² must be >= 0, got {self.delta2}")
        if self.sigma2 <= 0:
            raise DomainError(f"sigma² must be > 0, got {self.sigma2}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")

    @classmethod
    def identity(cls, p: int, delta2: float, sigma2: float = 1.0, alpha: float = 0.05):
        """Context for C = I_p, where tr C^-1 = p."""
        return cls(p=p, tr_c_inv=float(p), delta2=delta2, sigma2=sigma2, alpha=alpha)

    def with_delta2(self, delta2: float):
        return RiskContext(self.p, self.tr_c_inv, delta2, self.sigma2, self.alpha, self.ctl)

    @property
    def critical_value(self) -> float:
        return central_quantile(self.alpha, self.p)


@dataclass(frozen=True)
class RiskReport:
    estimator_id: EstimatorId
    adb_factor: float
    adqr: float
    tuning: dict = field(default_factory=dict)


def _require_p3(ctx: RiskContext):
    if ctx.p < 3:
        raise RequiresP3(ctx.p)


# ------------------------------------------------------------------ #
#  Moments of shrinkage factors                                        #
# ------------------------------------------------------------------ #

def _factor_moments(ctx: RiskContext, df: int, shrink: float, threshold: float):
    """
    E[g] and E[g²] under chi2_df(Δ²) for g(x) = (1 - shrink/x) · 1{x >= threshold}.
    threshold = 0 means no truncation; shrink = 0 means a pure indicator.
    """
    d2, ctl = ctx.delta2, ctx.ctl
    if shrink:
        e1 = inv_moment(df, d2, 1, ctl)
        e2 = inv_moment(df, d2, 2, ctl)
        full_g = 1.0 - shrink * e1
        full_g2 = 1.0 - 2.0 * shrink * e1 + shrink ** 2 * e2
    else:
        full_g = full_g2 = 1.0
    if threshold <= 0.0:
        return full_g, full_g2
    t0 = trunc_inv_moment(df, d2, 0, threshold, ctl)
    if shrink:
        t1 = trunc_inv_moment(df, d2, 1, threshold, ctl)
        t2 = trunc_inv_moment(df, d2, 2, threshold, ctl)
        low_g = t0 - shrink * t1
        low_g2 = t0 - 2.0 * shrink * t1 + shrink ** 2 * t2
    else:
        low_g = low_g2 = t0
    return full_g - low_g, full_g2 - low_g2


def _factor_risk(ctx: RiskContext, estimator_id, shrink: float, threshold: float, **tuning):
    g_p2, g2_p2 = _factor_moments(ctx, ctx.p + 2, shrink, threshold)
    _, g2_p4 = _factor_moments(ctx, ctx.p + 4, shrink, threshold)
    adqr = ctx.sigma2 * (ctx.tr_c_inv * g2_p2 + ctx.delta2 * (g2_p4 - 2.0 * g_p2 + 1.0))
    return RiskReport(estimator_id, g_p2 - 1.0, max(adqr, 0.0), dict(tuning))


# ------------------------------------------------------------------ #
#  Risk of each estimator                                              #
# ------------------------------------------------------------------ #

def risk_lse(ctx: RiskContext) -> RiskReport:
    return RiskReport(EstimatorId.LSE, 0.0, ctx.sigma2 * ctx.tr_c_inv)


def risk_re(ctx: RiskContext) -> RiskReport:
    return RiskReport(EstimatorId.RE, -1.0, ctx.sigma2 * ctx.delta2)


def risk_pte(ctx: RiskContext) -> RiskReport:
    """Pretest at level alpha, cutoff chi2_p(alpha) (upper tail)."""
    c = ctx.critical_value
    h2 = noncentral_cdf(c, ctx.p + 2, ctx.delta2, ctx.ctl)
    h4 = noncentral_cdf(c, ctx.p + 4, ctx.delta2, ctx.ctl)
    adqr = ctx.sigma2 * ctx.tr_c_inv * (1.0 - h2) + ctx.sigma2 * ctx.delta2 * (2.0 * h2 - h4)
    return RiskReport(EstimatorId.PTE, -h2, max(adqr, 0.0), {"alpha": ctx.alpha})


def risk_stein(ctx: RiskContext) -> RiskReport:
    _require_p3(ctx)
    p, d2, ctl = ctx.p, ctx.delta2, ctx.ctl
    e1_p2 = inv_moment(p + 2, d2, 1, ctl)
    e2_p2 = inv_moment(p + 2, d2, 2, ctl)
    e2_p4 = inv_moment(p + 4, d2, 2, ctl)
    bracket = 1.0 - (p - 2) * (2.0 * e1_p2 - (p - 2) * e2_p2)
    adqr = ctx.sigma2 * ctx.tr_c_inv * bracket + ctx.sigma2 * (p * p - 4) * d2 * e2_p4
    return RiskReport(EstimatorId.S, -(p - 2) * e1_p2, adqr)


def risk_prse(ctx: RiskContext) -> RiskReport:
    """
    Positive-rule Stein: ADQR(S) minus the contribution of the region
    chi2 < p - 2 where the Stein factor is negative,

        ADQR(S) - sigma² tr C^-1 E[psi²(chi2_{p+2})]
                + sigma² Δ² {2 E[psi(chi2_{p+2})] - E[psi²(chi2_{p+4})]}

    with psi(x) = (1 - (p-2)/x) · 1{x < p - 2}.
    """
    _require_p3(ctx)
    stein = risk_stein(ctx)
    p, d2, ctl = ctx.p, ctx.delta2, ctx.ctl
    s = float(p - 2)

    def psi_moments(df):
        t0 = trunc_inv_moment(df, d2, 0, s, ctl)
        t1 = trunc_inv_moment(df, d2, 1, s, ctl)
        t2 = trunc_inv_moment(df, d2, 2, s, ctl)
        return t0 - s * t1, t0 - 2.0 * s * t1 + s * s * t2

    psi_p2, psi2_p2 = psi_moments(p + 2)
    _, psi2_p4 = psi_moments(p + 4)
    adqr = (stein.adqr
            - ctx.sigma2 * ctx.tr_c_inv * psi2_p2
            + ctx.sigma2 * d2 * (2.0 * psi_p2 - psi2_p4))
    return RiskReport(EstimatorId.SPLUS, stein.adb_factor - psi_p2, max(adqr, 0.0))


def risk_ipt(ctx: RiskContext) -> RiskReport:
    """
    Improved pretest: g(x) = (1 - (p-2)/x) · 1{x >= chi2_p(alpha)} plugged
    into the general shrinkage-factor risk identity.
    """
    _require_p3(ctx)
    return _factor_risk(ctx, EstimatorId.IPT, float(ctx.p - 2), ctx.critical_value,
                        alpha=ctx.alpha)


def risk_ridge(ctx: RiskContext, kappa: float) -> RiskReport:
    """
    Ridge risk under the C = I_p normalization (tr C^-1 = p, delta'delta = sigma² Δ²):
    [sigma² p + kappa² sigma² Δ²] / (1 + kappa)². kappa = inf is the
    full-shrinkage limit, i.e. the restricted estimator.
    """
    if not kappa >= 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if math.isinf(kappa):
        return RiskReport(EstimatorId.RR, -1.0, ctx.sigma2 * ctx.delta2, {"kappa": kappa})
    adqr = (ctx.sigma2 * ctx.p + kappa ** 2 * ctx.sigma2 * ctx.delta2) / (1.0 + kappa) ** 2
    return RiskReport(EstimatorId.RR, -kappa / (1.0 + kappa), adqr, {"kappa": kappa})


def risk_ridge_general(C, delta, sigma2: float, kappa: float) -> float:
    """
    Ridge ADQR for an arbitrary positive-definite C:
    sigma² tr[(C+kI)^-1 C^-1 (C+kI)^-1] + k² delta'(C+kI)^-2 delta.
    """
    C = as_matrix(C, "C")
    delta = as_vector(delta, "delta")
    if kappa < 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    M = spd_inverse(C + kappa * np.eye(C.shape[0]))
    variance = sigma2 * float(np.trace(M @ spd_inverse(C) @ M))
    shifted = M @ delta
    return variance + kappa ** 2 * float(shifted @ shifted)


def optimal_kappa(p: int, delta2: float) -> float:
    """
    Ridge parameter minimizing the C = I_p risk: p / Δ².

    At Δ² = 0 the risk decreases all the way to full shrinkage, signalled by
    returning +inf.
    """
    if not math.isfinite(delta2) or delta2 < 0:
        raise DomainError(f"Δ² must be finite and >= 0, got {delta2}")
    if delta2 == 0.0:
        return math.inf
    return p / delta2


# ------------------------------------------------------------------ #
#  Dominance comparisons                                               #
# ------------------------------------------------------------------ #

def risk_difference(first: RiskReport, second: RiskReport) -> float:
    """ADQR(first) - ADQR(second); negative means first is better."""
    return first.adqr - second.adqr


def stein_dominance_condition(c_inv_eigenvalues) -> bool:
    """tr C^-1 / Ch_max(C^-1) >= (p + 2) / 2."""
    eig = as_vector(c_inv_eigenvalues, "eigenvalues")
    if np.any(eig <= 0):
        raise DomainError("eigenvalues of C^-1 must be positive")
    p = eig.shape[0]
    return bool(eig.sum() / eig.max() >= (p + 2) / 2.0)


def pte_lse_crossover(ctx: RiskContext) -> float:
    """
    Smallest Δ² at which the pretest risk meets the LSE risk; below it the
    pretest estimator is better. NaN if no crossing is found.
    """
    lse = risk_lse(ctx).adqr

    def gap(d2):
        return risk_pte(ctx.with_delta2(d2)).adqr - lse

    upper = 10.0 * (ctx.tr_c_inv + ctx.p) + 50.0
    scan = np.linspace(0.0, upper, 201)
    values = [gap(d2) for d2 in scan]
    for lo, hi, g_lo, g_hi in zip(scan[:-1], scan[1:], values[:-1], values[1:]):
        if g_lo < 0.0 <= g_hi:
            return float(optimize.brentq(gap, lo, hi, xtol=1e-10))
    logger.warning("no PTE/LSE crossover found on [0, %g]", upper)
    return math.nan


@dataclass(frozen=True)
class PairComparison:
    """Which of two estimators has the lower ADQR over runs of the Δ² grid."""
    first: str
    second: str
    # (delta2_from, delta2_to, winner) with winner one of first, second, "tie"
    regions: tuple

    def winner_at(self, delta2: float) -> str:
        for lo, hi, winner in self.regions:
            if lo <= delta2 <= hi:
                return winner
        raise DomainError(f"Δ²={delta2} is outside the compared grid")


@dataclass(frozen=True)
class DominanceReport:
    delta2_grid: tuple
    risks: dict          # estimator label -> tuple of ADQR over the grid
    comparisons: tuple
    re_lse_boundary: float
    pte_lse_crossover: float
    stein_condition: bool | None

    def comparison(self, first: str, second: str) -> PairComparison:
        for comp in self.comparisons:
            if comp.first == first and comp.second == second:
                return comp
        raise KeyError((first, second))


def _regions(grid, first_label, second_label, first_risk, second_risk):
    regions = []
    for d2, a, b in zip(grid, first_risk, second_risk):
        scale = max(abs(a), abs(b), 1.0)
        if abs(a - b) <= TIE_RTOL * scale:
            winner = "tie"
        else:
            winner = first_label if a < b else second_label
        if regions and regions[-1][2] == winner:
            regions[-1] = (regions[-1][0], d2, winner)
        else:
            regions.append((d2, d2, winner))
    return PairComparison(first_label, second_label, tuple(regions))


def dominance_report(ctx_grid, c_inv_eigenvalues=None) -> DominanceReport:
    """
    Evaluate every analytic risk over a Δ² grid of contexts that share
    (p, tr C^-1, sigma², alpha) and report who wins where.
    """
    ctx_grid = sorted(ctx_grid, key=lambda c: c.delta2)
    if not ctx_grid:
        raise DomainError("dominance_report needs at least one context")
    base = ctx_grid[0]
    for ctx in ctx_grid:
        if (ctx.p, ctx.tr_c_inv, ctx.sigma2, ctx.alpha) != (base.p, base.tr_c_inv, base.sigma2, base.alpha):
            raise DomainError("all contexts must share p, tr C^-1, sigma² and alpha")
    grid = tuple(c.delta2 for c in ctx_grid)

    evaluators = {
        "LSE": risk_lse,
        "RE": risk_re,
        "PTE": risk_pte,
        "RR": lambda c: risk_ridge(c, optimal_kappa(c.p, c.delta2)),
    }
    if base.p >= 3:
        evaluators.update({"S": risk_stein, "S+": risk_prse, "IPT": risk_ipt})
    risks = {label: tuple(fn(c).adqr for c in ctx_grid) for label, fn in evaluators.items()}

    pairs = [("RE", "LSE"), ("PTE", "LSE"), ("RR", "LSE")]
    if base.p >= 3:
        pairs += [("S", "LSE"), ("S+", "S"), ("IPT", "PTE"), ("PTE", "S")]
    comparisons = tuple(_regions(grid, a, b, risks[a], risks[b]) for a, b in pairs)

    condition = None
    if c_inv_eigenvalues is not None:
        condition = stein_dominance_condition(c_inv_eigenvalues)
    return DominanceReport(
        delta2_grid=grid,
        risks=risks,
        comparisons=comparisons,
        re_lse_boundary=base.tr_c_inv,
        pte_lse_crossover=pte_lse_crossover(base),
        stein_condition=condition,
    )
