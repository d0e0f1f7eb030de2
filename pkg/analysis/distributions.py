"""
Central and noncentral chi-square kernel: CDFs, upper-tail quantiles and
(truncated) inverse moments.

A noncentral chi-square with m degrees of freedom and noncentrality Δ² is a
Poisson(Δ²/2) mixture of central chi-squares with m + 2j degrees of freedom,
so every quantity here is a weighted sum over the mixture index j. The
weights are generated from the Poisson mode outward so large Δ² does not
underflow the leading terms.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special, stats

from utils.errors import DomainError, MomentUndefined, SeriesNotConverged

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for Poisson-mixture sums."""
    tol: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self):
        if not (0.0 < self.tol <= 1e-6):
            raise DomainError(f"series tol must lie in (0, 1e-6], got {self.tol}")
        if self.max_terms < 100:
            raise DomainError(f"max_terms must be >= 100, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class NoncentralChi2:
    df: int
    noncentrality: float = 0.0

    def __post_init__(self):
        _check_df(self.df)
        _check_delta2(self.noncentrality)

    def cdf(self, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
        return noncentral_cdf(x, self.df, self.noncentrality, ctl)

    def inv_moment(self, r: int, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
        return inv_moment(self.df, self.noncentrality, r, ctl)


def _check_df(df):
    if int(df) != df or df < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df}")


def _check_delta2(delta2):
    if not math.isfinite(delta2) or delta2 < 0:
        raise DomainError(f"noncentrality must be finite and >= 0, got {delta2}")


# ------------------------------------------------------------------ #
#  Poisson mixture weights                                              #
# ------------------------------------------------------------------ #

@lru_cache(maxsize=4096)
def _mixture_weights(delta2: float, tol: float, max_terms: int):
    lam = 0.5 * delta2
    if lam == 0.0:
        index, weights = np.array([0]), np.array([1.0])
    else:
        # window centred on the Poisson mode, widened until the kept mass
        # reaches 1 - tol
        mode = int(math.floor(lam))
        half = int(math.ceil(8.0 * math.sqrt(lam))) + 20
        while True:
            lo = max(0, mode - half)
            hi = min(mode + half, lo + max_terms - 1)
            index = np.arange(lo, hi + 1)
            weights = np.exp(stats.poisson.logpmf(index, lam))
            mass = float(weights.sum())
            tails_gone = (lo == 0 or weights[0] == 0.0) and weights[-1] == 0.0
            if mass >= 1.0 - tol or tails_gone:
                break
            if index.size >= max_terms:
                raise SeriesNotConverged(
                    f"Poisson mixture for delta2={delta2} kept {index.size} terms, "
                    f"neglected mass {1.0 - mass:.3e} >= tol {tol:.1e}"
                )
            half *= 2
        keep = weights > 0.0
        index, weights = index[keep], weights[keep]
        logger.debug("mixture delta2=%g: j in [%d, %d], mass %.15f",
                     delta2, index[0], index[-1], mass)
    index.flags.writeable = False
    weights.flags.writeable = False
    return index, weights


def mixture_weights(delta2: float, ctl: SeriesControl = DEFAULT_CONTROL):
    """Mixture indices j and Poisson(Δ²/2) weights covering mass >= 1 - tol."""
    _check_delta2(delta2)
    index, weights = _mixture_weights(float(delta2), ctl.tol, ctl.max_terms)
    return index, weights


# ------------------------------------------------------------------ #
#  Central distribution                                                 #
# ------------------------------------------------------------------ #

def central_cdf(x, df):
    """P(chi2_df <= x) via the regularized lower incomplete gamma function."""
    x = np.asarray(x, dtype=float)
    value = np.where(x <= 0.0, 0.0, special.gammainc(0.5 * np.asarray(df, dtype=float),
                                                      0.5 * np.maximum(x, 0.0)))
    value = np.clip(value, 0.0, 1.0)
    return float(value) if value.ndim == 0 else value


def central_quantile(prob: float, df: int) -> float:
    """
    Upper-tail critical value: the x with P(chi2_df > x) = prob.

    Starts from the incomplete-gamma inverse and polishes the root with a
    bracketed Brent search on the CDF itself.
    """
    if not (0.0 < prob < 1.0):
        raise DomainError(f"upper-tail probability must lie in (0, 1), got {prob}")
    _check_df(df)
    a = 0.5 * df

    def excess(x):
        return special.gammaincc(a, 0.5 * x) - prob

    guess = 2.0 * float(special.gammainccinv(a, prob))
    lo, hi = 0.5 * guess, 2.0 * guess + 1.0
    while excess(lo) < 0.0:
        lo *= 0.5
    while excess(hi) > 0.0:
        hi *= 2.0
    return float(optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                                 maxiter=500))


# ------------------------------------------------------------------ #
#  Noncentral distribution                                              #
# ------------------------------------------------------------------ #

def noncentral_cdf(x: float, df: int, delta2: float,
                   ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """H_df(x; Δ²), the noncentral chi-square CDF."""
    _check_df(df)
    _check_delta2(delta2)
    if x <= 0.0:
        return 0.0
    index, weights = mixture_weights(delta2, ctl)
    value = float(weights @ central_cdf(np.full(index.shape, float(x)), df + 2 * index))
    return min(max(value, 0.0), 1.0)


def _central_inv_moments(d: np.ndarray, r: int) -> np.ndarray:
    # E[(chi2_d)^-r] = 2^-r Gamma(d/2 - r) / Gamma(d/2) = 1 / prod_{i=1..r} (d - 2i)
    out = np.ones(d.shape, dtype=float)
    for i in range(1, r + 1):
        out = out / (d - 2.0 * i)
    return out


def _check_moment(df: int, r: int, allowed):
    _check_df(df)
    if r not in allowed:
        raise DomainError(f"moment order r must be one of {sorted(allowed)}, got {r}")
    if r > 0 and df <= 2 * r:
        raise MomentUndefined(
            f"E[chi2_{df}^-{r}] is infinite: needs df > {2 * r}"
        )


def inv_moment(df: int, delta2: float, r: int,
               ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """E[(chi2_df(Δ²))^-r] for r in {1, 2}."""
    _check_moment(df, r, {1, 2})
    index, weights = mixture_weights(delta2, ctl)
    d = df + 2.0 * index
    return float(weights @ _central_inv_moments(d, r))


def trunc_inv_moment(df: int, delta2: float, r: int, cutoff: float,
                     ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """
    E[(chi2_df(Δ²))^-r · 1{chi2 < cutoff}] for r in {0, 1, 2}.

    Per mixture term uses E[X^-r 1{X < c}] = E[X^-r] · P(chi2_{d-2r} < c).
    """
    _check_moment(df, r, {0, 1, 2})
    if not cutoff > 0.0:
        raise DomainError(f"cutoff must be > 0, got {cutoff}")
    if r == 0:
        return noncentral_cdf(cutoff, df, delta2, ctl)
    index, weights = mixture_weights(delta2, ctl)
    d = df + 2.0 * index
    tail = central_cdf(np.full(d.shape, float(cutoff)), d - 2.0 * r)
    return float(weights @ (_central_inv_moments(d, r) * tail))
