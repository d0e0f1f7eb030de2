"""
Closed-form estimators of the linear model Y = X beta + e:
least squares, restricted, preliminary test, Stein-type and ridge.

All shrinkage rules are driven by the statistic L_n = b'Cb / s² for the
full-model null beta = 0, where b is the LSE and C = X'X.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from analysis.distributions import central_quantile
from environment.data import CoefficientEstimate, EstimatorId, RegressionData
from utils.errors import (
    DegenerateResidual,
    DegenerateStatistic,
    DimensionMismatch,
    DomainError,
    RequiresP3,
)
from utils.linalg import as_matrix, as_vector, spd_inverse, spd_solve

logger = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class TestResult:
    """L_n together with the pieces it was built from."""
    statistic: float
    s2: float
    df: int
    error_df: int


def _check_alpha(alpha: float):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"test level alpha must lie in (0, 1), got {alpha}")


def _require_p3(p: int):
    if p < 3:
        raise RequiresP3(p)


# ======================================================================== #
#  1. Least squares and restricted estimators                               #
# ======================================================================== #

def _lse_beta(data: RegressionData) -> np.ndarray:
    return spd_solve(data.gram, data.xty)


def lse(data: RegressionData) -> CoefficientEstimate:
    """(X'X)^-1 X'y."""
    return CoefficientEstimate(_lse_beta(data), EstimatorId.LSE)


def restricted_general(data: RegressionData, H, h) -> CoefficientEstimate:
    """
    Least squares subject to H beta = h:
    b - C^-1 H'(H C^-1 H')^-1 (H b - h).
    """
    H = as_matrix(H, "H")
    h = as_vector(h, "h")
    q, cols = H.shape
    if cols != data.p or h.shape[0] != q:
        raise DimensionMismatch(f"H must be q x {data.p} and h length q, got {H.shape} and {h.shape}")
    if q > data.p:
        raise DomainError(f"at most p={data.p} restrictions, got q={q}")
    b = _lse_beta(data)
    C_inv = spd_inverse(data.gram)
    HCinv = H @ C_inv
    lagrange = spd_solve(HCinv @ H.T, H @ b - h)
    beta = b - HCinv.T @ lagrange
    return CoefficientEstimate(beta, EstimatorId.RE, {"q": q})


def restricted_null(p: int) -> CoefficientEstimate:
    """Restricted estimator under the full-model null beta = 0."""
    if int(p) != p or p < 1:
        raise DomainError(f"p must be a positive integer, got {p}")
    return CoefficientEstimate(np.zeros(int(p)), EstimatorId.RE)


# ======================================================================== #
#  2. Test statistic                                                        #
# ======================================================================== #

def _lse_and_test(data: RegressionData):
    b = _lse_beta(data)
    resid = data.y - data.X @ b
    error_df = data.n - data.p
    s2 = float(resid @ resid) / error_df
    if s2 <= RESIDUAL_FLOOR:
        raise DegenerateResidual(f"residual variance {s2:.3e} indicates a perfect fit")
    statistic = max(float(b @ data.gram @ b) / s2, 0.0)
    return b, TestResult(statistic, s2, data.p, error_df)


def test_statistic(data: RegressionData) -> TestResult:
    """L_n = b'Cb / s², s² = RSS / (n - p)."""
    return _lse_and_test(data)[1]


# keep pytest from collecting the function above as a test
test_statistic.__test__ = False


def stein_factor(statistic: float, p: int) -> float:
    """1 - (p - 2) / L_n, not clamped."""
    if statistic <= 0.0:
        raise DegenerateStatistic("Stein factor undefined at L_n = 0")
    return 1.0 - (p - 2) / statistic


# ======================================================================== #
#  3. Preliminary test and Stein-type estimators                           #
# ======================================================================== #

def pte(data: RegressionData, alpha: float) -> CoefficientEstimate:
    """
    Keep the LSE when L_n reaches the upper-alpha critical value
    chi2_p(alpha), otherwise return the restricted estimator 0.
    """
    _check_alpha(alpha)
    b, test = _lse_and_test(data)
    critical = central_quantile(alpha, data.p)
    beta = np.zeros_like(b) if test.statistic < critical else b
    return CoefficientEstimate(beta, EstimatorId.PTE, {"alpha": alpha, "critical_value": critical})


def stein(data: RegressionData) -> CoefficientEstimate:
    """James-Stein type: b (1 - (p-2)/L_n). The factor may be negative."""
    _require_p3(data.p)
    b, test = _lse_and_test(data)
    factor = stein_factor(test.statistic, data.p)
    return CoefficientEstimate(factor * b, EstimatorId.S, {"factor": factor})


def prse(data: RegressionData) -> CoefficientEstimate:
    """Positive-rule Stein: the Stein estimate when L_n > p - 2, else 0."""
    _require_p3(data.p)
    b, test = _lse_and_test(data)
    if test.statistic <= data.p - 2:
        return CoefficientEstimate(np.zeros_like(b), EstimatorId.SPLUS, {"factor": 0.0})
    factor = stein_factor(test.statistic, data.p)
    return CoefficientEstimate(factor * b, EstimatorId.SPLUS, {"factor": factor})


def ipt(data: RegressionData, alpha: float) -> CoefficientEstimate:
    """Improved pretest: the pretest estimate times the Stein factor."""
    _require_p3(data.p)
    _check_alpha(alpha)
    b, test = _lse_and_test(data)
    critical = central_quantile(alpha, data.p)
    if test.statistic < critical:
        # the pretest has already returned 0; 1/L_n never enters
        factor = 0.0
    else:
        factor = stein_factor(test.statistic, data.p)
    return CoefficientEstimate(factor * b, EstimatorId.IPT,
                               {"alpha": alpha, "critical_value": critical, "factor": factor})


# ======================================================================== #
#  4. Ridge                                                                 #
# ======================================================================== #

def ridge(data: RegressionData, kappa: float) -> CoefficientEstimate:
    """
    (I + kappa C^-1)^-1 b, evaluated as (C + kappa I)^-1 X'y.
    kappa = inf gives the zero vector.
    """
    if math.isnan(kappa) or kappa < 0:
        raise DomainError(f"ridge parameter must be >= 0, got {kappa}")
    if math.isinf(kappa):
        return CoefficientEstimate(np.zeros(data.p), EstimatorId.RR, {"kappa": kappa})
    A = data.gram + kappa * np.eye(data.p)
    return CoefficientEstimate(spd_solve(A, data.xty), EstimatorId.RR, {"kappa": kappa})
