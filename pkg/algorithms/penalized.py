"""
Penalized least squares by cyclic coordinate descent: LASSO, adaptive
LASSO, SCAD and elastic net, with regularization paths and K-fold
cross-validation for the penalty level.

Every fit minimizes (1/(2n))||ys - Xs beta||² + lambda * P(beta) on
standardized data, so lambda grids are comparable across n. Multiply by 2n
to recover the unnormalized residual-sum-of-squares scale. The sweeps
themselves run in a numba-compiled kernel over the Gram matrix.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from numba import njit

from environment.data import CoefficientEstimate, EstimatorId, RegressionData, StandardizedData
from environment.design import RngStream
from utils.errors import (
    ConstantColumn,
    DegenerateStatistic,
    DomainError,
    FoldTooSmall,
    InconsistentConfig,
    MaxSweepsExceeded,
)
from utils.linalg import spd_solve

logger = logging.getLogger(__name__)

SCAD_A = 3.7
SWEEP_TOL = 1e-8
MAX_SWEEPS = 100_000
WEIGHT_CAP = 1e8
PATH_RATIO = 1e-3
DEFAULT_N_LAMBDA = 50
DEFAULT_FOLDS = 10


class PenaltyKind(str, Enum):
    LASSO = "LASSO"
    ALASSO = "ALASSO"
    SCAD = "SCAD"
    EN = "EN"


@dataclass(frozen=True)
class PenaltySpec:
    """
    Which penalty to fit and its fixed tuning values.

    mix is the elastic-net share of the L1 part (LASSO is mix = 1);
    scad_a is SCAD's second parameter; weights are the adaptive-LASSO
    coefficient weights, filled in from the pilot fit when left empty.
    """
    kind: PenaltyKind
    mix: float = 1.0
    scad_a: float = SCAD_A
    gamma: float = 1.0
    weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if not (0.0 < self.mix <= 1.0):
            raise DomainError(f"mix must lie in (0, 1], got {self.mix}")
        if self.kind is not PenaltyKind.EN and self.mix != 1.0:
            raise InconsistentConfig(f"mix={self.mix} only applies to the elastic net")
        if not self.scad_a > 2.0:
            raise DomainError(f"scad_a must be > 2, got {self.scad_a}")
        if not self.gamma > 0.0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.ndim != 1 or np.any(~np.isfinite(w)) or np.any(w <= 0):
                raise DomainError("adaptive weights must be a finite, strictly positive vector")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    @classmethod
    def lasso(cls):
        return cls(PenaltyKind.LASSO)

    @classmethod
    def alasso(cls, gamma: float = 1.0, weights=None):
        return cls(PenaltyKind.ALASSO, gamma=gamma, weights=weights)

    @classmethod
    def scad(cls, a: float = SCAD_A):
        return cls(PenaltyKind.SCAD, scad_a=a)

    @classmethod
    def elastic_net(cls, mix: float):
        return cls(PenaltyKind.EN, mix=mix)

    @property
    def estimator_id(self) -> EstimatorId:
        return EstimatorId(self.kind.value)

    @property
    def convex(self) -> bool:
        return self.kind is not PenaltyKind.SCAD

    def with_weights(self, weights) -> PenaltySpec:
        return replace(self, weights=weights)

    def l1_weights(self, p: int) -> np.ndarray:
        """Per-coordinate multiplier of lambda in the L1 part."""
        if self.kind is PenaltyKind.ALASSO:
            if self.weights is None:
                raise InconsistentConfig("adaptive LASSO needs weights; see alasso_weights")
            if self.weights.shape[0] != p:
                raise InconsistentConfig(f"{self.weights.shape[0]} weights for p={p}")
            return self.weights
        return np.full(p, self.mix)

    def tuning(self) -> dict:
        if self.kind is PenaltyKind.EN:
            return {"mix": self.mix}
        if self.kind is PenaltyKind.SCAD:
            return {"scad_a": self.scad_a}
        if self.kind is PenaltyKind.ALASSO:
            return {"gamma": self.gamma}
        return {}


@dataclass(frozen=True)
class PathResult:
    """
    Fits along a decreasing lambda grid. Coefficients and intercepts are on
    the original data scale; cv_errors and chosen_index are set by
    cross_validate.
    """
    lambdas: np.ndarray
    betas_by_lambda: np.ndarray
    intercepts: np.ndarray
    spec: PenaltySpec
    cv_errors: np.ndarray | None = None
    chosen_index: int | None = None

    @property
    def chosen_lambda(self) -> float:
        if self.chosen_index is None:
            raise InconsistentConfig("path was not cross-validated")
        return float(self.lambdas[self.chosen_index])

    @property
    def chosen_beta(self) -> np.ndarray:
        if self.chosen_index is None:
            raise InconsistentConfig("path was not cross-validated")
        return self.betas_by_lambda[self.chosen_index]


# ------------------------------------------------------------------ #
#  Standardization                                                      #
# ------------------------------------------------------------------ #

def standardize(data: RegressionData) -> StandardizedData:
    """
    Center every column and scale it to unit population SD (so that
    Xs_j'Xs_j / n = 1); center y.
    """
    return _standardize(data.X, data.y)


def _standardize(X: np.ndarray, y: np.ndarray) -> StandardizedData:
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    flat = np.flatnonzero(scales <= 1e-12)
    if flat.size:
        raise ConstantColumn(f"columns {flat.tolist()} are constant")
    Xs = (X - means) / scales
    y_mean = float(y.mean())
    return StandardizedData(Xs=Xs, ys=y - y_mean, col_means=means, col_scales=scales, y_mean=y_mean)


# ------------------------------------------------------------------ #
#  Thresholding rules and penalties                                     #
# ------------------------------------------------------------------ #

def soft_threshold(z, t):
    """sgn(z) (|z| - t)+."""
    if np.any(np.asarray(t) < 0):
        raise DomainError(f"threshold must be >= 0, got {t}")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def scad_threshold(z, lam, a: float = SCAD_A):
    """
    Minimizer of ½(beta - z)² + SCAD penalty: the soft rule for |z| <= 2λ,
    ((a-1)z - sgn(z)aλ)/(a-2) for 2λ < |z| <= aλ, and z beyond aλ.
    """
    if lam < 0 or not a > 2.0:
        raise DomainError(f"need lambda >= 0 and a > 2, got {lam}, {a}")
    z = np.asarray(z, dtype=float)
    mag = np.abs(z)
    soft = np.sign(z) * np.maximum(mag - lam, 0.0)
    middle = ((a - 1.0) * z - np.sign(z) * a * lam) / (a - 2.0)
    out = np.where(mag <= 2.0 * lam, soft, np.where(mag <= a * lam, middle, z))
    return float(out) if out.ndim == 0 else out


def scad_penalty(beta, lam: float, a: float = SCAD_A) -> float:
    """Sum over coordinates of the SCAD penalty P_{a,λ}(|beta_j|)."""
    b = np.abs(np.asarray(beta, dtype=float))
    inner = lam * b
    middle = (2.0 * a * lam * b - b * b - lam * lam) / (2.0 * (a - 1.0))
    outer = np.full(b.shape, 0.5 * lam * lam * (a + 1.0))
    return float(np.sum(np.where(b <= lam, inner, np.where(b <= a * lam, middle, outer))))


def penalty_value(beta: np.ndarray, spec: PenaltySpec, lam: float) -> float:
    """lambda * P(beta) for the given spec."""
    beta = np.asarray(beta, dtype=float)
    if spec.kind is PenaltyKind.SCAD:
        return scad_penalty(beta, lam, spec.scad_a)
    l1 = float(spec.l1_weights(beta.shape[0]) @ np.abs(beta))
    if spec.kind is PenaltyKind.EN:
        return lam * (l1 + (1.0 - spec.mix) * float(beta @ beta))
    return lam * l1


def alasso_weights(pilot, gamma: float = 1.0) -> np.ndarray:
    """w_j = |pilot_j|^-gamma, capped at 1e8 for (near-)zero pilots."""
    if not gamma > 0.0:
        raise DomainError(f"gamma must be > 0, got {gamma}")
    mag = np.abs(np.asarray(pilot, dtype=float))
    w = np.full(mag.shape, WEIGHT_CAP)
    usable = mag >= 1e-8
    w[usable] = np.minimum(mag[usable] ** (-gamma), WEIGHT_CAP)
    return w


# ------------------------------------------------------------------ #
#  Coordinate descent                                                   #
# ------------------------------------------------------------------ #

class _GramProblem:
    """Sufficient statistics of a standardized problem: G = Xs'Xs/n, c = Xs'ys/n."""

    def __init__(self, sdata: StandardizedData):
        n = sdata.n
        self.G = np.ascontiguousarray((sdata.Xs.T @ sdata.Xs) / n)
        self.c = np.ascontiguousarray((sdata.Xs.T @ sdata.ys) / n)
        self.yy = float(sdata.ys @ sdata.ys) / n
        self.p = sdata.p

    def objective(self, beta: np.ndarray, spec: PenaltySpec, lam: float) -> float:
        loss = 0.5 * (self.yy - 2.0 * float(self.c @ beta) + float(beta @ self.G @ beta))
        return loss + penalty_value(beta, spec, lam)

    def lambda_max(self, spec: PenaltySpec) -> float:
        if spec.kind is PenaltyKind.SCAD:
            return float(np.max(np.abs(self.c)))
        return float(np.max(np.abs(self.c) / spec.l1_weights(self.p)))


@njit(cache=True)
def _update(z, t, denom, scad, lam, a):
    # minimizer of ½(b - z)² + penalty in one coordinate
    if scad:
        mag = abs(z)
        if mag <= 2.0 * lam:
            return math.copysign(max(mag - lam, 0.0), z)
        if mag <= a * lam:
            return ((a - 1.0) * z - math.copysign(a * lam, z)) / (a - 2.0)
        return z
    excess = abs(z) - t
    if excess <= 0.0:
        return 0.0
    return math.copysign(excess, z) / denom


@njit(cache=True)
def _sweep(G, c, beta, Gb, coords, n_coords, thresholds, denom, scad, lam, a):
    p = beta.shape[0]
    max_change = 0.0
    for idx in range(n_coords):
        j = coords[idx]
        old = beta[j]
        new = _update(c[j] - Gb[j] + old, thresholds[j], denom, scad, lam, a)
        if new != old:
            d = new - old
            beta[j] = new
            for i in range(p):
                Gb[i] += d * G[j, i]
            if abs(d) > max_change:
                max_change = abs(d)
    return max_change


@njit(cache=True)
def _cd_kernel(G, c, beta, thresholds, denom, scad, lam, a, tol, max_sweeps):
    """Sweeps beta in place; returns (sweeps, last change, converged)."""
    p = beta.shape[0]
    Gb = np.zeros(p)
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(p):
                Gb[i] += beta[j] * G[j, i]
    full = np.arange(p)
    active = np.empty(p, dtype=np.int64)
    sweeps = 0
    change = np.inf
    while sweeps < max_sweeps:
        change = _sweep(G, c, beta, Gb, full, p, thresholds, denom, scad, lam, a)
        sweeps += 1
        if change <= tol:
            return sweeps, change, True
        n_active = 0
        for j in range(p):
            if beta[j] != 0.0:
                active[n_active] = j
                n_active += 1
        while n_active > 0 and sweeps < max_sweeps:
            change = _sweep(G, c, beta, Gb, active, n_active, thresholds, denom, scad, lam, a)
            sweeps += 1
            if change <= tol:
                break
    return sweeps, change, False


def _solve(problem: _GramProblem, spec: PenaltySpec, lam: float, beta: np.ndarray,
           tol: float = SWEEP_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """
    Cyclic coordinate descent from a warm start. A full sweep over every
    coordinate alternates with sweeps restricted to the active set until a
    full sweep moves no coefficient by more than tol.
    """
    beta = np.array(beta, dtype=np.float64)
    scad = spec.kind is PenaltyKind.SCAD
    if scad:
        thresholds = np.zeros(problem.p)
    else:
        thresholds = np.ascontiguousarray(lam * spec.l1_weights(problem.p), dtype=np.float64)
    denom = 1.0 + 2.0 * lam * (1.0 - spec.mix) if spec.kind is PenaltyKind.EN else 1.0
    track = logger.isEnabledFor(logging.DEBUG) and spec.convex
    start_obj = problem.objective(beta, spec, lam) if track else None

    sweeps, change, converged = _cd_kernel(problem.G, problem.c, beta, thresholds, float(denom),
                                           scad, float(lam), float(spec.scad_a), float(tol),
                                           int(max_sweeps))
    if not converged:
        raise MaxSweepsExceeded(int(sweeps), float(change))
    if track:
        obj = problem.objective(beta, spec, lam)
        if obj > start_obj + 1e-12 * max(1.0, abs(start_obj)):
            logger.debug("objective rose from %.15g to %.15g at lambda=%g", start_obj, obj, lam)
    return beta



def cd_fit(sdata: StandardizedData, spec: PenaltySpec, lam: float,
           beta0: np.ndarray | None = None, tol: float = SWEEP_TOL,
           max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Standardized-scale coefficients minimizing the penalized objective at lambda."""
    if not (lam >= 0.0 and math.isfinite(lam)):
        raise DomainError(f"lambda must be finite and >= 0, got {lam}")
    problem = _GramProblem(sdata)
    start = np.zeros(sdata.p) if beta0 is None else beta0
    return _solve(problem, spec, lam, start, tol, max_sweeps)


def penalized_objective(sdata: StandardizedData, spec: PenaltySpec, lam: float, beta) -> float:
    """(1/(2n))||ys - Xs beta||² + lambda P(beta)."""
    beta = np.asarray(beta, dtype=float)
    resid = sdata.ys - sdata.Xs @ beta
    return 0.5 * float(resid @ resid) / sdata.n + penalty_value(beta, spec, lam)


def kkt_violation(sdata: StandardizedData, spec: PenaltySpec, lam: float, beta) -> float:
    """
    Largest violation of the optimality conditions of a convex spec:
    |g_j| <= t_j at zero coordinates, g_j + t_j sgn(beta_j) = 0 elsewhere,
    with g the gradient of the smooth part and t_j = lambda * l1 weight.
    """
    if not spec.convex:
        raise DomainError("KKT certification applies to convex penalties only")
    problem = _GramProblem(sdata)
    beta = np.asarray(beta, dtype=float)
    grad = problem.G @ beta - problem.c
    if spec.kind is PenaltyKind.EN:
        grad = grad + 2.0 * lam * (1.0 - spec.mix) * beta
    t = lam * spec.l1_weights(sdata.p)
    zero = beta == 0.0
    at_zero = np.maximum(np.abs(grad) - t, 0.0)
    active = np.abs(grad + t * np.sign(beta))
    return float(np.max(np.where(zero, at_zero, active)))


# ------------------------------------------------------------------ #
#  Paths and cross-validation                                           #
# ------------------------------------------------------------------ #

def lambda_path(sdata: StandardizedData, spec: PenaltySpec,
                n_lambda: int = DEFAULT_N_LAMBDA) -> np.ndarray:
    """Log-spaced decreasing grid from lambda_max down to 1e-3 lambda_max."""
    if n_lambda < 2:
        raise DomainError(f"n_lambda must be >= 2, got {n_lambda}")
    lam_max = _GramProblem(sdata).lambda_max(spec)
    if lam_max <= 0.0:
        raise DegenerateStatistic("response is uncorrelated with every column; lambda_max = 0")
    return np.geomspace(lam_max, PATH_RATIO * lam_max, n_lambda)


def _path_betas(sdata: StandardizedData, spec: PenaltySpec, lambdas: np.ndarray) -> np.ndarray:
    problem = _GramProblem(sdata)
    betas = np.empty((lambdas.shape[0], sdata.p))
    beta = np.zeros(sdata.p)
    for i, lam in enumerate(lambdas):
        beta = _solve(problem, spec, float(lam), beta)
        betas[i] = beta
    return betas


def _pilot_weights(sdata: StandardizedData, spec: PenaltySpec) -> PenaltySpec:
    if spec.kind is not PenaltyKind.ALASSO or spec.weights is not None:
        return spec
    pilot = spd_solve(sdata.Xs.T @ sdata.Xs, sdata.Xs.T @ sdata.ys)
    return spec.with_weights(alasso_weights(pilot, spec.gamma))


def _to_original(sdata: StandardizedData, betas_std: np.ndarray):
    betas = betas_std / sdata.col_scales
    intercepts = sdata.y_mean - betas @ sdata.col_means
    return betas, intercepts


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold label of every observation: a seeded permutation dealt round-robin."""
    if folds < 2 or folds > n:
        raise DomainError(f"folds must lie in [2, n={n}], got {folds}")
    labels = np.empty(n, dtype=int)
    labels[RngStream(seed).permutation(n)] = np.arange(n) % folds
    sizes = np.bincount(labels, minlength=folds)
    if sizes.min() < 2:
        raise FoldTooSmall(f"{folds} folds over n={n} leaves a fold with {sizes.min()} observation(s)")
    return labels


def compute_path(data: RegressionData, spec: PenaltySpec,
                 n_lambda: int = DEFAULT_N_LAMBDA) -> PathResult:
    """Full-data regularization path with warm starts, no tuning."""
    sdata = standardize(data)
    spec = _pilot_weights(sdata, spec)
    lambdas = lambda_path(sdata, spec, n_lambda)
    betas, intercepts = _to_original(sdata, _path_betas(sdata, spec, lambdas))
    return PathResult(lambdas, betas, intercepts, spec)


def cross_validate(data: RegressionData, spec: PenaltySpec, folds: int = DEFAULT_FOLDS,
                   n_lambda: int = DEFAULT_N_LAMBDA, seed: int = 0) -> PathResult:
    """
    K-fold CV over the full-data lambda grid. Each training fold is
    standardized on its own; the chosen lambda minimizes pooled
    out-of-fold squared prediction error, ties going to the larger lambda.
    """
    labels = fold_assignment(data.n, folds, seed)
    sdata = standardize(data)
    spec = _pilot_weights(sdata, spec)
    lambdas = lambda_path(sdata, spec, n_lambda)

    sse = np.zeros(lambdas.shape[0])
    for k in range(folds):
        held = labels == k
        # training folds may have fewer rows than columns when p is close to n
        train = _standardize(data.X[~held], data.y[~held])
        betas, intercepts = _to_original(train, _path_betas(train, spec, lambdas))
        pred = data.X[held] @ betas.T + intercepts
        sse += np.sum((data.y[held][:, None] - pred) ** 2, axis=0)
    cv_errors = sse / data.n
    chosen = int(np.argmin(cv_errors))
    logger.debug("%s CV: chose lambda[%d]=%.6g, error %.6g", spec.kind.value, chosen,
                 lambdas[chosen], cv_errors[chosen])

    betas, intercepts = _to_original(sdata, _path_betas(sdata, spec, lambdas))
    return PathResult(lambdas, betas, intercepts, spec, cv_errors, chosen)


def fit_penalized(data: RegressionData, spec: PenaltySpec, folds: int = DEFAULT_FOLDS,
                  seed: int = 0, n_lambda: int = DEFAULT_N_LAMBDA) -> CoefficientEstimate:
    """Standardize, tune lambda by CV and return original-scale coefficients."""
    path = cross_validate(data, spec, folds, n_lambda, seed)
    tuning = {"lambda": path.chosen_lambda, **spec.tuning()}
    return CoefficientEstimate(path.chosen_beta, spec.estimator_id, tuning)
