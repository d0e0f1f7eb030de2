"""
Data containers shared by every estimator: the regression problem, its
standardized form, and fitted coefficient vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from utils.errors import DimensionMismatch, DomainError
from utils.linalg import as_matrix, as_vector, gram


class EstimatorId(str, Enum):
    LSE = "LSE"
    RE = "RE"
    PTE = "PTE"
    IPT = "IPT"
    S = "S"
    SPLUS = "S+"
    RR = "RR"
    LASSO = "LASSO"
    ALASSO = "ALASSO"
    SCAD = "SCAD"
    EN = "EN"


class RegressionData:
    """
    Design matrix X (n x p) and response y (length n) for Y = X beta + e.

    Requires n > p >= 1. Full column rank is checked lazily: the first
    estimator that factors X'X raises NotPositiveDefinite if it fails.
    """

    def __init__(self, X, y):
        self.X = as_matrix(X, "X")
        self.y = as_vector(y, "y")
        n, p = self.X.shape
        if self.y.shape[0] != n:
            raise DimensionMismatch(f"X has {n} rows but y has {self.y.shape[0]} entries")
        if n <= p:
            raise DomainError(f"need n > p, got n={n}, p={p}")
        self._gram = None
        self._xty = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def gram(self) -> np.ndarray:
        """C = X'X, cached."""
        if self._gram is None:
            G = gram(self.X)
            G.flags.writeable = False
            self._gram = G
        return self._gram

    @property
    def xty(self) -> np.ndarray:
        if self._xty is None:
            v = self.X.T @ self.y
            v.flags.writeable = False
            self._xty = v
        return self._xty

    def subset(self, rows: np.ndarray) -> RegressionData:
        return RegressionData(self.X[rows], self.y[rows])

    def __repr__(self):
        return f"RegressionData(n={self.n}, p={self.p})"


@dataclass(frozen=True)
class StandardizedData:
    """
    Columns of X centered and scaled to unit (population) standard
    deviation, y centered. Keeps what is needed to map coefficients back.
    """
    Xs: np.ndarray
    ys: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    y_mean: float

    @property
    def n(self) -> int:
        return self.Xs.shape[0]

    @property
    def p(self) -> int:
        return self.Xs.shape[1]

    def to_original(self, beta_std: np.ndarray) -> tuple[np.ndarray, float]:
        """Back-transform standardized coefficients; returns (beta, intercept)."""
        beta = np.asarray(beta_std, dtype=float) / self.col_scales
        intercept = self.y_mean - float(self.col_means @ beta)
        return beta, intercept


@dataclass(frozen=True)
class CoefficientEstimate:
    """A fitted p-vector with its estimator identity and tuning values."""
    beta: np.ndarray
    estimator_id: EstimatorId
    tuning: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "beta", as_vector(self.beta, "beta"))
        object.__setattr__(self, "tuning", MappingProxyType(dict(self.tuning)))

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    def squared_error(self, truth: np.ndarray) -> float:
        diff = self.beta - truth
        return float(diff @ diff)
