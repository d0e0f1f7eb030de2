"""
Simulated regression designs: seeded random streams, equicorrelated
Gaussian design matrices and true coefficient vectors indexed by Δ².
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from utils.errors import DimensionMismatch, DomainError, InconsistentConfig


class Delta2Mapping(str, Enum):
    """How a Δ² grid value is turned into a true beta."""
    NONCENTRALITY = "noncentrality"   # Δ² = n beta'Σ beta / σ²
    EUCLIDEAN = "euclidean"           # Δ² = beta'beta / σ²
    TABULATED = "tabulated"           # Δ² = 2n beta'beta / σ²
    PARTITIONED = "partitioned"       # beta = (1 + c)(1_k, 0), Δ² = 2n k c² / σ²


class RngStream:
    """
    Deterministic random stream identified by (seed, stream_id).

    The same pair always yields the same draws, independent of which
    process or in which order streams are consumed.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise DomainError(f"seed and stream_id must be >= 0, got {seed}, {stream_id}")
        self._seed = int(seed)
        self._stream_id = int(stream_id)
        self._gen = np.random.default_rng(np.random.SeedSequence([self._seed, self._stream_id]))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def stream_id(self) -> int:
        return self._stream_id

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, size, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def child_seed(self) -> int:
        """Draw a seed for a sub-task, e.g. the CV fold assignment."""
        return int(self._gen.integers(0, 2**31 - 1))

    def __repr__(self):
        return f"RngStream(seed={self._seed}, stream_id={self._stream_id})"


def _check_r(r: float):
    if not (0.0 <= r < 1.0):
        raise DomainError(f"equicorrelation r must lie in [0, 1), got {r}")


def equicorrelation(p: int, r: float) -> np.ndarray:
    """Σ with unit diagonal and every off-diagonal entry equal to r."""
    _check_r(r)
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    return (1.0 - r) * np.eye(p) + r * np.ones((p, p))


def gen_design(n: int, p: int, r: float, rng: RngStream) -> np.ndarray:
    """
    n x p matrix with iid N(0, Σ) rows, Σ equicorrelated with parameter r.

    Uses the closed-form symmetric square root of Σ:
    x = sqrt(1-r) z + (sqrt(1+(p-1)r) - sqrt(1-r)) / p * (1'z) 1.
    """
    _check_r(r)
    if n < 1 or p < 1:
        raise DomainError(f"design needs n, p >= 1, got n={n}, p={p}")
    z = rng.normal((n, p))
    a = math.sqrt(1.0 - r)
    b = (math.sqrt(1.0 + (p - 1) * r) - a) / p
    return a * z + b * z.sum(axis=1, keepdims=True)


def beta_from_delta(p: int, k: int, delta2: float, Sigma, n: int, sigma: float,
                    mapping: Delta2Mapping = Delta2Mapping.NONCENTRALITY) -> np.ndarray:
    """
    True beta for one Δ² grid value; only the first k coefficients are
    ever nonzero.

    noncentrality  beta = c (1_k, 0), n beta'Σ beta / σ² = Δ²
    euclidean      beta = c (1_k, 0), beta'beta / σ² = Δ²
    tabulated      beta = c (1_k, 0), 2n beta'beta / σ² = Δ²
    partitioned    beta = (1 + c)(1_k, 0), 2n k c² / σ² = Δ², so Δ² = 0
                   gives (1_k, 0) and Δ² moves the active block only

    The tabulated convention is the one the benchmark tables follow. At
    r = 0 it makes the Wald noncentrality n beta'beta / σ² equal to Δ²/2,
    so the restricted estimator (MSE beta'beta = σ²Δ²/(2n)) is twice as
    efficient as under the noncentrality mapping at the same grid value.
    """
    if not (0 <= k <= p):
        raise DomainError(f"k must lie in [0, p={p}], got {k}")
    if not math.isfinite(delta2) or delta2 < 0:
        raise DomainError(f"delta2 must be finite and >= 0, got {delta2}")
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    mapping = Delta2Mapping(mapping)

    direction = np.zeros(p)
    direction[:k] = 1.0
    base = direction if mapping is Delta2Mapping.PARTITIONED else np.zeros(p)
    if delta2 == 0.0:
        return base.copy()
    if k == 0:
        raise InconsistentConfig(f"delta2={delta2:g} > 0 needs at least one nonzero coefficient (k=0)")
    if mapping is Delta2Mapping.EUCLIDEAN:
        return sigma * math.sqrt(delta2 / k) * direction
    if mapping in (Delta2Mapping.TABULATED, Delta2Mapping.PARTITIONED):
        return base + sigma * math.sqrt(delta2 / (2.0 * n * k)) * direction
    return _scale_for(direction, delta2, Sigma, n, sigma) * direction


def _scale_for(direction: np.ndarray, delta2: float, Sigma, n: int, sigma: float) -> float:
    # c solving n (c u)'Σ(c u) / σ² = delta2
    p = direction.shape[0]
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (p, p):
        raise DimensionMismatch(f"Sigma must be {p}x{p}, got {Sigma.shape}")
    quad = float(direction @ Sigma @ direction)
    return math.sqrt(delta2 * sigma**2 / (n * quad))
