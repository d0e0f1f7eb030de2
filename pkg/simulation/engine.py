"""
Monte Carlo engine: replicated estimation over a Δ² grid, aggregated into
mean squared errors and relative efficiencies against the LSE.

Replication t of every cell draws from RngStream(seed, t), and per-rep
losses are stored in replication order before averaging, so results are
bit-identical for any worker count.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from algorithms.classical import ipt, lse, prse, pte, restricted_null, ridge, stein, test_statistic
from algorithms.penalized import PenaltySpec, fit_penalized
from environment.data import CoefficientEstimate, EstimatorId, RegressionData
from environment.design import RngStream, beta_from_delta, equicorrelation, gen_design
from simulation.config import EstimatorSpec, SimConfig
from utils.errors import CellFailure, InconsistentConfig, ShrinkBenchError
from utils.helpers import worker_count

logger = logging.getLogger(__name__)

KAPPA_FLOOR = 1e-6
CHUNKS_PER_WORKER = 4


@dataclass(frozen=True)
class CellResult:
    estimator: EstimatorSpec
    mse: float


@dataclass(frozen=True)
class EfficiencyRow:
    design: str
    delta2: float
    estimator: EstimatorSpec
    mse: float
    rel_eff: float


class EfficiencyTable:
    """Rows of (design, Δ², estimator) -> MSE and MSE(LSE)/MSE."""

    def __init__(self, rows=()):
        self.rows = list(rows)

    def extend(self, other: EfficiencyTable):
        self.rows.extend(other.rows)

    def lookup(self, delta2: float, label: str, design: str | None = None) -> EfficiencyRow:
        for row in self.rows:
            if row.delta2 == delta2 and row.estimator.label == label and design in (None, row.design):
                return row
        raise KeyError((design, delta2, label))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def relative_efficiency(mse_lse: float, mse: float) -> float:
    """MSE(LSE)/MSE; +inf for a zero-error estimator, NaN for 0/0."""
    if math.isnan(mse_lse) or math.isnan(mse):
        return math.nan
    if mse == 0.0:
        return math.inf if mse_lse > 0.0 else math.nan
    return mse_lse / mse


# ------------------------------------------------------------------ #
#  One replication                                                      #
# ------------------------------------------------------------------ #

def plugin_kappa(data: RegressionData) -> float:
    """
    Ridge parameter on the X'X scale: n p / max(L_n - p, 1e-6), the
    optimal p/Δ² with Δ² estimated by L_n - p.
    """
    statistic = test_statistic(data).statistic
    return data.n * data.p / max(statistic - data.p, KAPPA_FLOOR)


def estimate(spec: EstimatorSpec, data: RegressionData, cfg: SimConfig,
             cv_seed: int) -> CoefficientEstimate:
    eid = spec.estimator_id
    if eid is EstimatorId.LSE:
        return lse(data)
    if eid is EstimatorId.RE:
        return restricted_null(data.p)
    if eid is EstimatorId.PTE:
        return pte(data, spec.alpha)
    if eid is EstimatorId.IPT:
        return ipt(data, spec.alpha)
    if eid is EstimatorId.S:
        return stein(data)
    if eid is EstimatorId.SPLUS:
        return prse(data)
    if eid is EstimatorId.RR:
        kappa = cfg.kappa if cfg.kappa is not None else plugin_kappa(data)
        return ridge(data, kappa)
    if eid is EstimatorId.LASSO:
        penalty = PenaltySpec.lasso()
    elif eid is EstimatorId.ALASSO:
        penalty = PenaltySpec.alasso()
    elif eid is EstimatorId.SCAD:
        penalty = PenaltySpec.scad()
    elif eid is EstimatorId.EN:
        penalty = PenaltySpec.elastic_net(spec.mix)
    else:
        raise InconsistentConfig(f"no simulation rule for {eid.value}")
    return fit_penalized(data, penalty, cfg.folds, cv_seed, cfg.n_lambda)


def _replicate(cfg: SimConfig, delta2: float, rep: int, beta: np.ndarray,
               X_fixed: np.ndarray | None) -> np.ndarray:
    rng = RngStream(cfg.seed, rep)
    X = X_fixed if X_fixed is not None else gen_design(cfg.n, cfg.p, cfg.r, rng)
    y = X @ beta + rng.normal(cfg.n, scale=cfg.sigma)
    cv_seed = rng.child_seed()
    data = RegressionData(X, y)
    losses = np.empty(len(cfg.estimators))
    for i, spec in enumerate(cfg.estimators):
        try:
            losses[i] = estimate(spec, data, cfg, cv_seed).squared_error(beta)
        except ShrinkBenchError as exc:
            raise CellFailure(delta2, rep, spec.label, exc) from exc
    return losses


def _run_reps(cfg: SimConfig, delta2: float, reps: np.ndarray, beta: np.ndarray,
              X_fixed: np.ndarray | None) -> np.ndarray:
    return np.stack([_replicate(cfg, delta2, int(t), beta, X_fixed) for t in reps])


# ------------------------------------------------------------------ #
#  Cells and experiments                                                #
# ------------------------------------------------------------------ #

def true_beta(cfg: SimConfig, delta2: float) -> np.ndarray:
    Sigma = equicorrelation(cfg.p, cfg.r)
    return beta_from_delta(cfg.p, cfg.signal_count, delta2, Sigma, cfg.n, cfg.sigma,
                           cfg.delta2_mapping)


def fixed_design(cfg: SimConfig) -> np.ndarray | None:
    """The shared design of --fixed-design runs, drawn from stream 0."""
    if not cfg.fixed_design:
        return None
    return gen_design(cfg.n, cfg.p, cfg.r, RngStream(cfg.seed, 0))


def run_cell(cfg: SimConfig, delta2: float, executor: ProcessPoolExecutor | None = None,
             X_fixed: np.ndarray | None = None, workers: int = 1) -> list:
    """Average squared error of every configured estimator at one Δ²."""
    beta = true_beta(cfg, delta2)
    if X_fixed is None:
        X_fixed = fixed_design(cfg)
    reps = np.arange(1, cfg.reps + 1)
    if executor is None:
        losses = _run_reps(cfg, delta2, reps, beta, X_fixed)
    else:
        n_chunks = min(cfg.reps, CHUNKS_PER_WORKER * workers)
        chunks = np.array_split(reps, n_chunks)
        futures = [executor.submit(_run_reps, cfg, delta2, chunk, beta, X_fixed) for chunk in chunks]
        losses = np.concatenate([f.result() for f in futures])
    mse = np.sum(losses, axis=0) / cfg.reps
    return [CellResult(spec, float(m)) for spec, m in zip(cfg.estimators, mse)]


def _table_for(cfg: SimConfig, executor, workers: int) -> EfficiencyTable:
    X_fixed = fixed_design(cfg)
    table = EfficiencyTable()
    for delta2 in cfg.delta2_grid:
        started = time.perf_counter()
        results = run_cell(cfg, delta2, executor, X_fixed, workers)
        baseline = next(c.mse for c in results if c.estimator.estimator_id is EstimatorId.LSE)
        for cell in results:
            table.rows.append(EfficiencyRow(cfg.design_label, delta2, cell.estimator, cell.mse,
                                            relative_efficiency(baseline, cell.mse)))
        logger.info("%s delta2=%g: %d reps in %.1fs", cfg.design_label, delta2, cfg.reps,
                    time.perf_counter() - started)
    return table


def run_experiment(cfg: SimConfig, workers: int | None = None) -> EfficiencyTable:
    """One row per (Δ², estimator) with rel_eff against the same-cell LSE."""
    return run_designs((cfg,), workers)


def run_designs(configs, workers: int | None = None) -> EfficiencyTable:
    """Run several designs in order and concatenate their tables."""
    count = worker_count(workers)
    logger.info("running %d design(s) with %d worker(s)", len(configs), count)
    table = EfficiencyTable()
    if count == 1:
        for cfg in configs:
            table.extend(_table_for(cfg, None, 1))
        return table
    with ProcessPoolExecutor(max_workers=count) as executor:
        for cfg in configs:
            table.extend(_table_for(cfg, executor, count))
    return table
