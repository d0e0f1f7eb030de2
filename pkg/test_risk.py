"""
Analytic risk tests.
Closed-form ADB / ADQR values, limits, dominance orderings, and a
Gaussian-limit Monte Carlo check of every shrinkage-factor risk.
"""
import sys, os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import math

import numpy as np
import pytest

from analysis.risk import (
    RiskContext,
    dominance_report,
    optimal_kappa,
    pte_lse_crossover,
    risk_difference,
    risk_ipt,
    risk_lse,
    risk_prse,
    risk_pte,
    risk_re,
    risk_ridge,
    risk_ridge_general,
    risk_stein,
    stein_dominance_condition,
)
from analysis.distributions import central_quantile
from environment.data import EstimatorId
from utils.errors import DomainError, RequiresP3

GRID = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 50.0, 80.0)


def test_baseline_risks():
    print("=== Baseline Risk Tests ===")
    assert risk_lse(RiskContext(10, 10.0, 3.0)).adqr == 10.0
    assert risk_lse(RiskContext(10, 10.0, 40.0, sigma2=25.0)).adqr == 250.0
    assert risk_lse(RiskContext(10, 10.0, 0.0)).adb_factor == 0.0

    assert risk_re(RiskContext.identity(10, 0.0)).adqr == 0.0
    assert risk_re(RiskContext.identity(10, 10.0)).adqr == 10.0
    assert risk_re(RiskContext.identity(10, 10.0)).adb_factor == -1.0

    with pytest.raises(DomainError):
        RiskContext(10, 10.0, -1.0)
    with pytest.raises(DomainError):
        RiskContext(10, 0.0, 1.0)
    with pytest.raises(DomainError):
        RiskContext(10, 10.0, 1.0, alpha=1.0)
    print("  Baseline risk tests PASSED")


def test_pretest_risk():
    print("=== Pretest Risk Tests ===")
    far = risk_pte(RiskContext.identity(10, 1e4))
    assert abs(far.adqr - 10.0) < 0.1, f"PTE should approach the LSE risk, got {far.adqr}"
    assert abs(far.adb_factor) < 1e-6

    loose = risk_pte(RiskContext.identity(10, 0.0, alpha=0.999))
    assert abs(loose.adqr - 10.0) < 0.1, "a near-certain rejection behaves like the LSE"

    ctx = RiskContext.identity(10, 0.0, alpha=0.05)
    assert risk_pte(ctx).adqr < risk_lse(ctx).adqr
    assert risk_pte(ctx).tuning == {"alpha": 0.05}
    print("  Pretest risk tests PASSED")


def test_stein_risk():
    print("=== Stein Risk Tests ===")
    at_origin = risk_stein(RiskContext.identity(10, 0.0))
    assert abs(at_origin.adqr - 2.0) < 1e-9, f"expected 2.0 at the origin, got {at_origin.adqr}"
    assert abs(at_origin.adb_factor + 0.8) < 1e-12

    far = risk_stein(RiskContext.identity(10, 1e4))
    assert abs(far.adqr - 10.0) < 0.1

    values = [risk_stein(RiskContext.identity(10, d2)).adqr for d2 in GRID]
    assert all(a < b for a, b in zip(values, values[1:])), "Stein risk increases in Δ²"
    assert all(v < 10.0 for v in values)

    plus = risk_prse(RiskContext.identity(10, 0.0))
    assert plus.adqr < at_origin.adqr
    assert plus.estimator_id is EstimatorId.SPLUS
    far_plus = risk_prse(RiskContext.identity(10, 1e4))
    assert abs(far_plus.adqr - far.adqr) < 1e-6

    with pytest.raises(RequiresP3):
        risk_stein(RiskContext.identity(2, 1.0))
    with pytest.raises(RequiresP3):
        risk_ipt(RiskContext.identity(2, 1.0))
    print("  Stein risk tests PASSED")


def test_dominance_orderings():
    print("=== Dominance Ordering Tests ===")
    for p in (5, 10, 20):
        for d2 in GRID:
            ctx = RiskContext.identity(p, d2)
            lse, s, splus = risk_lse(ctx).adqr, risk_stein(ctx).adqr, risk_prse(ctx).adqr
            assert splus <= s + 1e-9, f"S+ above S at p={p}, Δ²={d2}"
            assert s <= lse + 1e-9, f"S above LSE at p={p}, Δ²={d2}"
            for alpha in (0.05, 0.15, 0.25):
                actx = RiskContext.identity(p, d2, alpha=alpha)
                assert risk_ipt(actx).adqr <= risk_pte(actx).adqr + 1e-9, \
                    f"IPT above PTE at p={p}, Δ²={d2}, alpha={alpha}"
            for report in (risk_pte(ctx), risk_ipt(ctx), risk_prse(ctx)):
                assert report.adqr >= 0.0
    print("  Dominance ordering tests PASSED")


def test_gaussian_limit_monte_carlo():
    print("=== Gaussian Limit Monte Carlo Tests ===")
    p, alpha = 10, 0.15
    chunks, chunk = 10, 100_000
    draws = chunks * chunk
    critical = central_quantile(alpha, p)
    rng = np.random.default_rng(2024)
    names = (EstimatorId.LSE, EstimatorId.RE, EstimatorId.PTE, EstimatorId.S,
             EstimatorId.SPLUS, EstimatorId.IPT)
    for d2 in (0.0, 1.0, 5.0, 10.0, 25.0):
        # beta_tilde ~ N(delta, I), sigma² = 1, C = I, so L = ||beta_tilde||²
        shift = math.sqrt(d2)
        sums = {eid: np.zeros(4) for eid in names}
        for _ in range(chunks):
            Z = rng.standard_normal((chunk, p))
            Z[:, 0] += shift
            L = np.einsum("ij,ij->i", Z, Z)
            stein_f = 1.0 - (p - 2) / L
            factors = {
                EstimatorId.LSE: np.ones(chunk),
                EstimatorId.RE: np.zeros(chunk),
                EstimatorId.PTE: (L >= critical).astype(float),
                EstimatorId.S: stein_f,
                EstimatorId.SPLUS: np.maximum(stein_f, 0.0),
                EstimatorId.IPT: stein_f * (L >= critical),
            }
            for eid, f in factors.items():
                # ||f Z - delta||² with delta = shift * e_1
                loss = f * f * L - 2.0 * f * Z[:, 0] * shift + d2
                along = f * Z[:, 0]
                sums[eid] += (loss.sum(), (loss * loss).sum(), along.sum(), (along * along).sum())

        ctx = RiskContext.identity(p, d2, alpha=alpha)
        analytic = {
            EstimatorId.LSE: risk_lse(ctx), EstimatorId.RE: risk_re(ctx),
            EstimatorId.PTE: risk_pte(ctx), EstimatorId.S: risk_stein(ctx),
            EstimatorId.SPLUS: risk_prse(ctx), EstimatorId.IPT: risk_ipt(ctx),
        }
        for eid in names:
            s, ss, a, aa = sums[eid]
            mean = s / draws
            se = math.sqrt(max(ss / draws - mean * mean, 0.0) / draws)
            # 3 SE for the tabulated estimators
            width = 4.0 if eid is EstimatorId.IPT else 3.0
            assert abs(analytic[eid].adqr - mean) <= width * se + 1e-9, \
                f"{eid.value} at Δ²={d2}: analytic {analytic[eid].adqr:.5f}, MC {mean:.5f} ± {se:.5f}"
            # ADB: E[f Z] = (1 + b) delta along the first coordinate
            if shift > 0:
                m = a / draws
                bias = m / shift - 1.0
                bias_se = math.sqrt(max(aa / draws - m * m, 0.0) / draws) / shift
                assert abs(analytic[eid].adb_factor - bias) <= 4.0 * bias_se + 1e-9, \
                    f"{eid.value} bias at Δ²={d2}"
    print("  Gaussian limit Monte Carlo tests PASSED")


def test_ridge_risk():
    print("=== Ridge Risk Tests ===")
    assert risk_ridge(RiskContext.identity(10, 7.0), 0.0).adqr == 10.0
    assert abs(risk_ridge(RiskContext.identity(10, 10.0), 1.0).adqr - 5.0) < 1e-12
    assert abs(risk_ridge(RiskContext.identity(10, 5.0), 1e8).adqr - 5.0) < 1e-6
    assert risk_ridge(RiskContext.identity(10, 5.0), math.inf).adqr == 5.0

    assert optimal_kappa(10, 10.0) == 1.0
    assert optimal_kappa(10, 1.0) == 10.0
    assert math.isinf(optimal_kappa(10, 0.0))
    with pytest.raises(DomainError):
        optimal_kappa(10, -1.0)
    with pytest.raises(DomainError):
        risk_ridge(RiskContext.identity(10, 1.0), -0.5)

    for d2 in (0.5, 3.0, 12.0):
        ctx = RiskContext.identity(10, d2)
        best = optimal_kappa(10, d2)
        scan = np.geomspace(0.01 * best, 100.0 * best, 201)
        risks = [risk_ridge(ctx, k).adqr for k in scan]
        i = int(np.argmin(risks))
        assert abs(math.log(scan[i] / best)) <= math.log(scan[1] / scan[0]) + 1e-12
        assert risk_ridge(ctx, best).adqr <= min(risks) + 1e-12
        # at the optimum ridge risk is p Δ² / (p + Δ²), never above LSE or RE
        assert abs(risk_ridge(ctx, best).adqr - 10.0 * d2 / (10.0 + d2)) < 1e-12

    delta = np.zeros(10)
    delta[0] = math.sqrt(7.0)
    for kappa in (0.0, 0.3, 4.0):
        general = risk_ridge_general(np.eye(10), delta, 1.0, kappa)
        assert abs(general - risk_ridge(RiskContext.identity(10, 7.0), kappa).adqr) < 1e-10
    print("  Ridge risk tests PASSED")


def test_dominance_report():
    print("=== Dominance Report Tests ===")
    grid = (0.0, 5.0, 9.5, 10.0, 10.5, 20.0)
    report = dominance_report([RiskContext.identity(10, d2) for d2 in grid])
    re_lse = report.comparison("RE", "LSE")
    assert re_lse.regions == ((0.0, 9.5, "RE"), (10.0, 10.0, "tie"), (10.5, 20.0, "LSE"))
    assert re_lse.winner_at(5.0) == "RE"
    assert re_lse.winner_at(20.0) == "LSE"
    assert report.re_lse_boundary == 10.0
    assert report.stein_condition is None
    assert all(w == "S" for _, _, w in report.comparison("S", "LSE").regions)
    assert set(report.risks) == {"LSE", "RE", "PTE", "RR", "S", "S+", "IPT"}

    small = dominance_report([RiskContext.identity(2, d2) for d2 in (0.0, 1.0)])
    assert "S" not in small.risks

    with pytest.raises(DomainError):
        dominance_report([RiskContext.identity(10, 0.0), RiskContext.identity(5, 1.0)])

    ctx = RiskContext.identity(10, 0.0)
    crossing = pte_lse_crossover(ctx)
    assert 0.0 < crossing < 50.0
    at = risk_pte(ctx.with_delta2(crossing)).adqr
    assert abs(at - 10.0) < 1e-6
    assert risk_pte(ctx.with_delta2(0.5 * crossing)).adqr < 10.0

    assert risk_difference(risk_re(RiskContext.identity(10, 4.0)),
                           risk_lse(RiskContext.identity(10, 4.0))) == -6.0
    print("  Dominance report tests PASSED")


def test_stein_condition():
    assert stein_dominance_condition(np.ones(10))
    assert not stein_dominance_condition([10.0, 1.0, 1.0])
    # equality counts as satisfied: tr / max = 3 = (4 + 2) / 2
    assert stein_dominance_condition([2.0, 2.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        stein_dominance_condition([1.0, -1.0])


def main():
    print("\n" + "=" * 50)
    print("  shrinkbench: Analytic Risk Test Suite")
    print("=" * 50 + "\n")

    test_baseline_risks()
    test_pretest_risk()
    test_stein_risk()
    test_dominance_orderings()
    test_gaussian_limit_monte_carlo()
    test_ridge_risk()
    test_dominance_report()
    test_stein_condition()

    print("\n" + "=" * 50)
    print("  ALL TESTS PASSED")
    print("=" * 50 + "\n")


if __name__ == "__main__":
    main()
