"""Exit criteria. Each test records one PASS/FAIL line (shown in the terminal summary)."""

import math
from pathlib import Path

import numpy as np
import pytest

from toeplitz_lab.determinants import (geometric_mean, log_det_sequence, regularized_det,
                                       regularized_det_direct, szego_constant)
from toeplitz_lab.factorization import scalar_canonical_factor
from toeplitz_lab.harness.config import ScenarioConfig
from toeplitz_lab.harness.runner import build_symbol, rate_fit, run_scenario, truncation_check
from toeplitz_lab.operators import hankel_singular_values
from toeplitz_lab.symbols import exp_lacunary, lacunary_series, laurent, tridiagonal
from toeplitz_lab.traces import AnalyticFunctionSpec, ContourSpec, ef_constant, trace_f

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def scenario(name):
    return run_scenario(ScenarioConfig.load(CONFIGS / f"{name}.json"))


@pytest.fixture(scope="module")
def removal_runs():
    return scenario("removal"), scenario("removal_control")


def test_c1_tridiagonal_exactness(verdict):
    a = tridiagonal(0.5, 0.3)
    s = log_det_sequence(a, 64)
    n = np.arange(65)
    exact = (1 - 0.15 ** (n + 2)) / 0.85
    rel = float(np.abs(np.exp(s.values) / exact - 1).max())
    G = geometric_mean(a)
    sc = szego_constant(a, scalar_canonical_factor(a), 256)
    ok = rel <= 1e-10 and abs(G - 1) <= 1e-12 and abs(sc.E1 - 1 / 0.85) <= 1e-8
    verdict(1, ok, f"det rel err {rel:.2e}, |G-1| {abs(G - 1):.1e}, |E1-1/0.85| {abs(sc.E1 - 1 / 0.85):.1e}")
    assert ok


def test_c2_duality(verdict):
    errs = []
    for a in (tridiagonal(0.5, 0.3), exp_lacunary(0.5, 0, 0.2)):
        sc = szego_constant(a, scalar_canonical_factor(a), 256)
        errs.append(abs(sc.E1 * np.exp(sc.dual_log) - 1))
    ok = max(errs) <= 1e-6
    verdict(2, ok, f"|E1 det1(dual) - 1| = {errs[0]:.1e} (tridiagonal), {errs[1]:.1e} (exp 0.2cos)")
    assert ok


def test_c3_regularized_det(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        K = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        K *= rng.uniform(0.1, 0.9) / np.abs(np.linalg.eigvals(K)).max()
        for m in (1, 2, 3):
            worst = max(worst, abs(regularized_det(K, m) - regularized_det_direct(K, m)))
    ok = worst <= 1e-8
    verdict(3, ok, f"max |eig - direct| over 20 contractions, m=1..3: {worst:.1e}")
    assert ok


def test_c4_hankel_decay(verdict):
    a = lacunary_series(0.4, 10)
    s = hankel_singular_values(a)
    k = np.arange(8, 129)
    fit = rate_fit(k, s[k - 1])
    ok = -0.5 <= fit.slope <= -0.3
    verdict(4, ok, f"s_k slope over [8,128] = {fit.slope:.3f} (target [-0.5,-0.3])")
    assert ok


def test_c5_higher_order_gain(verdict):
    rep = scenario("lacunary_m2")
    rows = [r for r in rep.rows if r["n"] >= 32]
    gain = all(abs(r["hoC"]) <= abs(r["widom"]) for r in rows)
    ratios = np.array([r["ratio"] for r in rows])
    band = float(ratios.max() / ratios.min())
    ok = gain and np.all(np.isfinite(ratios)) and band <= 5
    verdict(5, ok, f"|hoC| <= |widom| for n>=32: {gain}; ratio band max/min = {band:.2f} (<= 5)")
    assert ok


@pytest.mark.xfail(strict=True, reason="hoC - hoD equals -tr F_{n,1}, which is not small relative to hoC "
                                       "at desk-scale n; see the decisions ledger")
def test_c6_removal(verdict, removal_runs):
    rep, _ = removal_runs
    last = rep.rows[-1]
    gap, hoC = abs(last["hoC"] - last["hoD"]), abs(last["hoC"])
    tf = rep.checks["traceF"]
    ok = gap < 0.1 * hoC
    verdict(6, ok, f"n={last['n']}: |hoC-hoD| = {gap:.2e} vs 0.1|hoC| = {0.1 * hoC:.2e}; "
                   f"|tr F_n,1| {tf[0]['trace_F']:.2e} -> {tf[-1]['trace_F']:.2e}, "
                   f"removal {tf[0]['removal']:.3f} -> {tf[-1]['removal']:.3f}")
    assert ok


def test_c6_negative_control(removal_runs):
    rep, ctrl = removal_runs
    last = ctrl.rows[-1]
    # the control keeps a persistent gap and its removal quantity does not decay
    assert abs(last["hoC"] - last["hoD"]) >= 0.1 * abs(last["hoC"])
    tf = ctrl.checks["traceF"]
    assert tf[-1]["removal"] > 0.5 * tf[0]["removal"]
    # with the condition in force the trace of F_{n,1} does shrink
    r = rep.checks["traceF"]
    assert r[-1]["trace_F"] < 0.3 * r[0]["trace_F"]
    assert r[-1]["removal"] < r[0]["removal"]


def test_c7_trace_identity(verdict):
    a = laurent({1: 1, -1: 1})
    f = AnalyticFunctionSpec.power(2)
    exact = all(trace_f(a, f, n).exact - 2 * (n + 1) + 2 == 0 for n in range(1, 65))
    rep = scenario("traces_exp")
    rem = abs(next(r["trace_rem"] for r in rep.rows if r["n"] == 64))
    ok = exact and rem < 1e-8
    verdict(7, ok, f"integer identity n=1..64: {exact}; exp(0.2cos) remainder at n=64 = {rem:.1e}")
    assert ok


def test_c8_contour_constant(verdict):
    a = tridiagonal(0.5, 0.3)
    vals = [ef_constant(a, AnalyticFunctionSpec.log(), ContourSpec(1.15, r)).value for r in (0.9, 1.125)]
    errs = [abs(v + math.log(0.85)) for v in vals]
    ok = max(errs) <= 1e-6
    verdict(8, ok, f"|E_log + log 0.85| at radius 0.9, 1.125: {errs[0]:.1e}, {errs[1]:.1e}")
    assert ok


def test_c9_truncation_bounds(verdict):
    out = []
    for name in ("tridiagonal", "trunc_lacunary"):
        _, pair = build_symbol(ScenarioConfig.load(CONFIGS / f"{name}.json"))
        out.append(truncation_check(pair))
    ok = all(np.isfinite(c["max_ratio"]) and c["growth"] <= 2 for c in out)
    verdict(9, ok, "max norm/bound, growth n>=64 vs n<=16: "
                   + "; ".join(f"{c['max_ratio']:.3f}, {c['growth']:.2f}" for c in out))
    assert ok


def test_c10_delta_dichotomy(verdict):
    sharp, h0 = scenario("delta_sharp"), scenario("delta_h0")
    ok = h0.delta.o_case and not sharp.delta.o_case and sharp.delta.bounded
    verdict(10, ok, f"trend sharp {sharp.delta.trend:.3f} (o-case {sharp.delta.o_case}), "
                    f"H0 {h0.delta.trend:.3f} (o-case {h0.delta.o_case}), threshold 0.3")
    assert ok
