"""Scenario execution: materialize, factor, compute remainders, fit rates."""

from __future__ import annotations

import math
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

from .. import __version__
from ..determinants import Remainders, ho_remainders, szego_constant
from ..errors import ToeplitzLabError
from ..factorization import (FactorPair, fixture_block_symbol, invertibility_probe,
                             scalar_canonical_factor)
from ..operators import hankel_singular_values, hankel_sv_size, truncation_norms
from ..regularity import removal_condition
from ..symbols import FourierSymbol
from ..traces import ContourSpec, ef_constant, gf_constant, spectrum_hull, trace_f
from .config import ScenarioConfig

CSV_COLUMNS = ("n", "log_det_re", "log_det_im", "widom_rem", "hoC_rem", "hoD_rem",
               "hoE_int", "tail", "ratio", "trace_rem")
# band above which Hankel tail norms are skipped in the truncation check
TRUNC_HANKEL_BAND = 1500


@dataclass
class RateFit:
    slope: float
    stderr: float
    intercept: float
    points: int
    reason: str = ""

    @property
    def ok(self) -> bool:
        return not self.reason


def rate_fit(ns, values, window: tuple[float, float] | None = None) -> RateFit:
    """Least-squares slope of log value against log n; stderr is the residual standard error."""
    ns = np.asarray(ns, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        keep = (ns >= window[0]) & (ns <= window[1])
        ns, v = ns[keep], v[keep]
    if ns.size < 5:
        return RateFit(math.nan, math.nan, math.nan, int(ns.size), "fewer than 5 points in window")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        return RateFit(math.nan, math.nan, math.nan, int(ns.size), "nonpositive or non-finite values")
    x, y = np.log(ns), np.log(v)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    return RateFit(float(coef[0]), float(np.sqrt(resid @ resid / dof)), float(coef[1]), int(ns.size))


@dataclass
class DeltaClass:
    first: float
    last: float
    trend: float
    threshold: float
    window: int
    o_case: bool
    bounded: bool


def classify_delta(ratios, threshold: float = 0.3, window: int = 3) -> DeltaClass:
    """o-case when the last-window mean ratio drops below threshold x the first-window mean."""
    r = np.asarray([x for x in ratios if np.isfinite(x)], dtype=float)
    if r.size < 2 * window:
        return DeltaClass(math.nan, math.nan, math.nan, threshold, window, False, False)
    first, last = float(r[:window].mean()), float(r[-window:].mean())
    trend = last / first if first > 0 else math.nan
    o_case = bool(trend < threshold)
    bounded = bool(np.all(r > 0) and np.all(np.isfinite(r)) and not o_case)
    return DeltaClass(first, last, trend, threshold, window, o_case, bounded)


@dataclass
class AsymptoticsReport:
    name: str
    rows: list[dict]
    constants: dict
    fits: dict
    checks: dict
    delta: DeltaClass | None
    config: dict
    environment: dict
    errors: list[str] = field(default_factory=list)


def environment() -> dict:
    return {"toeplitz_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def build_symbol(cfg: ScenarioConfig) -> tuple[FourierSymbol, FactorPair]:
    a, facs = cfg.symbol.build()
    if facs is not None:
        a, pair = fixture_block_symbol(facs["u_minus"], facs["u_plus"], facs["v_plus"], facs["v_minus"])
    else:
        pair = scalar_canonical_factor(a)
    return a, pair


def _default_contour(a, f) -> ContourSpec:
    hull = spectrum_hull(a)
    return ContourSpec(hull.center, max(1.25 * hull.radius, 1e-2), 256)


def truncation_check(pair: FactorPair, ns=(8, 16, 32, 64, 128)) -> dict:
    """Measured ||Q_n T(b) Delta_j|| over its modulus bound for j in {0, n/2, n}."""
    table = []
    for n in ns:
        for j in sorted({0, n // 2, n}):
            t = truncation_norms(pair, n, j, hankel=pair.b.band <= TRUNC_HANKEL_BAND)
            table.append({"n": n, "j": j, "norm": t.qtb_delta, "bound": t.bound_qtb_delta,
                          "ratio": t.ratios()[0], "ratios": list(t.ratios())})
    r = np.array([row["ratio"] for row in table])
    small = max(row["ratio"] for row in table if row["n"] <= 16)
    large = max(row["ratio"] for row in table if row["n"] >= 64) if any(row["n"] >= 64 for row in table) else small
    return {"rows": table, "max_ratio": float(r.max()), "growth": float(large / small) if small > 0 else math.nan}


def run_scenario(cfg: ScenarioConfig, workers: int | None = None) -> AsymptoticsReport:
    """Run every stage of a scenario; optional stages record errors instead of aborting."""
    workers = workers or cfg.workers
    errors: list[str] = []
    a, pair = build_symbol(cfg)
    probe = invertibility_probe(a)
    if not (probe.toeplitz_invertible and probe.tilde_invertible):
        errors.append("invertibility probe failed: results may not be meaningful")
    consts = szego_constant(a, pair, cfg.M, cfg.method)
    rem: Remainders = ho_remainders(a, pair, cfg.omega, cfg.psi, cfg.m, cfg.schedule, cfg.M,
                                    cfg.method, consts, workers)
    constants = {"G": consts.G, "log_G": consts.log_G, "E1": consts.E1, "log_E1": consts.log_E1,
                 "log_E_fit": rem.log_E, "log_E_spread": rem.log_E_spread,
                 "dual_discrepancy": consts.discrepancy, "E1_stable": consts.stable,
                 "method": consts.method, "log_det_m_dual": rem.dual_log_m,
                 "tail_convergent": rem.tail_convergent}

    trace_rem = {}
    if cfg.f is not None:
        try:
            contour = cfg.contour or _default_contour(a, cfg.f)
            Gf = gf_constant(a, cfg.f)
            ef = ef_constant(a, cfg.f, contour, cfg.M)
            constants.update({"G_f": Gf, "E_f": ef.value, "E_f_nodes": ef.nodes})
            for n in cfg.schedule:
                trace_rem[n] = trace_f(a, cfg.f, n).value - (n + 1) * Gf - ef.value
        except ToeplitzLabError as exc:
            errors.append(f"traces: {exc}")

    rows = []
    for r in rem.rows:
        rows.append({"n": r.n, "log_det": r.log_det, "widom": r.widom, "hoC": r.hoC, "hoD": r.hoD,
                     "hoE": r.hoE, "tail": r.tail, "ratio": r.ratio,
                     "trace_rem": trace_rem.get(r.n), "trace_F_last": r.trace_last})

    ns = [r["n"] for r in rows]
    fits = {"widom": rate_fit(ns, [abs(r["widom"]) for r in rows]),
            "hoC": rate_fit(ns, [abs(r["hoC"]) for r in rows]),
            "tail": rate_fit(ns, [r["tail"] for r in rows])}
    checks: dict = {"probe": probe}
    if "hankel" in cfg.checks and a.block_size == 1:
        lo, hi = cfg.hankel_range
        s = hankel_singular_values(a, hankel_sv_size(a, hi))
        k = np.arange(lo, hi + 1)
        fits["hankel_sv"] = rate_fit(k, s[k - 1])
    if "trunc" in cfg.checks:
        try:
            checks["trunc"] = truncation_check(pair)
        except ToeplitzLabError as exc:
            errors.append(f"trunc: {exc}")
    if "traceF" in cfg.checks and cfg.m >= 2:
        tf = []
        for r in rows:
            if r["n"] >= 1:
                rc = removal_condition(cfg.omega, cfg.psi, cfg.m, r["n"])
                tf.append({"n": r["n"], "trace_F": abs(r["trace_F_last"]), "removal": rc,
                           "gap": abs(r["hoC"] - r["hoD"])})
        checks["traceF"] = tf
    delta = classify_delta([r["ratio"] for r in rows], cfg.trend_threshold, cfg.window)
    return AsymptoticsReport(cfg.name, rows, constants, fits, checks, delta, cfg.to_record(),
                             environment(), errors)
