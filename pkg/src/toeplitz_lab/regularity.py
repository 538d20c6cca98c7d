"""Characteristic functions of Bari-Stechkin type and generalized Hoelder data.

A characteristic function has the form

    omega(x) = x^gamma * prod_k ell_k(b_k / x)^beta_k,   0 < x <= pi,

with ell_1 = log and ell_k = log o ell_{k-1}.  Everything here is numeric:
class membership, Hoelder seminorms and vanishing-ratio behaviour are
estimated on explicit grids and reported together with the raw numbers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError
from .symbols import FourierSymbol, sample_grid

# direct summation cutoff for tail sums; beyond it an integral bracket is used
TAIL_DIRECT_LIMIT = 10**6


def iterated_log(x, k: int):
    """ell_k(x): ell_0 = identity, ell_1 = log, ell_k = log(ell_{k-1})."""
    y = np.asarray(x, dtype=float)
    for _ in range(k):
        y = np.log(y)
    return y


def _tower(k: int, y: float) -> float:
    # inverse of ell_k: exp applied k times
    for _ in range(k):
        y = math.exp(y)
    return y


def default_log_constant(k: int) -> float:
    """b_k with ell_{k-1}(b_k / pi) = e, so every ell_k(b_k / x) >= 1 on (0, pi]."""
    return math.pi * _tower(k - 1, math.e)


@dataclass(frozen=True)
class CharFunction:
    gamma: float
    log_factors: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        facs = []
        for k, (beta, b) in enumerate(self.log_factors, start=1):
            b = default_log_constant(k) if b in (None, "auto") else float(b)
            if b <= 0:
                raise DomainError("log constants b_k must be positive")
            # ell_k(b/x) needs ell_{k-1}(b/x) > 1 on (0, pi]; smallest argument is b/pi
            if k > 1 and not iterated_log(b / math.pi, k - 1) > 1:
                raise DomainError(f"ell_{k}(b_{k}/x) undefined near x = pi for b_{k} = {b}")
            if k == 1 and not b / math.pi > 1:
                raise DomainError(f"ell_1(b_1/x) must be positive on (0, pi]; b_1 = {b}")
            facs.append((float(beta), b))
        object.__setattr__(self, "log_factors", tuple(facs))

    @classmethod
    def power(cls, gamma: float) -> "CharFunction":
        return cls(gamma)

    @classmethod
    def from_record(cls, rec: dict) -> "CharFunction":
        logs = tuple((float(f["beta"]), f.get("b", "auto")) for f in rec.get("logs", []))
        return cls(float(rec["gamma"]), logs)

    def to_record(self) -> dict:
        return {"gamma": self.gamma,
                "logs": [{"beta": beta, "b": b} for beta, b in self.log_factors]}

    def __call__(self, x):
        return char_eval(self, x)

    @property
    def log_exponents(self) -> tuple[float, ...]:
        return tuple(beta for beta, _ in self.log_factors)


def char_eval(w: CharFunction, x):
    """omega(x) for x in (0, pi]; vectorized."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or np.any(xa > math.pi * (1 + 1e-12)):
        raise DomainError("characteristic functions live on (0, pi]")
    val = xa ** w.gamma
    for k, (beta, b) in enumerate(w.log_factors, start=1):
        ell = iterated_log(b / xa, k)
        if np.any(ell <= 0):
            raise DomainError(f"ell_{k} argument below its threshold")
        val = val * ell ** beta
    return val if val.ndim else float(val)


def _log_profile_lx(w: CharFunction, lx):
    # log omega as a function of log x; no underflow for tiny x
    lx = np.asarray(lx, dtype=float)
    out = w.gamma * lx
    for k, (beta, b) in enumerate(w.log_factors, start=1):
        ell = math.log(b) - lx
        for _ in range(k - 1):
            ell = np.log(ell)
        out = out + beta * np.log(ell)
    return out


def _log_profile(w: CharFunction, x) -> np.ndarray:
    return _log_profile_lx(w, np.log(x))


def almost_increasing_constant(w: CharFunction, decades: float = 40.0, points: int = 400) -> float:
    """max over a log grid of omega(x)/omega(y), x <= y (1 for increasing functions)."""
    xs = math.pi * 10.0 ** (-np.linspace(decades, 0, points))
    lw = _log_profile(w, xs)
    running_min_from_right = np.minimum.accumulate(lw[::-1])[::-1]
    return float(np.exp(np.max(lw - running_min_from_right)))


@dataclass(frozen=True)
class BariStechkinMargins:
    sup1: float
    sup2: float
    diverged1: bool
    diverged2: bool
    scales: int


def bari_stechkin_margins(w: CharFunction, scales: int = 241, decades: float = 60.0) -> BariStechkinMargins:
    """The two Zygmund-type suprema of the Bari-Stechkin class on a log grid.

    sup_x (1/omega(x)) int_0^x omega(y)/y dy  and  sup_x (x/omega(x)) int_x^pi omega(y)/y^2 dy,
    with y = x 2^{-s} (resp. y = x 2^{s}) so both integrals run over s.
    """
    xs = math.pi * 10.0 ** (-np.linspace(0, decades, scales))
    ln2 = math.log(2.0)
    s1 = s2 = 0.0
    bad1 = bad2 = False
    for x in xs:
        lx = math.log(x)
        lwx = float(_log_profile_lx(w, lx))

        def f1(s):
            return math.exp(float(_log_profile_lx(w, lx - s * ln2)) - lwx)

        def f2(s):
            return math.exp(float(_log_profile_lx(w, lx + s * ln2)) - lwx - s * ln2)

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v1, _ = integrate.quad(f1, 0, np.inf, limit=200)
            except (integrate.IntegrationWarning, OverflowError):
                v1, bad1 = np.inf, True
            upper = math.log2(math.pi / x)
            try:
                v2 = integrate.quad(f2, 0, upper, limit=200)[0] if upper > 0 else 0.0
            except (integrate.IntegrationWarning, OverflowError):
                v2, bad2 = np.inf, True
        s1 = max(s1, ln2 * v1)
        s2 = max(s2, ln2 * v2)
    return BariStechkinMargins(float(s1), float(s2), bad1 or not np.isfinite(s1),
                               bad2 or not np.isfinite(s2), scales)


# ---------------------------------------------------------------------------
# moduli of continuity
# ---------------------------------------------------------------------------

def _values(f, M: int) -> np.ndarray:
    if isinstance(f, FourierSymbol):
        if not f.is_scalar:
            raise DomainError("modulus of continuity is taken entrywise; pass a scalar symbol")
        return sample_grid(f, M)[:, 0, 0]
    v = np.asarray(f, dtype=complex)
    if v.shape != (M,):
        raise DomainError("sampled function must have exactly M values")
    return v


def entry(a: FourierSymbol, alpha: int, beta: int) -> FourierSymbol:
    """The scalar symbol a_{alpha beta}."""
    return FourierSymbol(a.coeffs[:, alpha:alpha + 1, beta:beta + 1])


class ShiftProfile:
    """Cumulative sup over grid shifts: d[s] = max_{s' <= s} max_y |f(y + h_{s'}) - f(y)|.

    Building once and reading many scales keeps the cost at one pass over shifts.
    """

    def __init__(self, f, M: int = 4096, max_scale: float = math.pi):
        if M < 4096:
            raise DomainError("modulus estimates need a grid of at least 4096 points")
        self.M = M
        v = _values(f, M)
        self.sup = float(np.abs(v).max())
        smax = min(M // 2, int(math.floor(max_scale * M / (2 * math.pi) + 1e-9)))
        d = np.zeros(smax + 1)
        for s in range(1, smax + 1):
            d[s] = np.abs(np.roll(v, -s) - v).max()
        self.d = np.maximum.accumulate(d)

    def __call__(self, x: float) -> float:
        s = int(math.floor(x * self.M / (2 * math.pi) + 1e-9))
        if s >= len(self.d):
            raise DomainError("scale beyond the profile range")
        return float(self.d[s])


def modulus_estimate(f, x: float, M: int = 4096) -> float:
    """Grid lower bound of omega(f, x) = sup_{|h|<=x} sup_y |f(e^{i(y+h)}) - f(e^{iy})|."""
    if not 0 <= x <= math.pi:
        raise DomainError("scale must lie in [0, pi]")
    return ShiftProfile(f, M, max_scale=x)(x)


def matrix_modulus(a: FourierSymbol, x: float, M: int = 4096) -> float:
    """max over entries of the entrywise modulus of continuity."""
    return max(modulus_estimate(entry(a, i, j), x, M)
               for i in range(a.block_size) for j in range(a.block_size))


@dataclass
class ModulusProfile:
    scales: np.ndarray
    values: np.ndarray
    ratios: np.ndarray
    seminorm: float
    vanishing: bool
    grid_size: int
    sup_norm: float = 0.0
    extra: dict = field(default_factory=dict)


def dyadic_scales(levels: int) -> np.ndarray:
    return math.pi * 2.0 ** -np.arange(levels + 1)


def holder_seminorm(f, w: CharFunction, levels: int = 10, M: int | None = None,
                    vanish_factor: float = 0.1) -> ModulusProfile:
    """|f|_omega on the scales pi 2^{-i}, i <= levels, plus an H_0^omega proxy.

    ``vanishing`` is true when the ratios at the three smallest scales are
    strictly decreasing and each below ``vanish_factor`` times the maximum.
    """
    M = M or max(4096, 1 << (levels + 4))
    prof = ShiftProfile(f, M)
    xs = dyadic_scales(levels)
    vals = np.array([prof(x) for x in xs])
    ratios = vals / char_eval(w, xs)
    top = float(ratios.max())
    tail = ratios[-3:]
    vanishing = bool(top > 0 and np.all(np.diff(tail) < 0) and np.all(tail < vanish_factor * top))
    if top == 0:
        vanishing = True
    return ModulusProfile(xs, vals, ratios, top, vanishing, M, prof.sup)


# ---------------------------------------------------------------------------
# summability conditions
# ---------------------------------------------------------------------------

def _product_log(w: CharFunction, p: CharFunction, m: int, k: np.ndarray) -> np.ndarray:
    return _product_log_u(w, p, m, np.log(k))


def _product_log_u(w, p, m, u):
    # log of [omega(1/k) psi(1/k)]^m at u = log k
    return m * (_log_profile_lx(w, -u) + _log_profile_lx(p, -u))


def _integrand(w, p, m):
    # sum_k g(k) ~ int g(e^u) e^u du
    return lambda u: math.exp(u + float(_product_log_u(w, p, m, u)))


def _summand(w, p, m, k):
    return np.exp(_product_log(w, p, m, np.asarray(k, dtype=float)))


def tail_term(w: CharFunction, p: CharFunction, m: int, k: int) -> float:
    """[omega(1/k) psi(1/k)]^m, the k-th summand of the tail series."""
    return float(_summand(w, p, m, np.array([float(k)]))[0])


def series_converges(w: CharFunction, p: CharFunction, m: int) -> bool:
    """Exact convergence test for sum_k [omega(1/k) psi(1/k)]^m.

    The summand is k^{-m(gamma_w + gamma_p)} times a product of iterated logs;
    the power decides unless it equals -1, then the first nonzero log exponent
    (which must be < -1 at that level, else the next level decides).
    """
    expo = m * (w.gamma + p.gamma)
    if not math.isclose(expo, 1.0, rel_tol=0, abs_tol=1e-12):
        return expo > 1.0
    depth = max(len(w.log_factors), len(p.log_factors))
    for k in range(depth):
        beta = m * ((w.log_exponents[k] if k < len(w.log_factors) else 0.0)
                    + (p.log_exponents[k] if k < len(p.log_factors) else 0.0))
        # sum 1/(k ell_1 ... ell_{j-1}) ell_j^{beta}: converges iff beta < -1 at the first level != -1
        if not math.isclose(beta, -1.0, abs_tol=1e-12):
            return beta < -1.0
    return False


@dataclass(frozen=True)
class TailSum:
    value: float
    convergent: bool
    lower: float
    upper: float


@lru_cache(maxsize=64)
def _tail_table(w: CharFunction, p: CharFunction, m: int):
    K = TAIL_DIRECT_LIMIT
    k = np.arange(1, K + 1, dtype=float)
    g = _summand(w, p, m, k)
    conv = series_converges(w, p, m)
    if conv:
        # integral bracket of sum_{k > K} g(k), substituting x = e^u
        h = _integrand(w, p, m)
        lo = integrate.quad(h, math.log(K + 1), np.inf, limit=400)[0]
        hi = integrate.quad(h, math.log(K), np.inf, limit=400)[0]
        rem = 0.5 * (lo + hi)
    else:
        lo = hi = rem = np.inf
    # tails[n] = sum_{k > n} g(k); built by sequential addition so tails[n] = tails[n+1] + g[n+1]
    tails = np.empty(K + 1)
    tails[K] = rem
    acc = rem
    for n in range(K - 1, -1, -1):
        acc = acc + g[n]
        tails[n] = acc
    return tails, conv, lo, hi


def tail_sum(w: CharFunction, p: CharFunction, m: int, n: int) -> TailSum:
    """sum_{k=n+1}^inf [omega(1/k) psi(1/k)]^m with a two-sided bracket.

    Exact summation to k = 10^6 plus an integral-test bracket for the rest;
    ``value`` uses the midpoint of the bracket.
    """
    if m < 1:
        raise DomainError("m must be at least 1")
    if n < 0:
        raise DomainError("n must be nonnegative")
    tails, conv, lo, hi = _tail_table(w, p, m)
    if not conv:
        return TailSum(math.inf, False, math.inf, math.inf)
    K = TAIL_DIRECT_LIMIT
    if n <= K:
        v = float(tails[n])
        rem_mid = tails[K]
        return TailSum(v, True, float(v - rem_mid + lo), float(v - rem_mid + hi))

    h = _integrand(w, p, m)
    lo_n = integrate.quad(h, math.log(n + 1), np.inf, limit=400)[0]
    hi_n = integrate.quad(h, math.log(n), np.inf, limit=400)[0]
    return TailSum(0.5 * (lo_n + hi_n), True, lo_n, hi_n)


def removal_condition(w: CharFunction, p: CharFunction, m: int, n: int) -> float:
    """[omega(1/n) psi(1/n)]^{m-1} * sum_{j<=n} omega(1/j) psi(1/j)."""
    if m < 2:
        raise DomainError("the removal condition needs m >= 2")
    if n < 1:
        raise DomainError("n must be positive")
    j = np.arange(1, n + 1, dtype=float)
    partial = float(np.sum(_summand(w, p, 1, j)))
    return float(_summand(w, p, m - 1, np.array([float(n)]))[0]) * partial
