"""Finite Toeplitz determinants, Szego constants and regularized determinants.

Constants come from one of two routes:

* ``truncation``: dense M-sections of T(a)T(a^{-1}) - I and of T(c~)T(b~) - I;
* ``series``: for scalar symbols the strong Szego sum of the log coefficients,
  which avoids forming sections of very wide symbols.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DomainError, NoCanonicalFactorizationError, NumericalInstabilityError
from .factorization import FactorPair, log_coefficients
from .operators import (correction_F_all, correction_G_all, hankel_section, toeplitz_matrix,
                        toeplitz_section)
from .regularity import CharFunction, tail_sum
from .symbols import FourierSymbol, continuous_log_det, default_grid, tilde, winding_number

# above this band scalar constants default to the series route
SERIES_BAND = 512
STABILITY_TOL = 1e-6
# unpivoted LU falls back to pivoted slogdet below this relative pivot size
PIVOT_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# log det T_n(a)
# ---------------------------------------------------------------------------

@dataclass
class LogDetSeries:
    ns: np.ndarray
    values: np.ndarray
    min_pivot: np.ndarray
    gaps: list[int] = field(default_factory=list)
    pivoted: bool = False

    def at(self, n: int) -> complex:
        i = int(np.searchsorted(self.ns, n))
        if i >= len(self.ns) or self.ns[i] != n:
            raise KeyError(n)
        return complex(self.values[i])


def _leading_pivots(A: np.ndarray) -> np.ndarray | None:
    """Pivots of Gaussian elimination without row exchanges; None if one is tiny."""
    A = np.array(A, dtype=complex)
    m = A.shape[0]
    piv = np.empty(m, dtype=complex)
    scale = max(np.abs(A).max(), 1e-300)
    for i in range(m):
        p = A[i, i]
        if abs(p) < PIVOT_FLOOR * scale:
            return None
        piv[i] = p
        if i + 1 < m:
            A[i + 1:, i + 1:] -= np.outer(A[i + 1:, i] / p, A[i, i + 1:])
    return piv


def log_det_sequence(a: FourierSymbol, n_max: int, ns=None) -> LogDetSeries:
    """log det T_n(a) for n = 0..n_max (or the listed ``ns``), branch-continuous in n.

    Leading pivots of one unpivoted elimination of T_{n_max}(a) give every
    leading minor; log det is the running sum of pivot logs.  If a pivot is too
    small, each n is redone with a pivoted slogdet and unwrapped against n-1.
    """
    N = a.block_size
    ns = np.arange(n_max + 1) if ns is None else np.asarray(sorted(ns), dtype=int)
    if ns.size and ns[-1] > n_max:
        raise DomainError("schedule exceeds n_max")
    T = toeplitz_matrix(a, n_max)
    piv = _leading_pivots(T)
    gaps: list[int] = []
    if piv is not None:
        cum = np.cumsum(np.log(piv))
        full = cum[N - 1::N]
        minp = np.minimum.accumulate(np.abs(piv))[N - 1::N]
        return LogDetSeries(ns, full[ns], minp[ns], gaps, False)
    vals = np.empty(n_max + 1, dtype=complex)
    minp = np.empty(n_max + 1)
    prev = 0.0
    for n in range(n_max + 1):
        sub = T[:(n + 1) * N, :(n + 1) * N]
        with warnings.catch_warnings():
            # exactly singular sections are recorded as gaps below
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            lu, _ = linalg.lu_factor(sub, check_finite=False)
        d = np.diag(lu)
        minp[n] = np.abs(d).min()
        if minp[n] == 0:
            gaps.append(n)
            vals[n] = np.nan
            continue
        sign, logabs = np.linalg.slogdet(sub)
        im = np.angle(sign)
        im += 2 * np.pi * np.round((prev - im) / (2 * np.pi))
        vals[n] = logabs + 1j * im
        prev = im
    return LogDetSeries(ns, vals[ns], minp[ns], gaps, True)


def log_geometric_mean(a: FourierSymbol, M: int | None = None) -> complex:
    """(1/2pi) int log det a(e^{i theta}) d theta with a continuous branch."""
    M = M or default_grid(a.band, minimum=4096)
    kappa = winding_number(a, M)
    if kappa != 0:
        raise NoCanonicalFactorizationError(f"det a winds {kappa} times around 0")
    return complex(np.mean(continuous_log_det(a, M)))


def geometric_mean(a: FourierSymbol, M: int | None = None) -> complex:
    """G(a) = exp of the mean of log det a."""
    return complex(np.exp(log_geometric_mean(a, M)))


# ---------------------------------------------------------------------------
# regularized determinants
# ---------------------------------------------------------------------------

def _as_matrix(K) -> np.ndarray:
    return np.asarray(getattr(K, "matrix", K), dtype=complex)


def log_regularized_det(K, m: int, method: str = "eig") -> complex:
    """log det_m(I + K) = sum_j [log(1 + lam_j) + sum_{i<m} (-lam_j)^i / i].

    ``method="trace"`` uses an LU determinant plus traces of powers of K,
    which is cheaper for large sections and equal for finite matrices.
    """
    if m < 1:
        raise DomainError("m must be at least 1")
    mat = _as_matrix(K)
    if mat.size == 0:
        return 0j
    if method == "trace":
        sign, logabs = np.linalg.slogdet(np.eye(mat.shape[0]) + mat)
        if sign == 0:
            return complex(-np.inf)
        traces, P = [], np.eye(mat.shape[0], dtype=complex)
        for _ in range(1, m):
            P = P @ mat
            traces.append(np.trace(P))
        return log_det_power_series(complex(logabs + 1j * np.angle(sign)), traces, m)
    if method != "eig":
        raise DomainError(f"unknown method {method!r}")
    try:
        lam = linalg.eigvals(mat, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalInstabilityError(f"eigenvalue solver failed: {exc}") from exc
    out = np.sum(np.log(1 + lam))
    for i in range(1, m):
        out += np.sum((-lam) ** i) / i
    return complex(out)


def regularized_det(K, m: int) -> complex:
    """det_m(I + K) from the eigenvalues of K."""
    return complex(np.exp(log_regularized_det(K, m)))


def regularized_det_direct(K, m: int) -> complex:
    """det(I + R_m(K)), R_m(K) = (I + K) exp(sum_{j<m} (-K)^j / j) - I, via a dense expm."""
    if m < 1:
        raise DomainError("m must be at least 1")
    mat = _as_matrix(K)
    eye = np.eye(mat.shape[0])
    S = np.zeros_like(mat)
    P = eye.astype(complex)
    for j in range(1, m):
        P = P @ (-mat)
        S = S + P / j
    return complex(np.linalg.det((eye + mat) @ linalg.expm(S)))


def log_det_power_series(log_det1: complex, traces: list[complex], m: int) -> complex:
    """log det_m(I + K) from log det(I + K) and tr K^i, i < m."""
    out = log_det1
    for i in range(1, m):
        out += (-1) ** i * traces[i - 1] / i
    return complex(out)


# ---------------------------------------------------------------------------
# Szego constants
# ---------------------------------------------------------------------------

def _product_defect(f: FourierSymbol, g: FourierSymbol, M: int) -> np.ndarray:
    """M-section of T(f)T(g) - I, inner index running over the full band of f."""
    inner = M + f.band
    Tf = toeplitz_section(f, (0, M), (0, inner))
    Tg = toeplitz_section(g, (0, inner), (0, M))
    return Tf @ Tg - np.eye(M * f.block_size)


def dual_section(pair: FactorPair, M: int) -> np.ndarray:
    """M-section of T(c~)T(b~) - I = -H(c~)H(b)."""
    ct = tilde(pair.c)
    inner = max(ct.band, pair.b.band, 1)
    return -hankel_section(ct, (0, M), (0, inner)) @ hankel_section(pair.b, (0, inner), (0, M))


def strong_szego_log(a: FourierSymbol, grid_size: int | None = None) -> complex:
    """log E(a) = sum_{k>=1} k s_k s_{-k} for scalar a (s = log coefficients)."""
    if not a.is_scalar:
        raise DomainError("the strong Szego series is used for scalar symbols only")
    s, M = log_coefficients(a, grid_size)
    k = np.arange(1, M // 2)
    return complex(np.sum(k * s[k] * s[-k]))


def bc_moment(pair: FactorPair) -> complex:
    """tr H(c~)H(b) = sum_{p>=1} p tr(c_{-p} b_p)."""
    K = min(pair.b.band, pair.c.band)
    if K == 0:
        return 0j
    p = np.arange(1, K + 1)
    cm = pair.c.coeff_range(-K, -1)[::-1]
    bp = pair.b.coeff_range(1, K)
    return complex(np.sum(p * np.einsum("kij,kji->k", cm, bp)))


@dataclass
class SzegoConstants:
    G: complex
    log_G: complex
    E1: complex
    log_E1: complex
    dual_log: complex
    discrepancy: float
    history: list[tuple[int, complex]]
    stable: bool
    method: str
    M: int

    @property
    def dual(self) -> complex:
        """1 / det_1 of the T(c~)T(b~) section."""
        return complex(np.exp(-self.dual_log))


def _use_series(a: FourierSymbol, method: str) -> bool:
    if method == "auto":
        return a.is_scalar and a.band > SERIES_BAND
    if method == "series":
        if not a.is_scalar:
            raise DomainError("series constants need a scalar symbol")
        return True
    if method == "truncation":
        return False
    raise DomainError(f"unknown method {method!r}")


def szego_constant(a: FourierSymbol, pair: FactorPair, M: int = 256, method: str = "auto",
                   tol: float = STABILITY_TOL) -> SzegoConstants:
    """G(a) and E_1 = det_1 T(a)T(a^{-1}), with the dual value 1/det_1 T(c~)T(b~).

    The truncation route is repeated at 2M; a change above ``tol`` clears
    ``stable``.  ``dual_log`` is log det_1 T(c~)T(b~) so that
    log_E1 + dual_log should vanish.
    """
    if M < 128:
        raise DomainError("szego_constant needs M >= 128")
    logG = log_geometric_mean(a)
    if _use_series(a, method):
        le = strong_szego_log(a)
        return SzegoConstants(np.exp(logG), logG, np.exp(le), le, -le, 0.0, [(0, le)], True, "series", 0)
    ainv = pair.a_inverse()
    hist = []
    for MM in (M, 2 * M):
        hist.append((MM, log_regularized_det(_product_defect(a, ainv, MM), 1, "trace")))
    le = hist[0][1]
    dual = log_regularized_det(dual_section(pair, M), 1, "trace")
    stable = abs(hist[1][1] - le) <= tol
    return SzegoConstants(np.exp(logG), logG, np.exp(le), le, dual, float(abs(le + dual)),
                          hist, bool(stable), "truncation", M)


def log_det_m_dual(pair: FactorPair, m: int, M: int = 256, method: str = "auto",
                   constants: SzegoConstants | None = None) -> complex:
    """log det_m T(c~)T(b~).

    Series route (scalar, m <= 2): -log E + sum_p p c_{-p} b_p at m = 2.
    """
    if _use_series(pair.a, method):
        if m > 2:
            raise DomainError("the series route covers m <= 2; use a narrower symbol for m >= 3")
        le = constants.log_E1 if constants is not None else strong_szego_log(pair.a)
        trK = -bc_moment(pair)
        return log_det_power_series(-le, [trK], m)
    return log_regularized_det(dual_section(pair, M), m, "trace")


# ---------------------------------------------------------------------------
# higher-order remainders
# ---------------------------------------------------------------------------

@dataclass
class RemainderRow:
    n: int
    log_det: complex
    widom: complex
    hoC: complex
    hoD: complex
    hoE: complex
    trace_last: complex
    tail: float
    ratio: float


@dataclass
class Remainders:
    rows: list[RemainderRow]
    log_E: complex
    log_E_spread: float
    constants: SzegoConstants
    m: int
    tail_convergent: bool
    dual_log_m: complex


def _trace_power_sum(mats: list[np.ndarray], m: int) -> complex:
    # sum_{j<m} (1/j) tr[(sum mats)^j]
    if not mats:
        return 0j
    S = sum(mats)
    out = 0j
    P = np.eye(S.shape[0], dtype=complex)
    for j in range(1, m):
        P = P @ S
        out += np.trace(P) / j
    return complex(out)


def _hoE_correction(pair: FactorPair, ell: int, m: int) -> complex:
    # sum_{j=1}^{m-1} (1/j) tr (sum_{k=0}^{m-j-1} G_{ell,k})^j
    if m < 2:
        return 0j
    G = correction_G_all(pair.b, pair.c, ell, m - 2)
    out = 0j
    for j in range(1, m):
        S = sum(G[:m - j])
        out += np.trace(np.linalg.matrix_power(S, j)) / j
    return complex(out)


def ho_remainders(a: FourierSymbol, pair: FactorPair, w: CharFunction, p: CharFunction, m: int,
                  ns, M: int = 256, method: str = "auto", constants: SzegoConstants | None = None,
                  workers: int = 1) -> Remainders:
    """Widom remainder and the three higher-order remainders on the schedule ``ns``.

    hoC subtracts sum_{j<m} (1/j) tr[(sum_{k<m} F_{n,k})^j] and adds log det_m T(c~)T(b~);
    hoD does the same without F_{n,m-1}; hoE is the cumulative G-correction
    intercept whose late-n median estimates log E(a).
    """
    if m < 1:
        raise DomainError("m must be at least 1")
    ns = sorted(int(n) for n in ns)
    if not ns:
        consts = constants or szego_constant(a, pair, M, method)
        return Remainders([], consts.log_E1, 0.0, consts, m, True, 0j)
    consts = constants or szego_constant(a, pair, M, method)
    logG = consts.log_G
    dual_m = log_det_m_dual(pair, m, M, method, consts)
    series = log_det_sequence(a, ns[-1], ns)

    def row_terms(n):
        F = correction_F_all(pair.b, pair.c, n, m - 1) if m > 1 else []
        return (_trace_power_sum(F, m), _trace_power_sum(F[:m - 1], m),
                complex(np.trace(F[-1])) if F else 0j)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            terms = list(ex.map(row_terms, ns))
    else:
        terms = [row_terms(n) for n in ns]

    # cumulative hoE corrections over ell = 1..n
    cum = {}
    acc = 0j
    want = set(ns)
    for ell in range(1, ns[-1] + 1):
        acc += _hoE_correction(pair, ell, m)
        if ell in want:
            cum[ell] = acc
    cum[0] = 0j

    rows = []
    conv = True
    for n, (fc, fd, flast) in zip(ns, terms):
        ld = series.at(n)
        base = ld - (n + 1) * logG
        ts = tail_sum(w, p, m, n)
        conv = conv and ts.convergent
        hoC = base - fc + dual_m
        ratio = abs(hoC) / ts.value if ts.convergent and ts.value > 0 else math.nan
        rows.append(RemainderRow(n, ld, base - consts.log_E1, hoC, base - fd + dual_m,
                                 base - cum[n], flast, ts.value, ratio))
    late = [r.hoE for r in rows[len(rows) - max(1, len(rows) // 4):]]
    logE = complex(np.median(np.real(late)) + 1j * np.median(np.imag(late)))
    spread = float(np.max(np.abs(np.array(late) - logE))) if late else 0.0
    return Remainders(rows, logE, spread, consts, m, conv, dual_m)
