"""Canonical Wiener-Hopf factorizations and the auxiliary symbols b, c.

Scalar symbols are factored constructively by splitting a continuous
logarithm into its analytic and anti-analytic halves.  Block symbols are
only accepted as fixtures, i.e. with all four factors supplied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, FactorSupportError, NoCanonicalFactorizationError,
                     ProductMismatchError, SingularSymbolError, BlockSizeMismatch)
from .symbols import (FourierSymbol, SINGULAR_TOL, continuous_log_det, from_samples,
                      multiply, next_pow2, sample_grid, tilde, winding_number)

SUPPORT_TOL = 1e-9
# relative size below which a coefficient counts as zero when picking a band
BAND_TOL = 1e-16


@dataclass(frozen=True, eq=False)
class FactorPair:
    """a = u_minus u_plus = v_plus v_minus together with inverses and b, c."""

    a: FourierSymbol
    u_minus: FourierSymbol
    u_plus: FourierSymbol
    v_minus: FourierSymbol
    v_plus: FourierSymbol
    u_minus_inv: FourierSymbol
    u_plus_inv: FourierSymbol
    v_minus_inv: FourierSymbol
    v_plus_inv: FourierSymbol
    b: FourierSymbol
    c: FourierSymbol
    grid_size: int = 0

    @property
    def block_size(self) -> int:
        return self.a.block_size

    def a_inverse(self) -> FourierSymbol:
        """a^{-1} = u_+^{-1} u_-^{-1}."""
        return multiply(self.u_plus_inv, self.u_minus_inv)

    def reconstruction_error(self) -> tuple[float, float]:
        """Max coefficient error of u_- u_+ and v_+ v_- against a."""
        return (_coeff_gap(multiply(self.u_minus, self.u_plus), self.a),
                _coeff_gap(multiply(self.v_plus, self.v_minus), self.a))

    def support_violation(self) -> float:
        """Largest coefficient of a factor on the wrong side of zero."""
        viol = [_side_mass(s, +1) for s in (self.u_minus, self.v_minus,
                                            self.u_minus_inv, self.v_minus_inv)]
        viol += [_side_mass(s, -1) for s in (self.u_plus, self.v_plus,
                                             self.u_plus_inv, self.v_plus_inv)]
        return max(viol)


def _coeff_gap(x: FourierSymbol, y: FourierSymbol) -> float:
    K = max(x.band, y.band)
    return float(np.abs(x.coeff_range(-K, K) - y.coeff_range(-K, K)).max())


def _side_mass(s: FourierSymbol, side: int) -> float:
    # max |s_k| over k > 0 (side=+1) or k < 0 (side=-1)
    if s.band == 0:
        return 0.0
    part = s.coeffs[s.band + 1:] if side > 0 else s.coeffs[:s.band]
    return float(np.abs(part).max())


def _clip_side(s: FourierSymbol, keep: int) -> FourierSymbol:
    """Zero the coefficients with sign opposite to ``keep`` (+1 analytic, -1 anti-analytic)."""
    co = s.coeffs.copy()
    if keep > 0:
        co[:s.band] = 0
    else:
        co[s.band + 1:] = 0
    return FourierSymbol(co, s.sample_grid_size, s.tail_estimate).trimmed()


def auto_band(values: np.ndarray, tol: float = BAND_TOL) -> int:
    """Smallest K such that every grid coefficient with |k| > K is below tol * max."""
    v = np.asarray(values)
    if v.ndim == 1:
        v = v[:, None, None]
    M = v.shape[0]
    c = np.abs(np.fft.fft(v, axis=0)).max(axis=(1, 2)) / M
    ks = np.arange(M // 2)
    mag = np.maximum(c[ks], c[(-ks) % M])
    big = ks[mag > tol * mag.max()]
    return int(min(big.max() if big.size else 0, M // 2 - 1))


def _extract(values: np.ndarray, band: int | None) -> FourierSymbol:
    K = auto_band(values) if band is None else band
    return from_samples(values, K)


def factor_grid(a: FourierSymbol) -> int:
    return max(4096, next_pow2(8 * (2 * a.band + 2)))


def scalar_canonical_factor(a: FourierSymbol, band: int | None = None,
                            grid_size: int | None = None) -> FactorPair:
    """Canonical factorization of a scalar symbol by log splitting.

    log a = sum_k s_k t^k with a continuous branch; u_+ = exp(sum_{k>=0} s_k t^k),
    u_- = exp(sum_{k<0} s_k t^k), v_+ = u_+, v_- = u_-.  ``band=None`` picks each
    band from the decay of its grid coefficients.
    """
    if not a.is_scalar:
        raise BlockSizeMismatch("scalar_canonical_factor needs a 1x1 symbol; use fixtures for blocks")
    M = grid_size or factor_grid(a)
    vals = sample_grid(a, M)[:, 0, 0]
    if np.abs(vals).min() < SINGULAR_TOL:
        raise SingularSymbolError("symbol vanishes on the grid")
    kappa = winding_number(a, M)
    if kappa != 0:
        raise NoCanonicalFactorizationError(f"winding number {kappa} != 0")
    logs = np.fft.fft(continuous_log_det(a, M)) / M
    plus = logs.copy()
    plus[M // 2:] = 0
    minus = logs - plus
    lp = np.fft.ifft(plus) * M
    lm = np.fft.ifft(minus) * M

    def sym(x, keep):
        return _clip_side(_extract(np.exp(x), band), keep)

    u_plus, u_plus_inv = sym(lp, 1), sym(-lp, 1)
    u_minus, u_minus_inv = sym(lm, -1), sym(-lm, -1)
    b = _extract(np.exp(lm - lp), band)
    c = _extract(np.exp(lp - lm), band)
    return FactorPair(a, u_minus, u_plus, u_minus, u_plus, u_minus_inv, u_plus_inv,
                      u_minus_inv, u_plus_inv, b, c, M)


def log_coefficients(a: FourierSymbol, grid_size: int | None = None) -> tuple[np.ndarray, int]:
    """Fourier coefficients of the continuous log det a on an M-grid (index k at k mod M)."""
    M = grid_size or factor_grid(a)
    return np.fft.fft(continuous_log_det(a, M)) / M, M


def _pointwise_inverse(vals: np.ndarray) -> np.ndarray:
    dets = np.linalg.det(vals)
    if np.abs(dets).min() < SINGULAR_TOL:
        raise SingularSymbolError("factor is singular on the grid")
    return np.linalg.inv(vals)


def fixture_block_symbol(u_minus: FourierSymbol, u_plus: FourierSymbol, v_plus: FourierSymbol,
                         v_minus: FourierSymbol, band: int | None = None,
                         tol: float = SUPPORT_TOL) -> tuple[FourierSymbol, FactorPair]:
    """Assemble a = u_- u_+ from supplied factors and check the left factorization agrees."""
    facs = (u_minus, u_plus, v_plus, v_minus)
    N = u_minus.block_size
    if any(f.block_size != N for f in facs):
        raise BlockSizeMismatch("factors must share one block size")
    for name, f, wrong in (("u_minus", u_minus, +1), ("v_minus", v_minus, +1),
                           ("u_plus", u_plus, -1), ("v_plus", v_plus, -1)):
        if _side_mass(f, wrong) > tol:
            raise FactorSupportError(f"{name} has coefficients on the wrong side of zero")
        if abs(np.linalg.det(f.coeff(0))) < SINGULAR_TOL:
            raise FactorSupportError(f"{name} has a singular zeroth coefficient")
    a = multiply(u_minus, u_plus)
    gap = _coeff_gap(a, multiply(v_plus, v_minus))
    if gap > tol:
        raise ProductMismatchError(f"u_- u_+ and v_+ v_- differ by {gap:.3e}")

    M = max(4096, next_pow2(8 * (2 * max(f.band for f in facs) + 2)))
    grid = {id(f): sample_grid(f, M) for f in facs}
    inv = {}
    for f, keep in ((u_minus, -1), (u_plus, 1), (v_minus, -1), (v_plus, 1)):
        g = _extract(_pointwise_inverse(grid[id(f)]), band)
        if _side_mass(g, -keep) > tol:
            raise FactorSupportError("factor is not invertible in its half-algebra")
        inv[id(f)] = _clip_side(g, keep)
    up_inv = _pointwise_inverse(grid[id(u_plus)])
    um_inv = _pointwise_inverse(grid[id(u_minus)])
    b = _extract(np.einsum("mij,mjk->mik", grid[id(v_minus)], up_inv), band)
    c = _extract(np.einsum("mij,mjk->mik", um_inv, grid[id(v_plus)]), band)
    pair = FactorPair(a, _clip_side(u_minus, -1), _clip_side(u_plus, 1),
                      _clip_side(v_minus, -1), _clip_side(v_plus, 1),
                      inv[id(u_minus)], inv[id(u_plus)], inv[id(v_minus)], inv[id(v_plus)],
                      b, c, M)
    return a, pair


def diagonal_embedding(symbols: list[FourierSymbol]) -> FourierSymbol:
    """Block-diagonal symbol diag(s_1, ..., s_N) from scalar symbols."""
    K = max(s.band for s in symbols)
    N = len(symbols)
    co = np.zeros((2 * K + 1, N, N), dtype=complex)
    for i, s in enumerate(symbols):
        co[:, i, i] = s.coeff_range(-K, K)[:, 0, 0]
    return FourierSymbol(co)


def diagonal_factor(symbols: list[FourierSymbol], band: int | None = None) -> tuple[FourierSymbol, FactorPair]:
    """Fixture built from scalar canonical factors placed on the diagonal."""
    pairs = [scalar_canonical_factor(s, band) for s in symbols]
    return fixture_block_symbol(diagonal_embedding([p.u_minus for p in pairs]),
                                diagonal_embedding([p.u_plus for p in pairs]),
                                diagonal_embedding([p.v_plus for p in pairs]),
                                diagonal_embedding([p.v_minus for p in pairs]), band)


@dataclass(frozen=True)
class InvertibilityProbe:
    toeplitz_invertible: bool
    tilde_invertible: bool
    smin: tuple[float, float]
    smin_tilde: tuple[float, float]
    condition: float
    condition_tilde: float
    M: int


def _section_svals(a: FourierSymbol, M: int) -> np.ndarray:
    from .operators import toeplitz_matrix
    return np.linalg.svd(toeplitz_matrix(a, M - 1), compute_uv=False)


def invertibility_probe(a: FourierSymbol, M: int = 64, floor: float = 1e-6,
                        drift: float = 0.1) -> InvertibilityProbe:
    """Numeric proxy for invertibility of T(a) and T(a~) from M- and 2M-sections."""
    if M < 64:
        raise DomainError("invertibility_probe needs M >= 64")

    def probe(sym):
        s1, s2 = _section_svals(sym, M), _section_svals(sym, 2 * M)
        lo1, lo2 = float(s1[-1]), float(s2[-1])
        ok = lo1 > floor and lo2 > floor and abs(lo1 - lo2) <= drift * lo1
        cond = float(s1[0] / lo1) if lo1 > 0 else np.inf
        return ok, (lo1, lo2), cond

    ok, sm, cond = probe(a)
    okt, smt, condt = probe(tilde(a))
    return InvertibilityProbe(ok, okt, sm, smt, cond, condt, M)
