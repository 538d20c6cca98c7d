"""Matrix-valued Laurent symbols on the unit circle.

A symbol is stored through its Fourier coefficients a_k (N x N matrices) on a
band [-K, K].  Non-polynomial symbols are materialized by sampling on a
power-of-two grid and keeping the coefficients up to a chosen band; the
discarded part is kept as ``tail_estimate``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    AliasingError,
    BlockSizeMismatch,
    DomainError,
    GridTooCoarseError,
    SingularSymbolError,
)

# |det| below this on a sample is treated as a zero of the symbol
SINGULAR_TOL = 1e-13
# direct convolution in multiply() below this many coefficient pairs
_DIRECT_CONV_LIMIT = 250_000


def next_pow2(n: int) -> int:
    return 1 << max(0, int(np.ceil(np.log2(max(n, 1)))))


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class FourierSymbol:
    """Band-limited N x N symbol.

    ``coeffs[k + band]`` holds a_k for -band <= k <= band.
    """

    coeffs: np.ndarray
    sample_grid_size: int | None = None
    tail_estimate: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] % 2 != 1:
            raise DomainError(f"coefficient array must have shape (2K+1, N, N), got {c.shape}")
        c = np.array(c, dtype=complex, copy=True)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    # -- construction -------------------------------------------------
    @classmethod
    def from_dict(cls, coeffs: Mapping[int, object], block_size: int | None = None,
                  band: int | None = None) -> "FourierSymbol":
        """Build from ``{k: matrix}``; scalars are accepted when N = 1."""
        mats = {int(k): np.atleast_2d(np.asarray(v, dtype=complex)) for k, v in coeffs.items()}
        if block_size is None:
            block_size = next(iter(mats.values())).shape[0] if mats else 1
        for k, m in mats.items():
            if m.shape != (block_size, block_size):
                raise BlockSizeMismatch(f"coefficient {k} has shape {m.shape}, expected N={block_size}")
        K = max((abs(k) for k in mats), default=0)
        if band is not None:
            if band < K:
                raise DomainError("band smaller than largest stored index")
            K = band
        arr = np.zeros((2 * K + 1, block_size, block_size), dtype=complex)
        for k, m in mats.items():
            arr[k + K] = m
        return cls(arr)

    @classmethod
    def constant(cls, matrix) -> "FourierSymbol":
        return cls.from_dict({0: matrix})

    @classmethod
    def identity(cls, block_size: int = 1) -> "FourierSymbol":
        return cls.from_dict({0: np.eye(block_size)})

    @classmethod
    def monomial(cls, k: int, block_size: int = 1) -> "FourierSymbol":
        return cls.from_dict({k: np.eye(block_size)})

    # -- basic accessors ----------------------------------------------
    @property
    def band(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def block_size(self) -> int:
        return self.coeffs.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.block_size == 1

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.band:
            return np.zeros((self.block_size, self.block_size), dtype=complex)
        return self.coeffs[k + self.band]

    def coeff_range(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients a_lo, ..., a_hi (inclusive) as a (hi-lo+1, N, N) array."""
        N, K = self.block_size, self.band
        out = np.zeros((max(hi - lo + 1, 0), N, N), dtype=complex)
        a, b = max(lo, -K), min(hi, K)
        if a <= b:
            out[a - lo:b - lo + 1] = self.coeffs[a + K:b + K + 1]
        return out

    def support(self, tol: float = 0.0) -> tuple[int, int]:
        """(min, max) index whose coefficient exceeds ``tol`` in max-abs; (0, 0) if none."""
        mags = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1)
        idx = np.nonzero(mags > tol)[0]
        if idx.size == 0:
            return 0, 0
        return int(idx[0]) - self.band, int(idx[-1]) - self.band

    def as_dict(self, tol: float = 0.0) -> dict[int, np.ndarray]:
        return {k: self.coeff(k) for k in range(-self.band, self.band + 1)
                if np.abs(self.coeff(k)).max() > tol}

    def trimmed(self, tol: float = 0.0) -> "FourierSymbol":
        lo, hi = self.support(tol)
        K = max(abs(lo), abs(hi))
        return FourierSymbol(self.coeff_range(-K, K), self.sample_grid_size, self.tail_estimate)

    def with_band(self, K: int) -> "FourierSymbol":
        """Zero-pad or truncate to band K; truncated mass is added to ``tail_estimate``."""
        dropped = 0.0
        if K < self.band:
            lo = self.coeff_range(-self.band, -K - 1)
            hi = self.coeff_range(K + 1, self.band)
            dropped = float(np.sqrt(np.sum(np.abs(lo) ** 2) + np.sum(np.abs(hi) ** 2)))
        return FourierSymbol(self.coeff_range(-K, K), self.sample_grid_size,
                             self.tail_estimate + dropped)

    # -- algebra ------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, FourierSymbol):
            other = FourierSymbol.constant(np.asarray(other) * np.eye(self.block_size))
        _check_blocks(self, other)
        K = max(self.band, other.band)
        return FourierSymbol(self.coeff_range(-K, K) + other.coeff_range(-K, K))

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return FourierSymbol(-self.coeffs, self.sample_grid_size, self.tail_estimate)

    def __sub__(self, other):
        if not isinstance(other, FourierSymbol):
            other = FourierSymbol.constant(np.asarray(other) * np.eye(self.block_size))
        return self + (-other)

    def scale(self, s: complex) -> "FourierSymbol":
        return FourierSymbol(self.coeffs * s, self.sample_grid_size, abs(s) * self.tail_estimate)

    def __matmul__(self, other):
        return multiply(self, other)

    def __repr__(self):
        return f"FourierSymbol(N={self.block_size}, band={self.band})"


def _check_blocks(a: FourierSymbol, b: FourierSymbol):
    if a.block_size != b.block_size:
        raise BlockSizeMismatch(f"block sizes {a.block_size} and {b.block_size} differ")


# ---------------------------------------------------------------------------
# evaluation and sampling
# ---------------------------------------------------------------------------

def evaluate(a: FourierSymbol, theta) -> np.ndarray:
    """a(e^{i theta}) = sum_k a_k e^{ik theta}.

    Scalar ``theta`` gives an N x N matrix; an array gives shape theta.shape + (N, N).
    """
    th = np.asarray(theta, dtype=float)
    ks = np.arange(-a.band, a.band + 1)
    phases = np.exp(1j * np.multiply.outer(th, ks))
    return np.tensordot(phases, a.coeffs, axes=([-1], [0]))


def sample_grid(a: FourierSymbol, M: int) -> np.ndarray:
    """Values on theta_j = 2 pi j / M as an (M, N, N) array, computed by FFT."""
    if M < 2 * a.band + 1:
        raise AliasingError(f"grid of {M} points cannot carry band {a.band}")
    buf = np.zeros((M, a.block_size, a.block_size), dtype=complex)
    ks = np.arange(-a.band, a.band + 1)
    buf[ks % M] = a.coeffs
    return np.fft.ifft(buf, axis=0) * M


def default_grid(band: int, minimum: int = 1024, oversample: int = 4) -> int:
    return max(minimum, next_pow2(oversample * (2 * band + 2)))


def from_samples(values, band: int) -> FourierSymbol:
    """Coefficients |k| <= band from samples on the uniform grid of M points.

    The last decade of retained coefficients (|k| > 0.9 band) sets ``tail_estimate``.
    """
    v = np.asarray(values, dtype=complex)
    if v.ndim == 1:
        v = v[:, None, None]
    M = v.shape[0]
    if not _is_pow2(M):
        raise AliasingError(f"grid size {M} is not a power of two")
    if M < 2 * band + 2:
        raise AliasingError(f"grid size {M} < 2K+2 = {2 * band + 2}")
    c = np.fft.fft(v, axis=0) / M
    ks = np.arange(-band, band + 1)
    coeffs = c[ks % M]
    edge = np.abs(ks) > 0.9 * band
    tail = float(np.sqrt(np.sum(np.abs(coeffs[edge]) ** 2))) if band >= 10 else 0.0
    return FourierSymbol(coeffs, sample_grid_size=M, tail_estimate=tail)


def from_function(fn: Callable[[np.ndarray], np.ndarray], band: int, block_size: int = 1,
                  grid_size: int | None = None) -> FourierSymbol:
    """Sample ``fn(theta)`` (vectorized; returns (M,) or (M, N, N)) and keep band K."""
    M = grid_size or default_grid(band)
    th = 2 * np.pi * np.arange(M) / M
    vals = np.asarray(fn(th), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    if vals.shape[1:] != (block_size, block_size):
        raise BlockSizeMismatch(f"sampled values have shape {vals.shape[1:]}")
    return from_samples(vals, band)


def pointwise(fn: Callable[..., np.ndarray], symbols: Iterable[FourierSymbol], band: int,
              grid_size: int | None = None) -> FourierSymbol:
    """Apply a pointwise matrix map to sampled symbols and re-extract band K."""
    syms = list(symbols)
    need = max([band] + [s.band for s in syms])
    M = grid_size or default_grid(need)
    vals = [sample_grid(s, M) for s in syms]
    return from_samples(fn(*vals), band)


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def multiply(a: FourierSymbol, b: FourierSymbol) -> FourierSymbol:
    """Coefficient convolution (a b)_k = sum_j a_j b_{k-j}, order preserved."""
    _check_blocks(a, b)
    K = a.band + b.band
    N = a.block_size
    if (2 * a.band + 1) * (2 * b.band + 1) <= _DIRECT_CONV_LIMIT:
        out = np.zeros((2 * K + 1, N, N), dtype=complex)
        for i in range(2 * a.band + 1):
            if not a.coeffs[i].any():
                continue
            out[i:i + 2 * b.band + 1] += np.einsum("ij,kjl->kil", a.coeffs[i], b.coeffs)
    else:
        M = next_pow2(2 * K + 2)
        prod = np.einsum("mij,mjk->mik", sample_grid(a, M), sample_grid(b, M))
        out = (np.fft.fft(prod, axis=0) / M)[np.arange(-K, K + 1) % M]
    return FourierSymbol(out, tail_estimate=a.tail_estimate + b.tail_estimate)


def inverse(a: FourierSymbol, band: int, grid_size: int | None = None) -> FourierSymbol:
    """Pointwise matrix inverse sampled on a fine grid, truncated to ``band``."""
    M = grid_size or default_grid(max(band, a.band), minimum=4096)
    vals = sample_grid(a, M)
    dets = np.linalg.det(vals)
    if np.min(np.abs(dets)) < SINGULAR_TOL:
        raise SingularSymbolError("symbol is (numerically) singular on the grid")
    return from_samples(np.linalg.inv(vals), band)


def tilde(a: FourierSymbol) -> FourierSymbol:
    """The flipped symbol a(1/t): coefficients k -> a_{-k}."""
    return FourierSymbol(a.coeffs[::-1], a.sample_grid_size, a.tail_estimate)


def adjoint(a: FourierSymbol) -> FourierSymbol:
    """Pointwise conjugate transpose: coefficients k -> (a_{-k})^*."""
    return FourierSymbol(np.conj(np.swapaxes(a.coeffs[::-1], 1, 2)))


def continuous_log_det(a: FourierSymbol, M: int | None = None) -> np.ndarray:
    """Phase-continuous log det a(e^{i theta_j}) on an M-point grid.

    Raises if the determinant vanishes or if adjacent samples differ in phase
    by more than pi/2 (the grid does not resolve the curve).
    """
    M = M or default_grid(a.band, minimum=4096)
    vals = sample_grid(a, M)
    d = vals[:, 0, 0] if a.is_scalar else np.linalg.det(vals)
    mag = np.abs(d)
    if mag.min() < SINGULAR_TOL:
        raise SingularSymbolError("determinant of the symbol vanishes on the grid")
    phase = np.unwrap(np.angle(d))
    steps = np.abs(np.diff(np.append(phase, phase[0] + 2 * np.pi * _winding_from(phase, d))))
    if steps.max() > np.pi / 2:
        raise GridTooCoarseError(f"phase jump {steps.max():.3f} on a {M}-point grid")
    return np.log(mag) + 1j * phase


def _winding_from(phase: np.ndarray, d: np.ndarray) -> int:
    # closing step from last node back to the first
    last = phase[-1] + np.angle(d[0] / d[-1])
    return int(np.rint((last - phase[0]) / (2 * np.pi)))


def winding_number(a: FourierSymbol, M: int | None = None) -> int:
    """Winding of det a(e^{i theta}) about zero (equals the scalar winding when N = 1)."""
    M = M or default_grid(a.band, minimum=4096)
    if M < 1024:
        raise DomainError("winding number needs at least 1024 grid points")
    vals = sample_grid(a, M)
    d = vals[:, 0, 0] if a.is_scalar else np.linalg.det(vals)
    if np.abs(d).min() < SINGULAR_TOL:
        raise SingularSymbolError("symbol vanishes on the grid; winding undefined")
    phase = np.unwrap(np.angle(d))
    return _winding_from(phase, d)


def krein_weight(a: FourierSymbol) -> float:
    """sum_k |k| ||a_k||_F^2 over the stored band."""
    ks = np.abs(np.arange(-a.band, a.band + 1))
    fro2 = np.sum(np.abs(a.coeffs) ** 2, axis=(1, 2))
    return float(np.sum(ks * fro2))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def block_norm(m) -> float:
    """N * max |m_{ab}|: the fixed N x N matrix norm convention."""
    m = np.atleast_2d(np.asarray(m))
    return float(m.shape[0] * np.abs(m).max())


def sup_norm(a: FourierSymbol, M: int | None = None) -> float:
    """||a||_inf in the block-norm convention, sampled on a grid."""
    M = M or default_grid(a.band)
    vals = sample_grid(a, M)
    return float(a.block_size * np.abs(vals).max())


# ---------------------------------------------------------------------------
# named families
# ---------------------------------------------------------------------------

def laurent(coeffs: Mapping[int, complex]) -> FourierSymbol:
    """Scalar Laurent polynomial from ``{k: a_k}``."""
    return FourierSymbol.from_dict(coeffs, block_size=1)


def tridiagonal(alpha: float, beta: float) -> FourierSymbol:
    """(1 - alpha t)(1 - beta / t)."""
    return laurent({-1: -beta, 0: 1 + alpha * beta, 1: -alpha})


def lacunary_amplitudes(gamma: float, levels: int, amplitude: float = 1.0) -> dict[int, float]:
    """Frequency 2^j -> amplitude * 2^(-gamma j), j = 0..levels."""
    return {2 ** j: amplitude * 2.0 ** (-gamma * j) for j in range(levels + 1)}


def lacunary_series(gamma: float, levels: int, amplitude: float = 1.0) -> FourierSymbol:
    """sum_j amplitude 2^(-gamma j) cos(2^j theta): a Weierstrass-type C^gamma function."""
    co = {}
    for f, c in lacunary_amplitudes(gamma, levels, amplitude).items():
        co[f] = co.get(f, 0) + c / 2
        co[-f] = co.get(-f, 0) + c / 2
    return laurent(co)


def exp_lacunary(gamma: float, levels: int, amplitude: float = 0.5, band: int | None = None,
                 tol: float = 1e-15) -> FourierSymbol:
    """exp of the lacunary series, materialized on a fine grid.

    With ``band=None`` the band is the largest index whose coefficient exceeds
    ``tol`` relative to a_0.
    """
    top = 2 ** levels
    M = next_pow2(16 * top)
    th = 2 * np.pi * np.arange(M) / M
    W = np.zeros(M)
    for f, c in lacunary_amplitudes(gamma, levels, amplitude).items():
        W += c * np.cos(f * th)
    vals = np.exp(W)
    if band is None:
        c = np.abs(np.fft.fft(vals)) / M
        ks = np.arange(M // 2)
        big = ks[np.maximum(c[ks], c[(-ks) % M]) > tol * c[0]]
        band = int(big.max())
    return from_samples(vals, band)
