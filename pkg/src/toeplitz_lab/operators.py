"""Finite sections of block Toeplitz and Hankel operators and the correction operators.

Operators act on H^2_N, whose Fourier basis is indexed by i >= 0 with N x N
blocks.  Dense matrices are used for modest sizes; products of long Hankel
sections go through FFT convolutions.  Every banded factor is clipped to its
support, so the correction operators are exact rather than M-dependent once
the cutoff covers that support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, svds

from .errors import BlockSizeMismatch, CutoffTooSmallError, DomainError
from .regularity import ShiftProfile, entry
from .symbols import FourierSymbol, next_pow2, sup_norm

ENTRY_TOL = 1e-12


# ---------------------------------------------------------------------------
# dense sections
# ---------------------------------------------------------------------------

def _blocks_to_matrix(blk: np.ndarray) -> np.ndarray:
    # (R, C, N, N) -> (R N, C N)
    R, C, N, _ = blk.shape
    return blk.transpose(0, 2, 1, 3).reshape(R * N, C * N)


def toeplitz_section(a: FourierSymbol, rows: tuple[int, int], cols: tuple[int, int]) -> np.ndarray:
    """Block rows j in [r0, r1) and columns k in [c0, c1) of T(a): entries a_{j-k}."""
    (r0, r1), (c0, c1) = rows, cols
    lo, hi = r0 - (c1 - 1), (r1 - 1) - c0
    co = a.coeff_range(lo, hi)
    idx = np.subtract.outer(np.arange(r0, r1), np.arange(c0, c1)) - lo
    return _blocks_to_matrix(co[idx])


def toeplitz_matrix(a: FourierSymbol, n: int) -> np.ndarray:
    """T_n(a) = (a_{j-k})_{j,k=0}^n, of size (n+1)N."""
    return toeplitz_section(a, (0, n + 1), (0, n + 1))


def hankel_section(a: FourierSymbol, rows: tuple[int, int], cols: tuple[int, int]) -> np.ndarray:
    """Block rows/columns of H(a): entries a_{j+k+1}."""
    (r0, r1), (c0, c1) = rows, cols
    lo, hi = r0 + c0 + 1, r1 + c1 - 1
    co = a.coeff_range(lo, hi)
    idx = np.add.outer(np.arange(r0, r1), np.arange(c0, c1)) + 1 - lo
    return _blocks_to_matrix(co[idx])


def hankel_matrix(a: FourierSymbol, M: int) -> np.ndarray:
    """M-truncation of H(a)."""
    return hankel_section(a, (0, M), (0, M))


@dataclass(frozen=True)
class OpTruncation:
    """Dense compression of an operator on H^2_N to the first M Fourier modes."""

    M: int
    N: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.matrix.shape != (self.M * self.N, self.M * self.N):
            raise BlockSizeMismatch(f"matrix shape {self.matrix.shape} does not match M={self.M}, N={self.N}")

    @classmethod
    def identity(cls, M: int, N: int = 1) -> "OpTruncation":
        return cls(M, N, np.eye(M * N, dtype=complex), "I")

    @classmethod
    def toeplitz(cls, a: FourierSymbol, M: int) -> "OpTruncation":
        return cls(M, a.block_size, toeplitz_matrix(a, M - 1), "T")

    @classmethod
    def hankel(cls, a: FourierSymbol, M: int) -> "OpTruncation":
        return cls(M, a.block_size, hankel_matrix(a, M), "H")

    def _same(self, other):
        if (self.M, self.N) != (other.M, other.N):
            raise BlockSizeMismatch("truncations of different size")

    def __matmul__(self, other: "OpTruncation") -> "OpTruncation":
        self._same(other)
        return OpTruncation(self.M, self.N, self.matrix @ other.matrix, f"({self.label})({other.label})")

    def __add__(self, other):
        self._same(other)
        return OpTruncation(self.M, self.N, self.matrix + other.matrix, f"{self.label}+{other.label}")

    def __sub__(self, other):
        self._same(other)
        return OpTruncation(self.M, self.N, self.matrix - other.matrix, f"{self.label}-{other.label}")

    def block(self, j: int, k: int) -> np.ndarray:
        N = self.N
        return self.matrix[j * N:(j + 1) * N, k * N:(k + 1) * N]


@dataclass(frozen=True)
class ProjectionMask:
    """P_n, Q_n or Delta_j on the M-truncation, as a diagonal 0/1 mask."""

    kind: Literal["P", "Q", "Delta"]
    index: int
    M: int
    N: int = 1

    def diagonal(self) -> np.ndarray:
        i = np.repeat(np.arange(self.M), self.N)
        if self.kind == "P":
            d = i <= self.index
        elif self.kind == "Q":
            d = i > self.index
        elif self.kind == "Delta":
            d = i == self.index
        else:
            raise DomainError(f"unknown projection kind {self.kind!r}")
        return d.astype(float)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal())

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.diagonal()[:, None] * x if x.ndim == 2 else self.diagonal() * x

    def as_op(self) -> OpTruncation:
        return OpTruncation(self.M, self.N, self.matrix().astype(complex), f"{self.kind}{self.index}")


# ---------------------------------------------------------------------------
# FFT block Hankel products
# ---------------------------------------------------------------------------

def hankel_apply(h: np.ndarray, X: np.ndarray, out_rows: int) -> np.ndarray:
    """out[i] = sum_j h[i + j] @ X[j] for i < out_rows.

    h has shape (L, N, N) and X shape (R, N, C); entries of h beyond L are zero.
    """
    R = X.shape[0]
    if out_rows <= 0 or R == 0 or h.shape[0] == 0:
        return np.zeros((max(out_rows, 0), h.shape[1], X.shape[2]), dtype=complex)
    L = min(h.shape[0], out_rows + R - 1)
    h = h[:L]
    N, C = h.shape[1], X.shape[2]
    if L * R * N * N * C <= 4_000_000:
        idx = np.add.outer(np.arange(out_rows), np.arange(R))
        hh = np.zeros((out_rows + R - 1, N, N), dtype=complex)
        hh[:L] = h
        return np.einsum("ijab,jbc->iac", hh[idx], X)
    size = sfft.next_fast_len(max(L, out_rows) + R - 1)
    fh = sfft.fft(h, n=size, axis=0)
    fx = sfft.fft(X[::-1], n=size, axis=0)
    if N == 1:
        prod = fh * fx
    else:
        prod = np.einsum("fab,fbc->fac", fh, fx)
    conv = sfft.ifft(prod, axis=0)
    return conv[R - 1:R - 1 + out_rows]


def _as_blocks(mat: np.ndarray, N: int) -> np.ndarray:
    # (R N, C) -> (R, N, C)
    return mat.reshape(-1, N, mat.shape[1])


def _from_blocks(blk: np.ndarray) -> np.ndarray:
    return blk.reshape(-1, blk.shape[2])


# ---------------------------------------------------------------------------
# correction operators
# ---------------------------------------------------------------------------

def _check_pair(b: FourierSymbol, c: FourierSymbol):
    if b.block_size != c.block_size:
        raise BlockSizeMismatch("b and c must share a block size")


def _correction_chain(b: FourierSymbol, c: FourierSymbol, outer: int, ell: int, kmax: int,
                      M: int | None = None) -> list[np.ndarray]:
    """[P_outer T(c) Q_ell (Q_ell H(b) H(c~) Q_ell)^k Q_ell T(b) P_outer for k = 0..kmax].

    With ``M`` given, every index is restricted to [0, M) (the M-truncation);
    otherwise the computation uses the full banded support.
    """
    _check_pair(b, c)
    N = b.block_size
    cols = outer + 1
    lim = np.inf if M is None else M
    # Q_ell T(b) P_outer: rows q = ell+1+q', entry b_{q-i}; nonzero while q - i <= band(b)
    nq = int(min(max(b.band + outer - ell, 0), max(lim - ell - 1, 0)))
    X = _as_blocks(toeplitz_section(b, (ell + 1, ell + 1 + nq), (0, cols)), N)
    # P_outer T(c) Q_ell: c_{i-q}
    Lmat = toeplitz_section(c, (0, cols), (ell + 1, ell + 1 + int(min(max(c.band + outer - ell, 0),
                                                                      max(lim - ell - 1, 0)))))
    # Hankel kernels restricted to Q_ell: hc[s] = c_{-(s+ell+2)}, hb[s] = b_{s+ell+2}
    nh_c = max(c.band - ell - 1, 0)
    nh_b = max(b.band - ell - 1, 0)
    hc = c.coeff_range(-(ell + 1 + nh_c), -(ell + 2))[::-1] if nh_c else np.zeros((0, N, N))
    hb = b.coeff_range(ell + 2, ell + 1 + nh_b) if nh_b else np.zeros((0, N, N))
    r_rows = int(min(nh_c, lim))
    out = []
    cur = X
    for k in range(kmax + 1):
        if k > 0:
            if M is not None:
                # keep the inner index r and the Q_ell rows inside [0, M)
                cur = cur[:max(int(M) - ell - 1, 0)]
            Y = hankel_apply(hc, cur, r_rows)
            p_rows = int(min(nh_b, max(lim - ell - 1, 0)))
            cur = hankel_apply(hb, Y, p_rows)
        w = min(Lmat.shape[1] // N, cur.shape[0])
        if w == 0:
            out.append(np.zeros((cols * N, cols * N), dtype=complex))
        else:
            out.append(Lmat[:, :w * N] @ _from_blocks(cur[:w]))
    return out


def _support_size(b, c, n):
    return n + 2 + max(b.band, c.band) * 2


def _stable(b, c, outer, ell, kmax, M):
    res = _correction_chain(b, c, outer, ell, kmax, M)
    if M is None or M >= _support_size(b, c, max(outer, ell)):
        return res
    res2 = _correction_chain(b, c, outer, ell, kmax, 2 * M)
    gap = max(float(np.abs(x - y).max()) for x, y in zip(res, res2))
    if gap > ENTRY_TOL:
        raise CutoffTooSmallError(f"doubling M={M} moves correction entries by {gap:.2e}")
    return res


def correction_F(b: FourierSymbol, c: FourierSymbol, n: int, k: int, M: int | None = None) -> np.ndarray:
    """F_{n,k}(b,c) = P_n T(c) Q_n (Q_n H(b) H(c~) Q_n)^k Q_n T(b) P_n as an (n+1)N matrix."""
    if k < 0 or n < 0:
        raise DomainError("n and k must be nonnegative")
    return _stable(b, c, n, n, k, M)[k]


def correction_F_all(b, c, n: int, kmax: int, M: int | None = None) -> list[np.ndarray]:
    """[F_{n,0}, ..., F_{n,kmax}] sharing one chain of Hankel products."""
    return _stable(b, c, n, n, kmax, M)


def correction_G(b: FourierSymbol, c: FourierSymbol, ell: int, k: int, M: int | None = None) -> np.ndarray:
    """G_{ell,k}(b,c) = P_0 T(c) Q_ell (Q_ell H(b) H(c~) Q_ell)^k Q_ell T(b) P_0 (N x N)."""
    if k < 0 or ell < 0:
        raise DomainError("ell and k must be nonnegative")
    return _stable(b, c, 0, ell, k, M)[k]


def correction_G_all(b, c, ell: int, kmax: int, M: int | None = None) -> list[np.ndarray]:
    return _stable(b, c, 0, ell, kmax, M)


def trace_F0_scalar(b: FourierSymbol, c: FourierSymbol, n: int) -> complex:
    """tr F_{n,0} = sum_d min(d, n+1) c_{-d} b_d for scalar b, c."""
    K = min(b.band, c.band)
    d = np.arange(1, K + 1)
    return complex(np.sum(np.minimum(d, n + 1) * c.coeff_range(-K, -1)[::-1, 0, 0]
                          * b.coeff_range(1, K)[:, 0, 0]))


def trace_F_bound(b: FourierSymbol, c: FourierSymbol, n: int, k: int) -> tuple[float, float]:
    """(|tr F_{n,k}|, N * sum_j ||Delta_j F_{n,k} Delta_j||)."""
    F = correction_F(b, c, n, k)
    N = b.block_size
    diag = sum(np.linalg.norm(F[j * N:(j + 1) * N, j * N:(j + 1) * N], 2) for j in range(n + 1))
    return abs(np.trace(F)), float(N * diag)


# ---------------------------------------------------------------------------
# singular values and norms
# ---------------------------------------------------------------------------

def singular_values(A) -> np.ndarray:
    """Nonincreasing singular values of a truncation (OpTruncation or dense array)."""
    mat = A.matrix if isinstance(A, OpTruncation) else np.asarray(A)
    return np.linalg.svd(mat, compute_uv=False)


def schatten_norm(A, p: float) -> float:
    s = singular_values(A)
    if np.isinf(p):
        return float(s[0]) if s.size else 0.0
    return float(np.sum(s ** p) ** (1.0 / p))


def hankel_singular_values(a: FourierSymbol, M: int | None = None) -> np.ndarray:
    """Singular values of H(a); the default size covers the full positive support."""
    M = M or max(a.band, 1)
    H = hankel_matrix(a, M)
    # real coefficients up to rounding: the real SVD is twice as fast
    if np.abs(H.imag).max(initial=0.0) <= 1e-13 * np.abs(H).max(initial=1.0):
        H = H.real
    return singular_values(H)


def hankel_sv_size(a: FourierSymbol, hi: int) -> int:
    """Section size for the leading ``hi`` singular values: the support, capped at 16 hi."""
    return max(min(a.band, max(16 * hi, 256)), 2 * hi)


def _hankel_tail_norm(h: np.ndarray) -> float:
    """Spectral norm of the Hankel matrix (h[i+j])_{i,j>=0} with h of shape (L, N, N)."""
    L, N, _ = h.shape
    if L == 0 or not np.any(h):
        return 0.0
    if L <= 1500:
        idx = np.add.outer(np.arange(L), np.arange(L))
        hh = np.zeros((2 * L, N, N), dtype=complex)
        hh[:L] = h
        return float(np.linalg.norm(_blocks_to_matrix(hh[idx]), 2))

    hc = np.conj(np.swapaxes(h, 1, 2))

    def mv(x):
        return _from_blocks(hankel_apply(h, _as_blocks(x.reshape(-1, 1), N), L)).ravel()

    def rmv(x):
        # adjoint of (h[i+j]) is (h[i+j]^*)
        return _from_blocks(hankel_apply(hc, _as_blocks(x.reshape(-1, 1), N), L)).ravel()

    op = LinearOperator((L * N, L * N), matvec=mv, rmatvec=rmv, dtype=complex)
    return float(svds(op, k=1, return_singular_vectors=False, tol=1e-10, random_state=0)[0])


def _column_norm(blocks: np.ndarray) -> float:
    # spectral norm of a vertical stack of N x N blocks
    if blocks.shape[0] == 0:
        return 0.0
    gram = np.einsum("kji,kjl->il", np.conj(blocks), blocks)
    return float(np.sqrt(max(np.linalg.eigvalsh(gram).max(), 0.0)))


@dataclass(frozen=True)
class TruncationNorms:
    n: int
    j: int
    qtb_delta: float
    delta_tc_q: float
    q_hb: float
    hc_q: float
    bound_qtb_delta: float
    bound_delta_tc_q: float
    bound_q_hb: float
    bound_hc_q: float

    def ratios(self) -> tuple[float, float, float, float]:
        def r(x, y):
            return x / y if y > 0 else (0.0 if x == 0 else np.inf)
        return (r(self.qtb_delta, self.bound_qtb_delta), r(self.delta_tc_q, self.bound_delta_tc_q),
                r(self.q_hb, self.bound_q_hb), r(self.hc_q, self.bound_hc_q))


class ModulusBank:
    """Cached entrywise shift profiles of a matrix symbol."""

    def __init__(self, f: FourierSymbol, M: int = 4096, max_scale: float = 1.0):
        N = f.block_size
        self.profiles = [ShiftProfile(entry(f, i, j), M, max_scale) for i in range(N) for j in range(N)]
        self.max_scale = max_scale

    def __call__(self, x: float) -> float:
        x = min(x, self.max_scale)
        return max(p(x) for p in self.profiles)


_BANKS: dict[int, tuple] = {}


def _banks(pair, M):
    key = id(pair)
    hit = _BANKS.get(key)
    if hit is None or hit[0] is not pair or hit[1] != M:
        hit = (pair, M, ModulusBank(pair.u_plus_inv, M), ModulusBank(pair.u_minus_inv, M),
               sup_norm(pair.v_minus), sup_norm(pair.v_plus))
        _BANKS.clear()
        _BANKS[key] = hit
    return hit[2:]


def bank_grid(pair) -> int:
    """Smallest admissible modulus grid carrying both inverse factors."""
    band = max(pair.u_plus_inv.band, pair.u_minus_inv.band)
    return max(4096, next_pow2(2 * band + 2))


def truncation_norms(pair, n: int, j: int, M: int | None = None, hankel: bool = True) -> TruncationNorms:
    """The four truncation norms and their modulus-of-continuity right-hand sides.

    Norms are exact for banded b, c (the full support is used); the bounds are
    ||v_-|| max omega([u_+^{-1}]_{ab}, 1/(n-j+1)) and the analogues, without A_N.
    ``hankel=False`` skips the two Hankel tail norms (reported as nan).
    """
    if not 0 <= j <= n:
        raise DomainError("j must lie in 0..n")
    b, c = pair.b, pair.c
    # Q_n T(b) Delta_j: blocks b_d, d >= n+1-j
    qtb = _column_norm(b.coeff_range(n + 1 - j, max(b.band, n + 1 - j)))
    # Delta_j T(c) Q_n: blocks c_{-d}, d >= n+1-j, stacked horizontally
    cc = c.coeff_range(-max(c.band, n + 1 - j), -(n + 1 - j))
    dtc = _column_norm(np.conj(np.swapaxes(cc, 1, 2)))
    # Q_n H(b): (b_{n+2+i+r}); H(c~) Q_n: (c_{-(n+2+r+q)})
    if hankel:
        qhb = _hankel_tail_norm(b.coeff_range(n + 2, max(b.band, n + 2)))
        hcq = _hankel_tail_norm(c.coeff_range(-max(c.band, n + 2), -(n + 2))[::-1])
    else:
        qhb = hcq = float("nan")
    w_up, w_um, vm, vp = _banks(pair, M or bank_grid(pair))
    s1 = 1.0 / (n - j + 1)
    s2 = 1.0 / (n + 1)
    return TruncationNorms(n, j, qtb, dtc, qhb, hcq,
                           vm * w_up(s1), vp * w_um(s1), vm * w_up(s2), vp * w_um(s2))
