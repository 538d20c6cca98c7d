import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toeplitz_lab.errors import BlockSizeMismatch, CutoffTooSmallError, DomainError
from toeplitz_lab.factorization import scalar_canonical_factor
from toeplitz_lab.operators import (OpTruncation, ProjectionMask, correction_F, correction_F_all,
                                    correction_G, hankel_apply, hankel_matrix,
                                    hankel_singular_values, schatten_norm, singular_values,
                                    toeplitz_matrix, toeplitz_section, trace_F0_scalar, trace_F_bound,
                                    truncation_norms)
from toeplitz_lab.symbols import (FourierSymbol, inverse, lacunary_series, laurent, tilde,
                                  tridiagonal)


@st.composite
def small_symbol(draw, K=3, N=1):
    vals = draw(st.lists(st.floats(-1, 1), min_size=2 * (2 * K + 1) * N * N,
                         max_size=2 * (2 * K + 1) * N * N))
    arr = np.array(vals).reshape(2, 2 * K + 1, N, N)
    return FourierSymbol(arr[0] + 1j * arr[1])


def brute_F(b, c, n, k, outer=None, M=64):
    """Dense P T(c) Q (Q H(b) H(c~) Q)^k Q T(b) P inside an M-truncation."""
    outer = n if outer is None else outer
    N = b.block_size
    P = ProjectionMask("P", outer, M, N).matrix()
    Q = ProjectionMask("Q", n, M, N).matrix()
    Tc, Tb = toeplitz_matrix(c, M - 1), toeplitz_matrix(b, M - 1)
    inner = Q @ hankel_matrix(b, M) @ hankel_matrix(tilde(c), M) @ Q
    out = P @ Tc @ Q @ np.linalg.matrix_power(inner, k) @ Q @ Tb @ P
    return out[:(outer + 1) * N, :(outer + 1) * N]


# -- sections ------------------------------------------------------------------

def test_toeplitz_examples():
    assert np.allclose(toeplitz_matrix(laurent({1: 1, -1: 1}), 2), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert np.allclose(toeplitz_matrix(FourierSymbol.identity(2), 3), np.eye(8))
    assert np.allclose(toeplitz_matrix(tridiagonal(0.5, 0.3), 1), [[1.15, -0.3], [-0.5, 1.15]])


def test_hankel_examples():
    H = hankel_matrix(laurent({1: 1}), 4)
    assert H[0, 0] == 1 and np.count_nonzero(H) == 1
    H = hankel_matrix(laurent({3: 1}), 5)
    assert np.array_equal(H, np.pad(np.fliplr(np.eye(3)), ((0, 2), (0, 2))))
    assert not np.any(hankel_matrix(laurent({-1: 1}), 5))


def test_truncation_type():
    a = tridiagonal(0.5, 0.3)
    T = OpTruncation.toeplitz(a, 6)
    I = OpTruncation.identity(6)
    assert np.allclose((T @ I).matrix, T.matrix)
    assert np.allclose((T - T).matrix, 0)
    assert T.block(1, 0)[0, 0] == pytest.approx(-0.5)
    with pytest.raises(BlockSizeMismatch):
        T @ OpTruncation.identity(5)


@given(st.integers(0, 9), st.integers(1, 2))
def test_projection_algebra(n, N):
    M = 10
    P = ProjectionMask("P", n, M, N).matrix()
    Q = ProjectionMask("Q", n, M, N).matrix()
    assert np.array_equal(P @ P, P) and not np.any(P @ Q)
    assert np.array_equal(P + Q, np.eye(M * N))
    S = sum(ProjectionMask("Delta", j, M, N).matrix() for j in range(n + 1))
    assert np.array_equal(S, P)
    if n >= 1:
        D = ProjectionMask("Delta", n, M, N).matrix()
        assert np.array_equal(D, P - ProjectionMask("P", n - 1, M, N).matrix())


def test_toeplitz_hankel_identity():
    # I - T(a)T(a^{-1}) = H(a)H(a~^{-1}) on interior blocks
    a = laurent({-2: 0.1, -1: 0.3, 0: 2.0, 1: -0.4, 3: 0.2})
    ainv = inverse(a, 120)
    M = 80
    Ta = toeplitz_section(a, (0, M), (0, 2 * M))
    Tinv = toeplitz_section(ainv, (0, 2 * M), (0, M))
    lhs = np.eye(M) - Ta @ Tinv
    rhs = hankel_matrix(a, M) @ hankel_matrix(tilde(ainv), M)
    assert np.abs(lhs[:M // 2, :M // 2] - rhs[:M // 2, :M // 2]).max() < 1e-8


# -- Hankel products --------------------------------------------------------------

@given(st.integers(1, 40), st.integers(1, 30), st.integers(1, 50), st.integers(1, 2))
def test_hankel_apply_matches_dense(L, R, rows, N):
    rng = np.random.default_rng(L * 1000 + R)
    h = rng.standard_normal((L, N, N)) + 1j * rng.standard_normal((L, N, N))
    X = rng.standard_normal((R, N, 2))
    dense = np.zeros((rows, N, 2), dtype=complex)
    for i in range(rows):
        for j in range(R):
            if i + j < L:
                dense[i] += h[i + j] @ X[j]
    assert np.allclose(hankel_apply(h, X, rows), dense, atol=1e-10)


def test_hankel_apply_fft_path():
    rng = np.random.default_rng(1)
    L, R, rows = 3000, 2500, 2800
    h = rng.standard_normal((L, 1, 1))
    X = rng.standard_normal((R, 1, 1))
    ref = np.array([h[i:i + R, 0, 0][:max(min(R, L - i), 0)] @ X[:max(min(R, L - i), 0), 0, 0]
                    for i in range(rows)])
    assert np.allclose(hankel_apply(h, X, rows)[:, 0, 0], ref, atol=1e-9)


# -- correction operators ----------------------------------------------------------

def test_correction_constants_vanish():
    b, c = FourierSymbol.constant(2.0), FourierSymbol.constant(-1.0)
    for n in range(4):
        for k in range(3):
            assert not np.any(correction_F(b, c, n, k))
    assert not np.any(correction_G(b, c, 2, 0))


def test_correction_shift_examples():
    t, tinv = laurent({1: 1}), laurent({-1: 1})
    # b = c = t gives zero because P_n T(t) Q_n = 0
    assert not np.any(correction_F(t, t, 3, 0))
    # b = t, c = t^{-1}: a single 1 at (n, n)
    for n in range(5):
        F = correction_F(t, tinv, n, 0)
        expect = np.zeros((n + 1, n + 1))
        expect[n, n] = 1
        assert np.allclose(F, expect)
        assert np.trace(F) == pytest.approx(1)
        assert not np.any(correction_F(t, tinv, n, 1))
    assert correction_G(t, tinv, 0, 0)[0, 0] == pytest.approx(1)
    for ell in range(1, 4):
        assert correction_G(t, tinv, ell, 0)[0, 0] == 0


@given(small_symbol(), small_symbol(), st.integers(0, 6), st.integers(0, 3))
def test_correction_matches_dense(b, c, n, k):
    assert np.abs(correction_F(b, c, n, k) - brute_F(b, c, n, k)).max() <= 1e-10


@given(small_symbol(K=2, N=2), small_symbol(K=2, N=2), st.integers(0, 4), st.integers(0, 2))
def test_correction_matches_dense_blocks(b, c, ell, k):
    dense = brute_F(b, c, ell, k, outer=0)
    assert np.abs(correction_G(b, c, ell, k) - dense).max() <= 1e-10


@given(small_symbol(), small_symbol(), st.integers(0, 6))
def test_correction_M_stable(b, c, n):
    M = 4 * (n + b.band + c.band)
    F1 = correction_F_all(b, c, n, 2, M)
    F2 = correction_F_all(b, c, n, 2, 2 * M)
    F3 = correction_F_all(b, c, n, 2)
    for x, y, z in zip(F1, F2, F3):
        assert np.abs(x - y).max() <= 1e-12 and np.abs(x - z).max() <= 1e-12


def test_correction_cutoff_too_small():
    b = laurent({k: 0.9 ** abs(k) for k in range(-6, 7)})
    with pytest.raises(CutoffTooSmallError):
        correction_F(b, b, 4, 2, M=6)


def test_correction_domain():
    with pytest.raises(DomainError):
        correction_F(laurent({1: 1}), laurent({1: 1}), 2, -1)


@given(small_symbol(), small_symbol(), st.integers(0, 8))
def test_trace_F0_formula(b, c, n):
    assert np.trace(correction_F(b, c, n, 0)) == pytest.approx(trace_F0_scalar(b, c, n), abs=1e-10)


@given(small_symbol(K=2, N=2), small_symbol(K=2, N=2), st.integers(0, 5), st.integers(0, 2))
def test_trace_F_bound(b, c, n, k):
    tr, bound = trace_F_bound(b, c, n, k)
    assert tr <= bound + 1e-12


# -- singular values ---------------------------------------------------------------

def test_singular_value_examples():
    s = singular_values(OpTruncation.hankel(laurent({3: 1}), 6))
    assert np.allclose(s, [1, 1, 1, 0, 0, 0])
    assert np.allclose(singular_values(OpTruncation.identity(5)), np.ones(5))
    assert schatten_norm(OpTruncation.identity(4), 2) == pytest.approx(2.0)
    assert schatten_norm(OpTruncation.identity(4), np.inf) == pytest.approx(1.0)


def test_singular_values_nonincreasing(rng):
    s = singular_values(rng.standard_normal((12, 12)))
    assert np.all(np.diff(s) <= 0)


def test_hankel_decay_lacunary():
    a = lacunary_series(0.4, 10)
    s = hankel_singular_values(a)
    k = np.arange(8, 129)
    slope = np.polyfit(np.log(k), np.log(s[k - 1]), 1)[0]
    assert -0.5 <= slope <= -0.3


# -- truncation norms -------------------------------------------------------------

def test_truncation_norms_polynomial():
    pair = scalar_canonical_factor(tridiagonal(0.5, 0.3))
    pair = dataclasses.replace(pair, b=laurent({0: 1.0, 1: 0.4, 2: 0.2}))
    d = 2
    for n in (4, 8):
        for j in range(n + 1):
            q = truncation_norms(pair, n, j, hankel=False).qtb_delta
            if n - j >= d:
                assert q == 0
            else:
                assert q > 0


def test_truncation_norms_constants():
    pair = scalar_canonical_factor(FourierSymbol.constant(3.0))
    t = truncation_norms(pair, 5, 2)
    assert (t.qtb_delta, t.delta_tc_q, t.q_hb, t.hc_q) == (0, 0, 0, 0)


def test_truncation_norms_tridiagonal():
    pair = scalar_canonical_factor(tridiagonal(0.5, 0.3))
    t = truncation_norms(pair, 8, 0)
    # b_k = 0.85 * 0.5^k for k >= 1, so Q_8 H(b) is rank one
    assert t.q_hb == pytest.approx(0.85 * 0.5 ** 10 / 0.75, rel=1e-9)
    full = hankel_singular_values(pair.b, 200)[0]
    assert full == pytest.approx(0.85 * 0.5 / 0.75, rel=1e-9)
    assert t.q_hb <= full
    assert all(r < np.inf for r in t.ratios())
