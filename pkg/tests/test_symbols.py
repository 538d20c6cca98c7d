import math

import numpy as np
import pytest
from scipy.special import iv
from hypothesis import given
from hypothesis import strategies as st

from toeplitz_lab.errors import AliasingError, BlockSizeMismatch, SingularSymbolError
from toeplitz_lab.symbols import (FourierSymbol, evaluate, exp_lacunary, from_function,
                                  from_samples, inverse, krein_weight, laurent, multiply,
                                  sample_grid, tilde, tridiagonal, winding_number)

coef = st.floats(-1, 1, allow_nan=False)


@st.composite
def banded(draw, K=3, N=1):
    vals = draw(st.lists(coef, min_size=(2 * K + 1) * N * N * 2, max_size=(2 * K + 1) * N * N * 2))
    arr = np.array(vals).reshape(2, 2 * K + 1, N, N)
    return FourierSymbol(arr[0] + 1j * arr[1])


def close(a, b, tol):
    K = max(a.band, b.band)
    return np.abs(a.coeff_range(-K, K) - b.coeff_range(-K, K)).max() <= tol


# -- eval -------------------------------------------------------------------

def test_eval_examples():
    assert np.allclose(evaluate(FourierSymbol.identity(2), 1.0), np.eye(2))
    assert evaluate(laurent({1: 1, -1: 1}), 0.0)[0, 0] == pytest.approx(2)
    assert evaluate(tridiagonal(0.5, 0.3), 0.0)[0, 0] == pytest.approx(0.35)


# -- from_samples -----------------------------------------------------------

def test_from_samples_examples():
    a = from_samples(np.full(8, 3.0), 0)
    assert a.coeff(0)[0, 0] == pytest.approx(3)
    th = 2 * np.pi * np.arange(8) / 8
    a = from_samples(np.exp(1j * th), 1)
    assert abs(a.coeff(1)[0, 0] - 1) < 1e-14
    assert abs(a.coeff(0)[0, 0]) < 1e-14 and abs(a.coeff(-1)[0, 0]) < 1e-14
    th = 2 * np.pi * np.arange(64) / 64
    a = from_samples(np.exp(0.2 * np.cos(th)), 16)
    # a_1 = I_1(0.2)
    assert a.coeff(1)[0, 0].real == pytest.approx(iv(1, 0.2), abs=1e-15)


def test_from_samples_rejects_aliasing():
    with pytest.raises(AliasingError):
        from_samples(np.ones(8), 4)


@given(banded())
def test_round_trip(a):
    b = from_samples(sample_grid(a, 16), a.band)
    assert close(a, b, 1e-12)


@given(banded(K=2, N=2))
def test_round_trip_blocks(a):
    b = from_samples(sample_grid(a, 16), a.band)
    assert close(a, b, 1e-12)


# -- multiply ---------------------------------------------------------------

def test_multiply_examples():
    p = multiply(laurent({0: 1, 1: -0.5}), laurent({0: 1, -1: -0.3}))
    assert close(p, laurent({-1: -0.3, 0: 1.15, 1: -0.5}), 1e-15)
    a = tridiagonal(0.5, 0.3)
    assert close(multiply(a, FourierSymbol.identity()), a, 0)
    assert close(multiply(laurent({1: 1}), laurent({-1: 1})), laurent({0: 1}), 0)


def test_multiply_block_mismatch():
    with pytest.raises(BlockSizeMismatch):
        multiply(FourierSymbol.identity(1), FourierSymbol.identity(2))


def test_multiply_keeps_matrix_order():
    e12 = np.array([[0, 1], [0, 0]])
    e21 = e12.T
    a, b = FourierSymbol.constant(e12), FourierSymbol.constant(e21)
    assert np.allclose(multiply(a, b).coeff(0), e12 @ e21)
    assert np.allclose(multiply(b, a).coeff(0), e21 @ e12)


@given(banded(), banded(), banded())
def test_multiply_associative(a, b, c):
    assert close(multiply(multiply(a, b), c), multiply(a, multiply(b, c)), 1e-12)


# -- inverse ----------------------------------------------------------------

def test_inverse_examples():
    assert inverse(FourierSymbol.constant(2.0), 0).coeff(0)[0, 0] == pytest.approx(0.5)
    inv = inverse(laurent({0: 1, 1: -0.5}), 8)
    assert np.allclose([inv.coeff(k)[0, 0] for k in range(9)], 0.5 ** np.arange(9), atol=1e-10)
    assert close(inverse(FourierSymbol.identity(2), 0), FourierSymbol.identity(2), 1e-15)


def test_inverse_reproduces_identity():
    a = tridiagonal(0.5, 0.3)
    p = multiply(a, inverse(a, 64)).with_band(60)
    assert close(p, FourierSymbol.identity(), 1e-10)


def test_inverse_singular():
    with pytest.raises(SingularSymbolError):
        inverse(laurent({0: 1, 1: 1}), 4)


# -- tilde ------------------------------------------------------------------

def test_tilde_examples():
    assert close(tilde(laurent({1: 1})), laurent({-1: 1}), 0)
    assert close(tilde(tridiagonal(0.5, 0.3)), laurent({1: -0.3, 0: 1.15, -1: -0.5}), 1e-15)


@given(banded(K=2, N=2))
def test_tilde_involution(a):
    assert close(tilde(tilde(a)), a, 0)


@given(banded(), banded())
def test_tilde_product_scalar(a, b):
    assert close(tilde(multiply(a, b)), multiply(tilde(a), tilde(b)), 1e-12)


@given(banded(K=2, N=2), banded(K=2, N=2))
def test_tilde_product_coefficient_rule(a, b):
    ab, t = multiply(a, b), multiply(tilde(a), tilde(b))
    for k in range(-4, 5):
        assert np.allclose(t.coeff(k), ab.coeff(-k), atol=1e-12)


# -- winding ----------------------------------------------------------------

def test_winding_examples():
    assert winding_number(laurent({1: 1})) == 1
    assert winding_number(FourierSymbol.constant(2.0)) == 0
    assert winding_number(laurent({2: 1})) == 2


@given(st.integers(-3, 3), st.integers(-3, 3), st.floats(0, 0.45), st.floats(0, 0.45))
def test_winding_additive(p, q, x, y):
    a = laurent({p: 1, p + 1: x})
    b = laurent({q: 1, q - 1: y})
    assert winding_number(multiply(a, b)) == winding_number(a) + winding_number(b)


# -- krein weight -----------------------------------------------------------

def test_krein_weight_examples():
    assert krein_weight(laurent({1: 1, -1: 1})) == pytest.approx(2)
    assert krein_weight(FourierSymbol.constant(3.0)) == 0
    a = laurent({k: 1 / k ** 2 for k in range(1, 101)})
    assert krein_weight(a) == pytest.approx(sum(k ** -3 for k in range(1, 101)), rel=1e-12)
    assert krein_weight(a) == pytest.approx(1.20205, abs=1e-4)


# -- materialized symbols ---------------------------------------------------

def test_exp_lacunary_matches_pointwise_exp():
    a = exp_lacunary(0.3, 4, 0.5)
    th = np.linspace(0, 2 * np.pi, 17)
    w = sum(0.5 * 2 ** (-0.3 * j) * np.cos(2 ** j * th) for j in range(5))
    assert np.allclose(evaluate(a, th)[:, 0, 0], np.exp(w), atol=1e-12)


def test_from_function_round_trip():
    a = from_function(lambda th: np.exp(0.2 * np.cos(th)), 24)
    assert a.coeff(0)[0, 0].real == pytest.approx(1.0100250, abs=1e-7)
    assert math.isclose(a.coeff(1)[0, 0].real, a.coeff(-1)[0, 0].real, rel_tol=1e-12)
