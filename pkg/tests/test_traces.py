import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from toeplitz_lab.errors import DomainError
from toeplitz_lab.operators import toeplitz_matrix
from toeplitz_lab.traces import (AnalyticFunctionSpec, ContourSpec, check_contour, ef_constant,
                                 gf_constant, polynomial_trace_exact, spectrum_hull, trace_f)
from toeplitz_lab.symbols import FourierSymbol, exp_lacunary, laurent, tridiagonal

F = AnalyticFunctionSpec
COS2 = laurent({1: 1, -1: 1})  # 2 cos theta


# -- function specs -----------------------------------------------------------

def test_function_spec():
    assert F.power(3)(2.0) == 8
    assert F.polynomial([1, 0, 1]).derivative(3.0) == 6
    assert F.exp()(1.0) == pytest.approx(math.e)
    assert F.log()(math.e) == pytest.approx(1)
    assert F.log().cut_distance(1.0) == pytest.approx(1)
    assert F.from_record(F.power(2).to_record()) == F.power(2)
    with pytest.raises(DomainError):
        F("sin")
    with pytest.raises(DomainError):
        F.power(40)


# -- spectral hull --------------------------------------------------------------

def test_hull_examples():
    h = spectrum_hull(COS2)
    assert h.center == pytest.approx(0, abs=1e-12)
    assert h.radius == pytest.approx(2.2)
    assert h.contains(0) and not h.contains(3)
    h = spectrum_hull(FourierSymbol.constant(2.0))
    assert h.radius == 0 and h.distance(3) == pytest.approx(1)
    h = spectrum_hull(tridiagonal(0.5, 0.3))
    assert h.contains(1.15)
    assert not h.contains(0.2)


# -- traces ---------------------------------------------------------------------

def test_trace_examples():
    for n in range(6):
        tv = trace_f(COS2, F.power(1), n)
        assert tv.value == pytest.approx(0, abs=1e-12)
        tv = trace_f(COS2, F.power(2), n)
        assert tv.exact == 2 * (n + 1) - 2 and tv.difference < 1e-10
    T = toeplitz_matrix(COS2, 3)
    assert trace_f(COS2, F.exp(), 3).value == pytest.approx(np.sum(np.exp(np.linalg.eigvalsh(T))))


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=5), st.integers(0, 8),
       st.lists(st.integers(-2, 2), min_size=1, max_size=4))
def test_exact_integer_traces(sym, n, coeffs):
    a = laurent({k - len(sym) // 2: v for k, v in enumerate(sym)})
    exact = polynomial_trace_exact(a, coeffs, n)
    assert isinstance(exact, int)
    T = toeplitz_matrix(a, n).real
    ref = sum(c * np.trace(np.linalg.matrix_power(T, p)) for p, c in enumerate(coeffs))
    assert exact == pytest.approx(ref, abs=1e-6 * max(1, abs(ref)))


@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 6))
def test_trace_linear(x, y, n):
    a = tridiagonal(0.5, 0.3)
    lhs = trace_f(a, F.polynomial([0, x, y]), n).value
    rhs = x * trace_f(a, F.power(1), n).value + y * trace_f(a, F.power(2), n).value
    assert lhs == pytest.approx(rhs, abs=1e-10)


# -- G_f ------------------------------------------------------------------------

def test_gf_examples():
    assert gf_constant(COS2, F.power(2)) == pytest.approx(2)
    a = exp_lacunary(0.5, 0, 0.2)  # exp(0.2 cos)
    assert gf_constant(a, F.power(1)) == pytest.approx(special.iv(0, 0.2), abs=1e-12)
    assert gf_constant(a, F.power(1)) == pytest.approx(1.010025, abs=1e-6)
    assert gf_constant(a, F.log()) == pytest.approx(0, abs=1e-12)


def test_gf_block_diagonal():
    a = FourierSymbol.from_dict({0: np.diag([1.0, 2.0]), 1: np.diag([0.3, 0.0])})
    assert gf_constant(a, F.power(2)) == pytest.approx(1 + 4)  # (1 + 0.3t)^2 has mean 1


# -- E_f ------------------------------------------------------------------------

def test_ef_examples():
    c = FourierSymbol.constant(2.0)
    assert ef_constant(c, F.power(2), ContourSpec(2, 1)).value == pytest.approx(0, abs=1e-12)
    assert ef_constant(COS2, F.power(2), ContourSpec(0, 2.5)).value == pytest.approx(-2, abs=1e-8)
    t = tridiagonal(0.5, 0.3)
    for r in (0.9, 1.125):
        ef = ef_constant(t, F.log(), ContourSpec(1.15, r))
        assert ef.value == pytest.approx(math.log(1 / 0.85), abs=1e-8)
        assert ef.value == pytest.approx(0.162519, abs=1e-6)
        assert ef.change < 1e-6


def test_ef_matches_finite_n():
    # for a polynomial f, tr f(T_n) - (n + 1) G_f settles to E_f
    a = tridiagonal(0.5, 0.3)
    f = F.polynomial([0, 1, 0, 1])
    G = gf_constant(a, f)
    E = ef_constant(a, f, ContourSpec(1.15, 1.0)).value
    for n in (10, 20):
        assert trace_f(a, f, n).value - (n + 1) * G == pytest.approx(E, abs=1e-9)


def test_ef_contour_checks():
    t = tridiagonal(0.5, 0.3)
    hull = spectrum_hull(t)
    with pytest.raises(DomainError):
        check_contour(ContourSpec(1.15, 0.5), hull, F.power(1))
    with pytest.raises(DomainError):
        check_contour(ContourSpec(1.15, 1.3), hull, F.log())
    assert check_contour(ContourSpec(1.15, 0.9), hull, F.log()) > 0
    with pytest.raises(DomainError):
        ContourSpec(0, 1, nodes=100)


@settings(max_examples=5)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_ef_linear(x, y):
    a = exp_lacunary(0.5, 0, 0.2)
    con = ContourSpec(1, 0.6)
    f1, f2 = F.power(1), F.power(2)
    lhs = ef_constant(a, F.polynomial([0, x, y]), con).value
    rhs = x * ef_constant(a, f1, con).value + y * ef_constant(a, f2, con).value
    assert lhs == pytest.approx(rhs, abs=1e-6)
