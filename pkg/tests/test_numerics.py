import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flowclass.errors import EvaluationError, NumericalFailure, SingularMatrixError
from flowclass.numerics import (
    Dual,
    eigen,
    fd_jacobian,
    frobenius,
    jacobian,
    jacobian_product,
    solve,
)
from flowclass import numerics as nx
from flowclass.vectorfield import builtin, make_field


def test_dual_product_rule():
    a = Dual(2.0, [1.0, 0.0])
    b = Dual(3.0, [0.0, 1.0])
    c = a * b
    assert c.value == 6.0
    np.testing.assert_array_equal(c.partials, [3.0, 2.0])


def test_dual_quotient_and_power():
    x = Dual(2.0, [1.0])
    np.testing.assert_allclose((1 / x).partials, [-0.25])
    np.testing.assert_allclose((x**3).partials, [12.0])
    np.testing.assert_allclose((x**0.5).partials, [0.5 / math.sqrt(2)])
    np.testing.assert_allclose((2**x).partials, [4 * math.log(2)])


@pytest.mark.parametrize(
    "fn, d",
    [
        (nx.exp, math.exp),
        (nx.log, lambda v: 1 / v),
        (nx.sin, math.cos),
        (nx.cos, lambda v: -math.sin(v)),
        (nx.tanh, lambda v: 1 - math.tanh(v) ** 2),
        (nx.sqrt, lambda v: 0.5 / math.sqrt(v)),
        (nx.tan, lambda v: 1 / math.cos(v) ** 2),
    ],
)
def test_elementary_derivatives(fn, d):
    v = 0.7
    out = fn(Dual(v, [1.0]))
    assert out.partials[0] == pytest.approx(d(v), rel=1e-14)


def test_square_at_zero_is_differentiable():
    z = Dual(0.0, [1.0])
    assert (z**2).partials[0] == 0.0


def test_worked_jacobian_example():
    f = make_field(lambda x: np.array([x[0] ** 2, x[0] * x[1]]), 2)
    J = jacobian(f, [2.0, 3.0])
    np.testing.assert_allclose(J, [[4.0, 0.0], [3.0, 2.0]], rtol=0, atol=1e-15)


def test_identity_jacobian():
    f = make_field(lambda x: x, 3)
    np.testing.assert_array_equal(jacobian(f, [1.0, -2.0, 5.0]), np.eye(3))


def test_stemcell_jacobian_matches_finite_differences():
    f = builtin("stemcell", {"L": 150.0})
    x = np.array([60.0, 50.0, 40.0, 20.0])
    J = jacobian(f, x)
    # per-column step h = 1e-6 max(1, |x_j|)
    Jfd = np.empty((4, 4))
    for j in range(4):
        h = 1e-6 * max(1.0, abs(x[j]))
        e = np.zeros(4)
        e[j] = h
        Jfd[:, j] = (f(x + e) - f(x - e)) / (2 * h)
    assert np.max(np.abs(J - Jfd)) < 1e-5


def test_nonfinite_derivative_reports_row():
    f = make_field(lambda x: [x[0], nx.sqrt(x[1])], 2)
    with pytest.raises(EvaluationError) as info:
        jacobian(f, [1.0, 0.0])
    assert info.value.index == 1


def test_jacobian_product_gives_JV():
    f = builtin("lorenz")
    x = np.array([1.0, 2.0, 3.0])
    V = np.arange(9.0).reshape(3, 3)
    F, JV = jacobian_product(f, x, V)
    np.testing.assert_allclose(F, f(x))
    np.testing.assert_allclose(JV, jacobian(f, x) @ V, atol=1e-12)


def test_fd_jacobian_examples():
    A = np.array([[1.0, 2.0], [-3.0, 0.5]])
    lin = make_field(lambda x: A @ x, 2)
    np.testing.assert_allclose(fd_jacobian(lin, [0.3, -0.2]), A, atol=1e-9)
    f = make_field(lambda x: np.array([x[0] ** 2, x[0] * x[1]]), 2)
    np.testing.assert_allclose(fd_jacobian(f, [2.0, 3.0], h=1e-6), [[4, 0], [3, 2]], atol=1e-8)
    const = make_field(lambda x: np.array([1.0, 2.0]), 2)
    np.testing.assert_array_equal(fd_jacobian(const, [0.0, 0.0]), np.zeros((2, 2)))


def test_eigen_examples():
    np.testing.assert_allclose(eigen([[-2.0, -1.0], [-1.0, -2.0]]).values, [-1.0, -3.0])
    np.testing.assert_allclose(eigen([[0.0, -1.0], [1.0, 0.0]]).values, [1j, -1j], atol=1e-15)
    es = eigen(2 * np.eye(2))
    np.testing.assert_allclose(es.values, [2.0, 2.0])
    assert abs(np.vdot(es.vectors[:, 0], es.vectors[:, 1])) < 1e-12


def test_eigen_rejects_nonfinite_and_large():
    with pytest.raises(NumericalFailure):
        eigen([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        eigen(np.eye(65))


@pytest.mark.property
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)).map(lambda s: (s[0], s[0])),
              elements=st.floats(-10, 10)))
def test_eigen_residual_trace_det(A):
    es = eigen(A)
    scale = max(1.0, np.linalg.norm(A, 2))
    for lam, v in zip(es.values, es.vectors.T):
        assert np.linalg.norm(A @ v - lam * v) <= 1e-8 * scale
    assert abs(es.values.sum() - np.trace(A)) <= 1e-8 * scale * len(A)
    det = np.linalg.det(A)
    assert abs(np.prod(es.values) - det) <= 1e-8 * max(1.0, scale ** len(A))
    # real input: spectrum closed under conjugation
    for lam in es.values:
        assert np.min(np.abs(es.values - lam.conjugate())) <= 1e-6 * scale
    # ordering: real part descending
    assert np.all(np.diff(es.values.real) <= 1e-12 * scale)


def test_solve_examples(rng):
    b = np.array([1.0, -2.0])
    np.testing.assert_array_equal(solve(np.eye(2), b), b)
    np.testing.assert_allclose(solve([[2.0, 0.0], [0.0, 4.0]], [2.0, 8.0]), [1.0, 2.0])
    A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    b = rng.normal(size=4)
    y = solve(A, b)
    assert np.linalg.norm(A @ y - b) <= 1e-10 * max(1.0, np.linalg.norm(b))


def test_solve_singular():
    with pytest.raises(SingularMatrixError):
        solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def test_frobenius():
    assert frobenius(np.zeros((3, 3))) == 0.0
    assert frobenius([[0.0, 1.0], [-1.0, 0.0]]) == pytest.approx(math.sqrt(2))
    assert frobenius(np.eye(3)) == pytest.approx(math.sqrt(3))
