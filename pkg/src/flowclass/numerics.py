"""Small dense numerical kernels.

Forward-mode automatic differentiation is done with :class:`Dual`, a scalar
carrying a vector of partial derivatives. Vector fields are evaluated on a
numpy object array of duals, so any field written with ordinary arithmetic
(and the elementary functions exported here or through numpy ufuncs)
differentiates exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EvaluationError, NumericalFailure, SingularMatrixError

__all__ = [
    "Dual",
    "EigenSet",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "tanh",
    "sqrt",
    "jacobian",
    "jacobian_product",
    "fd_jacobian",
    "eigen",
    "solve",
    "frobenius",
]


class Dual:
    """Real number with first-order partial derivatives.

    Parameters
    ----------
    value : float
        Primal value.
    partials : array_like
        Derivatives with respect to each independent variable.
    """

    __slots__ = ("value", "partials")

    def __init__(self, value, partials):
        self.value = float(value)
        self.partials = np.asarray(partials, dtype=float)

    def __repr__(self):
        return f"Dual({self.value!r}, {self.partials!r})"

    def _lift(self, c):
        return Dual(c, np.zeros_like(self.partials))

    # arithmetic
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.partials + other.partials)
        return Dual(self.value + other, self.partials)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.partials - other.partials)
        return Dual(self.value - other, self.partials)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.partials)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.value * other.partials + other.value * self.partials,
            )
        return Dual(self.value * other, self.partials * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.value / other.value
            return Dual(q, (self.partials - q * other.partials) / other.value)
        return Dual(self.value / other, self.partials / other)

    def __rtruediv__(self, other):
        q = other / self.value
        return Dual(q, -q / self.value * self.partials)

    def __neg__(self):
        return Dual(-self.value, -self.partials)

    def __pos__(self):
        return self

    def __abs__(self):
        if self.value < 0:
            return -self
        return self

    def __pow__(self, p):
        if isinstance(p, Dual):
            return (p * self.log()).exp()
        p = float(p)
        if p == 0.0:
            return self._lift(1.0)
        if p.is_integer() and abs(p) <= 16:
            k = int(p)
            # repeated products keep x**2 differentiable at x == 0
            base = self if k > 0 else 1.0 / self
            out = base
            for _ in range(abs(k) - 1):
                out = out * base
            return out
        v = self.value**p
        return Dual(v, p * self.value ** (p - 1.0) * self.partials)

    def __rpow__(self, a):
        v = float(a) ** self.value
        return Dual(v, v * math.log(a) * self.partials)

    # comparisons act on the primal value
    def __lt__(self, other):
        return self.value < _primal(other)

    def __le__(self, other):
        return self.value <= _primal(other)

    def __gt__(self, other):
        return self.value > _primal(other)

    def __ge__(self, other):
        return self.value >= _primal(other)

    def __float__(self):
        return self.value

    # elementary functions; numpy ufuncs on object arrays dispatch to these
    def exp(self):
        e = math.exp(self.value)
        return Dual(e, e * self.partials)

    def log(self):
        return Dual(_safe_log(self.value), self.partials / self.value)

    def sqrt(self):
        r = math.sqrt(self.value) if self.value >= 0 else math.nan
        return Dual(r, self.partials / (2.0 * r) if r != 0 else self.partials * math.inf)

    def sin(self):
        return Dual(math.sin(self.value), math.cos(self.value) * self.partials)

    def cos(self):
        return Dual(math.cos(self.value), -math.sin(self.value) * self.partials)

    def tan(self):
        t = math.tan(self.value)
        return Dual(t, (1.0 + t * t) * self.partials)

    def tanh(self):
        t = math.tanh(self.value)
        return Dual(t, (1.0 - t * t) * self.partials)

    def absolute(self):
        return abs(self)


def _primal(x):
    return x.value if isinstance(x, Dual) else x


def _safe_log(v):
    if v > 0:
        return math.log(v)
    return -math.inf if v == 0 else math.nan


def _unary(name, npfun):
    def f(x):
        if isinstance(x, Dual):
            return getattr(x, name)()
        return npfun(x)

    f.__name__ = name
    f.__doc__ = f"``{name}`` for floats, arrays and :class:`Dual` values."
    return f


exp = _unary("exp", np.exp)
log = _unary("log", np.log)
sin = _unary("sin", np.sin)
cos = _unary("cos", np.cos)
tan = _unary("tan", np.tan)
tanh = _unary("tanh", np.tanh)
sqrt = _unary("sqrt", np.sqrt)


def _fn(field):
    return getattr(field, "fn", field)


def _dual_forward(fn, x, seeds):
    x = np.asarray(x, dtype=float)
    xd = np.empty(x.shape[0], dtype=object)
    for i in range(x.shape[0]):
        xd[i] = Dual(x[i], seeds[i])
    with np.errstate(all="ignore"):
        try:
            out = fn(xd)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvaluationError(f"field evaluation failed on dual input: {exc}") from exc
    out = list(out) if not np.isscalar(out) else [out]
    values = np.empty(len(out))
    derivs = np.zeros((len(out), seeds.shape[1]))
    for i, o in enumerate(out):
        if isinstance(o, Dual):
            values[i] = o.value
            derivs[i] = o.partials
        else:
            values[i] = float(o)
    return values, derivs


def jacobian(field, x):
    """Jacobian ``J[i, j] = dF_i/dx_j`` by one forward-mode dual pass.

    Parameters
    ----------
    field : VectorField or callable
    x : array_like, shape (n,)

    Returns
    -------
    ndarray, shape (n, n)

    Raises
    ------
    EvaluationError
        If any derivative is non-finite; ``index`` is the offending row.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    _, J = _dual_forward(_fn(field), x, np.eye(n))
    if J.shape != (n, n):
        raise EvaluationError(f"field returned {J.shape[0]} components for a {n}-vector")
    bad = ~np.isfinite(J)
    if bad.any():
        i = int(np.argwhere(bad)[0][0])
        raise EvaluationError(f"non-finite derivative in row {i} at x={x.tolist()}", index=i)
    return J


def jacobian_product(field, x, V):
    """Return ``(F(x), J(x) @ V)`` from a single dual pass seeded with ``V``."""
    V = np.asarray(V, dtype=float)
    return _dual_forward(_fn(field), x, V)


def fd_jacobian(field, x, h=1e-6):
    """Central finite-difference Jacobian, one column per coordinate."""
    if h <= 0:
        raise ValueError("h must be positive")
    f = _fn(field)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2 * h))
    return np.column_stack(cols)


@dataclass(frozen=True)
class EigenSet:
    """Eigenpairs sorted by real part, then imaginary part, both descending.

    ``vectors[:, k]`` is the unit eigenvector paired with ``values[k]``.
    """

    values: np.ndarray
    vectors: np.ndarray


def eigen(A):
    """Full eigendecomposition of a small dense real matrix.

    Backed by LAPACK ``geev``. The ordering is fixed so that downstream
    reports are deterministic, and every returned pair is checked against
    the residual bound ``|A v - l v| <= 1e-8 max(1, |A|)``.

    Raises
    ------
    NumericalFailure
        On non-finite input, LAPACK non-convergence or a residual violation.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > 64:
        raise ValueError("eigen is limited to n <= 64")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix has non-finite entries")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration did not converge: {exc}") from exc
    w = np.asarray(w, dtype=complex)
    V = np.asarray(V, dtype=complex)
    scale = max(1.0, frobenius(A))
    if np.any(np.linalg.norm(A @ V - V * w, axis=0) > 1e-8 * scale * np.linalg.norm(V, axis=0)):
        # geev balances the matrix first, which can go wrong for wildly
        # scaled entries; the Schur route does not balance
        w, V = _eig_unbalanced(A)
    # conjugate pairs share a real part exactly when LAPACK returns them
    order = sorted(range(len(w)), key=lambda k: (-w[k].real, -w[k].imag))
    w = w[order]
    V = V[:, order]
    for k in range(V.shape[1]):
        v = V[:, k]
        v = v / np.linalg.norm(v)
        # fix the phase: largest component real and positive
        p = np.argmax(np.abs(v) - 1e-12 * np.arange(len(v)))
        v = v * (abs(v[p]) / v[p])
        V[:, k] = v
    resid = np.linalg.norm(A @ V - V * w, axis=0)
    if np.any(resid > 1e-8 * scale):
        raise NumericalFailure(f"eigenpair residual {resid.max():.3e} exceeds bound")
    return EigenSet(values=w, vectors=V)


def _eig_unbalanced(A):
    try:
        T, _ = scipy.linalg.schur(A, output="real")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Schur decomposition failed: {exc}") from exc
    n = A.shape[0]
    w = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            # 2x2 block: an exact conjugate pair
            a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
            mid = 0.5 * (a + d)
            disc = (0.5 * (a - d)) ** 2 + b * c
            if disc < 0:
                r = math.sqrt(-disc)
                w[i], w[i + 1] = complex(mid, r), complex(mid, -r)
            else:
                r = math.sqrt(disc)
                w[i], w[i + 1] = mid + r, mid - r
            i += 2
        else:
            w[i] = T[i, i]
            i += 1
    V = np.empty((n, n), dtype=complex)
    for k, lam in enumerate(w):
        _, _, Vh = np.linalg.svd(A - lam * np.eye(n))
        V[:, k] = Vh[-1].conj()
    return w, V


def solve(A, b):
    """Solve ``A y = b`` by LU with partial pivoting.

    Raises
    ------
    SingularMatrixError
        When a pivot falls below ``1e-14 * |A|_F`` or the residual bound
        ``|A y - b| <= 1e-10 max(1, |b|)`` cannot be met.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise SingularMatrixError("non-finite system")
    norm = frobenius(A)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    if norm == 0.0 or np.min(np.abs(np.diag(lu))) < 1e-14 * norm:
        raise SingularMatrixError("pivot below singularity threshold")
    y = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    r = A @ y - b
    bound = 1e-10 * max(1.0, float(np.linalg.norm(b)))
    if np.linalg.norm(r) > bound:
        y = y - scipy.linalg.lu_solve((lu, piv), r, check_finite=False)
        if np.linalg.norm(A @ y - b) > bound:
            raise SingularMatrixError("matrix too ill-conditioned for the residual bound")
    return y


def frobenius(A):
    return float(np.sqrt(np.sum(np.square(np.asarray(A, dtype=float)))))
