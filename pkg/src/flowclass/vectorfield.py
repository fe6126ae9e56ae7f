"""Vector fields ``dx/dt = F(x)`` and the built-in model zoo."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    EvaluationError,
    InconsistentDimensionError,
    InvalidDimensionError,
    UnknownModelError,
    UnknownParameterError,
)

__all__ = [
    "VectorField",
    "make_field",
    "infer_field",
    "dimension",
    "StemCellParams",
    "stem_cell_rhs",
    "builtin",
    "BUILTIN_MODELS",
    "BUILTIN_DIMENSIONS",
]


@dataclass(frozen=True)
class VectorField:
    """An autonomous vector field of fixed dimension.

    ``fn`` maps an ``n``-vector to an ``n``-vector. It is called with numpy
    float arrays, with object arrays of :class:`~flowclass.numerics.Dual`
    (for Jacobians) and, when ``vectorized`` is true, with ``(n, m)`` arrays
    holding ``m`` states column-wise.
    """

    fn: Callable
    dim: int
    name: str | None = None
    vectorized: bool = False
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidDimensionError(f"dimension must be >= 1, got {self.dim}")

    def __call__(self, x):
        if isinstance(x, np.ndarray) and x.dtype == object:
            # dual input from a composed field: keep the derivative parts
            out = np.empty(self.dim, dtype=object)
            out[:] = list(self.fn(x))
            return out
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            try:
                out = self.fn(x)
            except (ZeroDivisionError, OverflowError) as exc:
                raise EvaluationError(f"field evaluation failed at {x.tolist()}: {exc}") from exc
        out = np.asarray(out, dtype=float).reshape(-1)
        if out.shape[0] != self.dim:
            raise EvaluationError(f"field returned {out.shape[0]} components, expected {self.dim}")
        bad = ~np.isfinite(out)
        if bad.any():
            i = int(np.argmax(bad))
            raise EvaluationError(f"non-finite component {i} at x={x.tolist()}", index=i)
        return out

    def batch(self, X):
        """Evaluate on states stored column-wise in ``X`` (shape ``(n, m)``).

        No finiteness check; callers inspect the result.
        """
        X = np.asarray(X, dtype=float)
        n, m = X.shape
        with np.errstate(all="ignore"):
            if self.vectorized:
                try:
                    out = self.fn(X)
                except (ZeroDivisionError, OverflowError):
                    return np.full((n, m), np.nan)
                try:
                    arr = np.asarray(out, dtype=float)
                except ValueError:
                    arr = None
                if arr is not None and arr.shape == (n, m):
                    return arr
                # some components were constants; broadcast them per row
                return np.array([np.broadcast_to(np.asarray(r, dtype=float), (m,)) for r in out])
            out = np.empty((n, m))
            for j in range(m):
                try:
                    out[:, j] = np.asarray(self.fn(X[:, j]), dtype=float).reshape(-1)
                except (ZeroDivisionError, OverflowError):
                    out[:, j] = np.nan
            return out

    def negated(self):
        """The time-reversed field ``-F``."""
        fn = self.fn
        name = f"-{self.name}" if self.name else None
        if self.vectorized:
            return dataclasses.replace(self, fn=lambda x: [-c for c in fn(x)], name=name)
        return dataclasses.replace(self, fn=lambda x: -np.asarray(fn(x)), name=name)

    def scaled(self, c):
        fn = self.fn
        if self.vectorized:
            return dataclasses.replace(self, fn=lambda x: [c * v for v in fn(x)])
        return dataclasses.replace(self, fn=lambda x: c * np.asarray(fn(x)))


def make_field(fn, dim, name=None, vectorized=False):
    """Wrap ``fn`` as a :class:`VectorField` of dimension ``dim``."""
    return VectorField(fn=fn, dim=int(dim), name=name, vectorized=vectorized)


def infer_field(fn, sample, name=None, vectorized=False):
    """Build a field whose dimension is the length of ``sample``.

    Raises
    ------
    InconsistentDimensionError
        If ``fn(sample)`` does not return a vector of the same length.
    """
    sample = np.asarray(sample, dtype=float).reshape(-1)
    out = np.asarray(fn(sample), dtype=float).reshape(-1)
    if out.shape[0] != sample.shape[0]:
        raise InconsistentDimensionError(
            f"field maps a {sample.shape[0]}-vector to a {out.shape[0]}-vector"
        )
    return make_field(fn, sample.shape[0], name=name, vectorized=vectorized)


def dimension(f):
    return f.dim


@dataclass(frozen=True)
class StemCellParams:
    """Rate constants of the Nanog/Oct4-Sox2/Fgf4/Gata6 network.

    ``L`` is the LIF concentration, the external control input.
    """

    k0: float = 0.005
    k1: float = 0.01
    k2: float = 0.4
    k3: float = 1.0
    k4: float = 0.1
    k5: float = 0.00135
    k6: float = 0.01
    k7: float = 0.01
    k8: float = 1.0
    k9: float = 1.0
    k10: float = 0.01
    k11: float = 5.0
    k12: float = 1.0
    k13: float = 0.005
    k14: float = 1.0
    kd: float = 1.0
    L: float = 50.0


def stem_cell_production(x, p):
    """Production propensities ``a1..a4`` at state ``x = [N, O, F, G]``."""
    N, O, F, G = x[0], x[1], x[2], x[3]
    N2 = N * N
    G2 = G * G
    a1 = (
        p.k0 * O * (p.k1 + p.k2 * N2 + p.k0 * O + p.k3 * p.L)
        / (1 + p.k0 * O * (p.k2 * N2 + p.k0 * O + p.k3 * p.L + p.k4 * F * F) + p.k5 * O * G2)
    )
    a2 = (p.k6 + p.k7 * O) / (1 + p.k7 * O + p.k8 * G2)
    a3 = (p.k9 + p.k10 * O) / (1 + p.k10 * O)
    a4 = (p.k11 + p.k12 * G2 + p.k14 * O) / (1 + p.k12 * G2 + p.k13 * N2 + p.k14 * O)
    return a1, a2, a3, a4


# rows: N, O, F, G; columns: four productions then four degradations
STOICHIOMETRY = np.hstack([np.eye(4), -np.eye(4)])


def stem_cell_rhs(x, params=None):
    """Right-hand side ``S . a(x)`` of the stem-cell model.

    Works on float vectors, dual arrays and column-stacked state arrays.
    Negative concentrations are evaluated as given.
    """
    p = params if params is not None else StemCellParams()
    a = stem_cell_production(x, p)
    degradation = tuple(p.kd * x[i] for i in range(4))
    props = a + degradation
    # S has one +1 and one -1 per row, so compose directly instead of a dot
    # product that would force an object-array matmul on duals.
    return np.array([props[i] - props[i + 4] for i in range(4)])


def _gradient2d(p):
    def f(x):
        return np.array([-2.0 * x[0], -2.0 * x[1]])

    return f


def _rotation(p):
    w = p["omega"]

    def f(x):
        return np.array([-x[0] + w * x[1], -w * x[0] - x[1]])

    return f


def _toggle(p):
    a, n = p["a"], p["n"]

    def f(x):
        return np.array([a / (1 + x[1] ** n) - x[0], a / (1 + x[0] ** n) - x[1]])

    return f


def _vanderpol(p):
    mu = p["mu"]

    def f(x):
        return np.array([x[1], mu * (1 - x[0] ** 2) * x[1] - x[0]])

    return f


def _lorenz(p):
    s, r, b = p["sigma"], p["rho"], p["beta"]

    def f(x):
        return np.array([s * (x[1] - x[0]), x[0] * (r - x[2]) - x[1], x[0] * x[1] - b * x[2]])

    return f


def _stemcell(p):
    sp = StemCellParams(**p)

    def f(x):
        return stem_cell_rhs(x, sp)

    return f


BUILTIN_MODELS = {
    "gradient2d": (_gradient2d, 2, {}),
    "rotation": (_rotation, 2, {"omega": 1.0}),
    "toggle": (_toggle, 2, {"a": 1.0, "n": 2}),
    "vanderpol": (_vanderpol, 2, {"mu": 1.0}),
    "lorenz": (_lorenz, 3, {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0}),
    "stemcell": (_stemcell, 4, dataclasses.asdict(StemCellParams())),
}

BUILTIN_DIMENSIONS = {name: entry[1] for name, entry in BUILTIN_MODELS.items()}

# bounds used in the worked examples for each model
DEFAULT_BOUNDS = {
    "gradient2d": [(-2.0, 2.0), (-2.0, 2.0)],
    "rotation": [(-2.0, 2.0), (-2.0, 2.0)],
    "toggle": [(0.0, 2.0), (0.0, 2.0)],
    "vanderpol": [(-3.0, 3.0), (-3.0, 3.0)],
    "lorenz": [(-20.0, 20.0), (-30.0, 30.0), (0.0, 50.0)],
    "stemcell": [(0.0, 100.0), (0.0, 100.0), (0.0, 100.0), (0.0, 120.0)],
}


def builtin(name, params=None):
    """Return a built-in model with default parameters, optionally overridden.

    Raises
    ------
    UnknownModelError
        If ``name`` is not one of :data:`BUILTIN_MODELS`.
    UnknownParameterError
        If ``params`` contains a key the model does not define.
    """
    try:
        factory, dim, defaults = BUILTIN_MODELS[name]
    except KeyError:
        raise UnknownModelError(
            f"unknown model {name!r}; choose from {', '.join(BUILTIN_MODELS)}"
        ) from None
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise UnknownParameterError(f"model {name!r} has no parameter {key!r}")
        merged[key] = value
    if name == "toggle" and float(merged["n"]).is_integer():
        merged["n"] = int(merged["n"])
    return VectorField(fn=factory(merged), dim=dim, name=name, vectorized=True, params=merged)
