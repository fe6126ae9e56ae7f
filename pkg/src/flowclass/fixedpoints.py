"""Multi-start Newton search for equilibria and their linear classification."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, SingularMatrixError
from .numerics import eigen, jacobian, solve
from .structure import validate_bounds

__all__ = [
    "FixedPointType",
    "FixedPointRecord",
    "classify_eigenvalues",
    "is_hyperbolic",
    "classify_at",
    "newton",
    "find_fixed_points",
]

MAX_ITER = 200
MAX_HALVINGS = 40


class FixedPointType(enum.Enum):
    STABLE_NODE = "STABLE_NODE"
    UNSTABLE_NODE = "UNSTABLE_NODE"
    SADDLE = "SADDLE"
    STABLE_FOCUS = "STABLE_FOCUS"
    UNSTABLE_FOCUS = "UNSTABLE_FOCUS"
    CENTER = "CENTER"
    NON_HYPERBOLIC = "NON_HYPERBOLIC"

    @property
    def description(self):
        return _DESCRIPTIONS[self]


_DESCRIPTIONS = {
    FixedPointType.STABLE_NODE: "Stable node",
    FixedPointType.UNSTABLE_NODE: "Unstable node",
    FixedPointType.SADDLE: "Saddle point",
    FixedPointType.STABLE_FOCUS: "Stable focus",
    FixedPointType.UNSTABLE_FOCUS: "Unstable focus",
    FixedPointType.CENTER: "Center",
    FixedPointType.NON_HYPERBOLIC: "Non-hyperbolic point",
}


@dataclass(frozen=True)
class FixedPointRecord:
    location: np.ndarray
    eigenvalues: np.ndarray
    type: FixedPointType
    residual: float

    @property
    def is_hyperbolic(self):
        return self.type not in (FixedPointType.CENTER, FixedPointType.NON_HYPERBOLIC)


def _split(eigs, hyper_tol):
    eigs = np.asarray(eigs, dtype=complex).reshape(-1)
    tol = hyper_tol * max(1.0, float(np.max(np.abs(eigs))))
    return eigs.real, np.abs(eigs.real) <= tol, np.abs(eigs.imag) > tol


def classify_eigenvalues(eigs, hyper_tol=1e-8):
    """Map a Jacobian spectrum to a :class:`FixedPointType`.

    Real parts within ``hyper_tol * max(1, max|l|)`` of zero count as zero.
    A spectrum that is entirely nonzero-imaginary on the axis is a CENTER;
    any other zero real part makes the point NON_HYPERBOLIC.
    """
    if len(eigs) == 0:
        raise ValueError("empty eigenvalue list")
    re, zero, nonreal = _split(eigs, hyper_tol)
    if zero.any():
        if zero.all() and nonreal.all():
            return FixedPointType.CENTER
        return FixedPointType.NON_HYPERBOLIC
    if np.all(re < 0):
        return FixedPointType.STABLE_FOCUS if nonreal.any() else FixedPointType.STABLE_NODE
    if np.all(re > 0):
        return FixedPointType.UNSTABLE_FOCUS if nonreal.any() else FixedPointType.UNSTABLE_NODE
    return FixedPointType.SADDLE


def is_hyperbolic(record_or_eigs, hyper_tol=1e-8):
    eigs = getattr(record_or_eigs, "eigenvalues", record_or_eigs)
    _, zero, _ = _split(eigs, hyper_tol)
    return not zero.any()


def classify_at(field, x, hyper_tol=1e-8):
    """Linearise ``field`` at ``x`` and classify the equilibrium there.

    ``x`` is taken as an equilibrium as given; its residual ``|F(x)|`` is
    stored so callers can see how good that assumption is.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    residual = float(np.linalg.norm(field(x)))
    eigs = eigen(jacobian(field, x)).values
    return FixedPointRecord(
        location=x.copy(),
        eigenvalues=eigs,
        type=classify_eigenvalues(eigs, hyper_tol),
        residual=residual,
    )


def newton(field, x0, tol=1e-8, max_iter=MAX_ITER, max_halvings=MAX_HALVINGS):
    """Damped Newton iteration on ``F(x) = 0``.

    Steps are halved until the residual norm decreases. Returns
    ``(x, residual)`` on convergence and ``None`` for an abandoned start
    (singular Jacobian, evaluation failure or stagnation).
    """
    x = np.asarray(x0, dtype=float).copy()
    try:
        fx = field(x)
    except EvaluationError:
        return None
    r = float(np.linalg.norm(fx))
    for _ in range(max_iter):
        if r <= tol:
            return x, r
        try:
            step = solve(jacobian(field, x), -fx)
        except (SingularMatrixError, EvaluationError):
            return None
        lam = 1.0
        for _ in range(max_halvings + 1):
            xn = x + lam * step
            try:
                fn = field(xn)
            except EvaluationError:
                lam *= 0.5
                continue
            rn = float(np.linalg.norm(fn))
            if rn < r:
                break
            lam *= 0.5
        else:
            return None
        x, fx, r = xn, fn, rn
    return (x, r) if r <= tol else None


def _map(fn, items, threads):
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def find_fixed_points(field, bounds, n_starts=100, tol=1e-8, seed=0, hyper_tol=1e-8,
                      threads=None):
    """Locate equilibria inside ``bounds`` by damped Newton from random starts.

    Parameters
    ----------
    field : VectorField
    bounds : sequence of (lo, hi)
    n_starts : int
        Uniformly sampled starting points.
    tol : float
        Residual norm accepted as converged.
    seed : int
    hyper_tol : float
        Passed to :func:`classify_eigenvalues`.
    threads : int, optional
        Worker threads for the independent starts; the result does not
        depend on it.

    Returns
    -------
    list of FixedPointRecord
        Roots within the box grown by 1% per axis, merged when every
        coordinate agrees to ``1e-6`` of the axis span, sorted by location.
    """
    b = validate_bounds(bounds, field.dim)
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    span = b[:, 1] - b[:, 0]
    lo = b[:, 0] - 0.01 * span
    hi = b[:, 1] + 0.01 * span
    rng = np.random.default_rng(seed)
    starts = rng.uniform(b[:, 0], b[:, 1], size=(int(n_starts), field.dim))

    results = _map(lambda s: newton(field, s, tol=tol), starts, threads)
    found = [
        (r, i, x)
        for i, res in enumerate(results)
        if res is not None
        for x, r in [res]
        if np.all(x >= lo) and np.all(x <= hi)
    ]
    found.sort(key=lambda item: (item[0], item[1]))
    radius = 1e-6 * span
    kept = []
    for r, _, x in found:
        if not any(np.all(np.abs(x - y) <= radius) for _, y in kept):
            kept.append((r, x))
    kept.sort(key=lambda item: tuple(item[1]))
    return [classify_at(field, x, hyper_tol=hyper_tol) for _, x in kept]
