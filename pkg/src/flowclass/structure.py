"""Jacobian symmetry and curl measures of gradient structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError
from .numerics import frobenius, jacobian

__all__ = [
    "RegionSample",
    "sample_region",
    "symmetry_error",
    "relative_symmetry_error",
    "is_symmetric",
    "curl_magnitude",
    "is_curl_free",
    "curl_to_gradient_ratio",
    "validate_bounds",
]


def validate_bounds(bounds, dim=None):
    """Return ``bounds`` as a float array of shape ``(n, 2)``.

    Raises
    ------
    BoundsError
        On empty bounds, a wrong number of axes, or ``lo >= hi``.
    """
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[0] == 0 or b.shape[1] != 2:
        raise BoundsError("bounds must be a nonempty sequence of (lo, hi) pairs")
    if dim is not None and b.shape[0] != dim:
        raise BoundsError(f"expected {dim} bound pairs, got {b.shape[0]}")
    if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
        raise BoundsError("every axis needs finite bounds with lo < hi")
    return b


@dataclass(frozen=True)
class RegionSample:
    """Uniform i.i.d. sample of a box, reproducible from ``seed``."""

    bounds: tuple
    n_samples: int = 100
    seed: int = 0

    def points(self):
        return sample_region(self.bounds, self.n_samples, self.seed)


def sample_region(bounds, n_samples, seed):
    b = validate_bounds(bounds)
    rng = np.random.default_rng(seed)
    return rng.uniform(b[:, 0], b[:, 1], size=(int(n_samples), b.shape[0]))


def symmetry_error(J):
    """Frobenius norm of the antisymmetric part ``(J - J^T) / 2``."""
    J = np.asarray(J, dtype=float)
    return frobenius((J - J.T) / 2)


def relative_symmetry_error(J):
    """Scale-free symmetry error ``|(J - J^T)/2|_F / |J|_F``, 0 for J == 0."""
    J = np.asarray(J, dtype=float)
    norm = frobenius(J)
    if norm < 1e-14:
        return 0.0
    return symmetry_error(J) / norm


def is_symmetric(J, rtol=1e-8, atol=1e-10):
    J = np.asarray(J, dtype=float)
    diff = np.abs(J - J.T)
    bound = atol + rtol * np.maximum(np.abs(J), np.abs(J.T))
    return bool(np.all(diff <= bound))


def curl_from_jacobian(J):
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    if n == 1:
        return 0.0
    if n == 2:
        return float(abs(J[1, 0] - J[0, 1]))
    if n == 3:
        c = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
        return float(np.linalg.norm(c))
    return symmetry_error(J)


def curl_magnitude(field, x):
    """Size of the rotational part of ``field`` at ``x``.

    Scalar curl magnitude in 2D, the norm of the curl vector in 3D, and the
    Frobenius norm of the antisymmetric Jacobian part otherwise (0 in 1D).
    """
    return curl_from_jacobian(jacobian(field, x))


def is_curl_free(field, where, atol=1e-10):
    """Test for zero curl at a point or at every point of a :class:`RegionSample`."""
    if isinstance(where, RegionSample):
        return all(curl_magnitude(field, p) <= atol for p in where.points())
    return curl_magnitude(field, where) <= atol


def curl_to_gradient_ratio(field, x):
    """Curl magnitude divided by ``max(|F(x)|, 1e-12)``."""
    fx = field(np.asarray(x, dtype=float))
    return curl_magnitude(field, x) / max(float(np.linalg.norm(fx)), 1e-12)
