"""One-dimensional stable and unstable manifold branches of saddle points.

Branches are traced from a small offset along an eigenvector, integrating
the field (unstable) or its negation (stable) with arc length appended to
the state, and resampled uniformly in arc length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotASaddleError
from .fixedpoints import FixedPointRecord, FixedPointType, classify_at
from .geometry import closest_vertices, tangent
from .numerics import eigen, jacobian
from .odeint import IntegrationSettings, expanded_box, run_batch
from .structure import validate_bounds

__all__ = [
    "ManifoldBranch",
    "TransversalityVerdict",
    "ANGLE_THRESHOLD",
    "unstable_manifold",
    "stable_manifold",
    "detect_homoclinic",
    "check_transversality",
]

ANGLE_THRESHOLD = math.radians(5.0)
# dense-output samples per accepted step used before arc-length resampling
_SUBSTEPS = 8


@dataclass(frozen=True)
class ManifoldBranch:
    saddle: FixedPointRecord
    kind: str
    eigvec: np.ndarray
    sign: int
    points: np.ndarray
    eigenvalue: complex = 0j
    terminal_reason: str = "reached_t_end"

    @property
    def arc_length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass(frozen=True)
class TransversalityVerdict:
    """Aggregate of all (unstable, stable) branch pairs.

    ``verdict`` is ``transverse``, ``tangency``, ``no_intersections`` or
    ``not_checked``; ``min_angle`` is ``None`` when no pair intersected.
    """

    checked_pairs: int
    min_angle: float | None
    verdict: str
    angle_threshold: float = ANGLE_THRESHOLD
    intersections: int = 0


def _as_record(field, saddle):
    if isinstance(saddle, FixedPointRecord):
        return saddle
    return classify_at(field, saddle)


def offset(location):
    """Seeding distance ``1e-5 * max(1, |location|)``."""
    return 1e-5 * max(1.0, float(np.linalg.norm(location)))


def _eigendirections(field, record, kind, hyper_tol=1e-8):
    """Unit real directions whose eigenvalues have the sign of ``kind``.

    A complex pair contributes the real part of the eigenvector of its
    positive-imaginary member. Directions are ordered fastest first, so
    ``stable`` for ``F`` and ``unstable`` for ``-F`` agree.
    """
    if record.type != FixedPointType.SADDLE:
        raise NotASaddleError(f"fixed point is {record.type.value}, not SADDLE")
    es = eigen(jacobian(field, record.location))
    scale = hyper_tol * max(1.0, float(np.max(np.abs(es.values))))
    out = []
    for lam, v in zip(es.values, es.vectors.T):
        re = lam.real if kind == "unstable" else -lam.real
        if re <= scale or lam.imag < -scale:
            continue
        w = np.real(v)
        norm = np.linalg.norm(w)
        if norm == 0:
            continue
        out.append((complex(lam), w / norm))
    out.sort(key=lambda d: -abs(d[0].real))
    if not out:
        raise NotASaddleError(f"no {kind} direction at {record.location}")
    return out


def _trace(field, x0, extent, n_points, rate, bounds, settings):
    """Follow ``field`` from ``x0`` for ``extent`` arc length; resample."""
    n = field.dim

    def fun(Y):
        F = field.batch(Y[:n])
        return np.vstack([F, np.linalg.norm(F, axis=0)[None, :]])

    def hook(info):
        return info.y1[n] >= extent

    # time to grow from the seed to the extent under the linearisation, with slack
    t_max = 4.0 * math.log(max(extent, 1e-300) / 1e-5 + 1.0) / rate + 50.0
    box = expanded_box(bounds) if bounds is not None else None
    y0 = np.append(x0, 0.0)[:, None]
    _, _, reasons, records = run_batch(fun, y0, t_max, settings, box=box, on_step=hook,
                                       record=True)
    _, states, coeffs = records[0]
    theta = np.linspace(0.0, 1.0, _SUBSTEPS + 1)[1:]
    powers = np.vstack([theta, theta**2, theta**3, theta**4])
    fine = [states[0][None, :]]
    for t0, h, y, Q in coeffs:
        fine.append((y[:, None] + h * (Q @ powers)).T)
    fine = np.vstack(fine)
    s = np.maximum.accumulate(fine[:, n])
    s_end = min(extent, float(s[-1]))
    targets = np.linspace(0.0, s_end, n_points)
    pts = np.column_stack([np.interp(targets, s, fine[:, i]) for i in range(n)])
    pts[0] = x0
    reason = reasons[0] if reasons[0] != "event" else "reached_extent"
    return pts, reason


def _branches(field, saddle, kind, n_points, extent, bounds, settings):
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not extent > 0:
        raise ValueError("extent must be positive")
    record = _as_record(field, saddle)
    dirs = _eigendirections(field, record, kind)
    flow = field if kind == "unstable" else field.negated()
    settings = settings or IntegrationSettings()
    b = validate_bounds(bounds, field.dim) if bounds is not None else None
    delta = offset(record.location)
    out = []
    for lam, v in dirs:
        for sign in (1, -1):
            x0 = record.location + sign * delta * v
            pts, reason = _trace(flow, x0, extent, n_points, abs(lam.real), b, settings)
            out.append(ManifoldBranch(record, kind, v, sign, pts, lam, reason))
    return out


def unstable_manifold(field, saddle, n_points=100, extent=1.0, bounds=None, settings=None):
    """Unstable branches of a saddle, two per unstable eigendirection.

    Parameters
    ----------
    field : VectorField
    saddle : FixedPointRecord or array_like
        A location is linearised with :func:`classify_at`.
    n_points : int
        Points per branch, uniform in arc length.
    extent : float
        Arc length traced; a branch ends early on leaving ``bounds`` (grown
        by 10%) or on stalling at an attractor.
    bounds : sequence of (lo, hi), optional

    Raises
    ------
    NotASaddleError
        If the point is not a saddle.
    """
    return _branches(field, saddle, "unstable", n_points, extent, bounds, settings)


def stable_manifold(field, saddle, n_points=100, extent=1.0, bounds=None, settings=None):
    """Stable branches, traced as unstable branches of the negated field."""
    return _branches(field, saddle, "stable", n_points, extent, bounds, settings)


def detect_homoclinic(field, saddle, tol=0.1, extent=None, n_points=None, bounds=None):
    """True if an unstable branch leaves the ``2 tol`` ball and re-enters the ``tol`` ball.

    ``extent`` defaults to ``20 * max(1, |location|)`` of arc length, sampled
    finely enough that consecutive points are at most ``tol / 2`` apart.
    """
    record = _as_record(field, saddle)
    scale = max(1.0, float(np.linalg.norm(record.location)))
    extent = 20.0 * scale if extent is None else float(extent)
    if n_points is None:
        n_points = max(100, int(math.ceil(2 * extent / tol)) + 1)
    for br in unstable_manifold(field, record, n_points=n_points, extent=extent, bounds=bounds):
        d = np.linalg.norm(br.points - record.location, axis=1)
        left = np.flatnonzero(d > 2 * tol)
        if left.size and np.any(d[left[0]:] <= tol):
            return True
    return False


def _trim(branch, radius):
    """Drop the leading points that have not yet left ``radius`` of the saddle."""
    d = np.linalg.norm(branch.points - branch.saddle.location, axis=1)
    out = np.flatnonzero(d > radius)
    return branch.points[out[0]:] if out.size else branch.points[:0]


def check_transversality(field, saddles, bounds, tol=0.01, n_points=100, extent=None):
    """Assess intersections of unstable and stable branches of ``saddles``.

    Every ordered pair (unstable branch of one saddle, stable branch of
    another or the same) is examined. Branch portions still within
    ``2 tol * diameter`` of their own saddle are ignored; if the closest
    vertices are further apart than ``tol * diameter`` the pair does not
    intersect, otherwise the angle between the local tangents is compared
    with 5 degrees.

    ``extent`` defaults to half the diameter of ``bounds``.
    """
    b = validate_bounds(bounds, field.dim)
    diam = float(np.linalg.norm(b[:, 1] - b[:, 0]))
    extent = 0.5 * diam if extent is None else float(extent)
    radius = tol * diam
    records = [_as_record(field, s) for s in saddles]
    unstable, stable = [], []
    for r in records:
        unstable += unstable_manifold(field, r, n_points, extent, bounds=b)
        stable += stable_manifold(field, r, n_points, extent, bounds=b)
    u_pts = [_trim(br, 2 * radius) for br in unstable]
    s_pts = [_trim(br, 2 * radius) for br in stable]

    pairs = 0
    hits = 0
    min_angle = None
    for P in u_pts:
        for Q in s_pts:
            pairs += 1
            if len(P) == 0 or len(Q) == 0:
                continue
            i, j, dist = closest_vertices(P, Q)
            if dist > radius:
                continue
            hits += 1
            c = abs(float(np.dot(tangent(P, i), tangent(Q, j))))
            angle = math.acos(min(1.0, c))
            min_angle = angle if min_angle is None else min(min_angle, angle)
    if hits == 0:
        verdict = "no_intersections"
    elif min_angle < ANGLE_THRESHOLD:
        verdict = "tangency"
    else:
        verdict = "transverse"
    return TransversalityVerdict(pairs, min_angle, verdict, ANGLE_THRESHOLD, hits)
