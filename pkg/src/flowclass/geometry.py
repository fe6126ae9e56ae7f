"""Distances between points and sampled curves."""

import numpy as np


def point_segment_distances(P, A, B):
    """Distance from each row of ``P`` to each segment ``A[k] -> B[k]``.

    Returns an array of shape ``(len(P), len(A))`` and the segment
    parameters ``s`` in ``[0, 1]`` of the closest points.
    """
    P = np.atleast_2d(P)
    D = B - A
    L2 = np.einsum("kd,kd->k", D, D)
    W = P[:, None, :] - A[None, :, :]
    s = np.einsum("pkd,kd->pk", W, D) / np.where(L2 > 0, L2, 1.0)
    s = np.clip(np.where(L2 > 0, s, 0.0), 0.0, 1.0)
    closest = A[None, :, :] + s[..., None] * D[None, :, :]
    return np.linalg.norm(P[:, None, :] - closest, axis=2), s


def distance_to_polyline(P, polyline, closed=False):
    """Minimum distance from each row of ``P`` to a polyline."""
    Q = np.asarray(polyline, dtype=float)
    if closed:
        Q = np.vstack([Q, Q[:1]])
    if len(Q) == 1:
        return np.linalg.norm(np.atleast_2d(P) - Q[0], axis=1)
    d, _ = point_segment_distances(np.asarray(P, dtype=float), Q[:-1], Q[1:])
    return d.min(axis=1)


def closest_vertices(P, Q):
    """Indices ``(i, j)`` and distance of the closest pair ``P[i]``, ``Q[j]``."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    d = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return int(i), int(j), float(d[i, j])


def tangent(points, i):
    """Unit tangent of a sampled curve at vertex ``i`` (central difference)."""
    pts = np.asarray(points, dtype=float)
    a = pts[max(i - 1, 0)]
    b = pts[min(i + 1, len(pts) - 1)]
    v = b - a
    n = np.linalg.norm(v)
    return v / n if n > 0 else v
