"""Periodic-orbit search by recurrence on Poincare sections, with Floquet analysis."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FlowClassError, InvalidOrbitError
from .geometry import distance_to_polyline
from .numerics import eigen
from .odeint import (
    IntegrationSettings,
    SectionWatcher,
    expanded_box,
    integrate,
    integrate_many,
    monodromy,
    run_batch,
)
from .structure import validate_bounds

__all__ = [
    "OrbitRecord",
    "OrbitSearch",
    "floquet_stability",
    "trivial_multiplier_index",
    "find_periodic_orbits",
    "has_periodic_orbits",
    "search_periodic_orbits",
    "trajectory_rng",
]

N_ORBIT_POINTS = 128
TRIVIAL_TOL = 1e-2
MODULUS_TOL = 1e-6
# tag separating orbit-search seed streams from other consumers of a seed
_ORBIT_STREAM = 0x0B17


@dataclass(frozen=True)
class OrbitRecord:
    """A validated periodic orbit.

    ``points`` holds ``N_ORBIT_POINTS`` states sampled uniformly in time over
    one period starting at the section point; ``closure`` is
    ``|x(0) - x(period)|`` from the validating integration.
    """

    points: np.ndarray
    period: float
    multipliers: np.ndarray
    is_stable: bool
    stability: str = "stable"
    closure: float = 0.0


def trajectory_rng(seed, index, stream=_ORBIT_STREAM):
    """Generator for trajectory ``index``; independent of how many are drawn."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, int(index))))


def trivial_multiplier_index(multipliers):
    mu = np.asarray(multipliers, dtype=complex)
    k = int(np.argmin(np.abs(mu - 1.0)))
    if abs(mu[k] - 1.0) > TRIVIAL_TOL:
        raise InvalidOrbitError(
            f"no multiplier within {TRIVIAL_TOL} of 1 (closest {mu[k]:.6g})"
        )
    return k


def floquet_stability(multipliers):
    """``stable``, ``unstable`` or ``non_hyperbolic`` from Floquet multipliers.

    The multiplier closest to 1 is taken as the trivial one and excluded.

    Raises
    ------
    InvalidOrbitError
        If no multiplier lies within ``1e-2`` of 1.
    """
    mu = np.asarray(multipliers, dtype=complex)
    k = trivial_multiplier_index(mu)
    rest = np.abs(np.delete(mu, k))
    if np.all(rest < 1 - MODULUS_TOL):
        return "stable"
    if np.any(rest > 1 + MODULUS_TOL):
        return "unstable"
    return "non_hyperbolic"


@dataclass
class OrbitSearch:
    """Outcome of a search: validated orbits plus bookkeeping for reports."""

    orbits: list = field(default_factory=list)
    timed_out: bool = False
    candidates: int = 0
    rejected: int = 0
    failures: int = 0
    skipped_fixed_point: int = 0
    escaped: int = 0
    no_return: int = 0


def _recurrence(field, X, settings, max_period, rec_radius, box, deadline):
    """Batch section pass: for each row of ``X``, the first return time."""
    F = field.batch(X.T)
    normals = F / np.linalg.norm(F, axis=0)
    hits = {}

    def stop_when(j, ev):
        if np.linalg.norm(ev.state - X[j]) <= rec_radius:
            hits[j] = ev
            return True
        return False

    watcher = SectionWatcher(
        X.T, normals, lambda y: float(np.linalg.norm(field(y))), stop_when=stop_when, direction=1
    )
    _, _, reasons, _ = run_batch(
        field.batch, X.T.copy(), max_period, settings, box=box, on_step=watcher, deadline=deadline
    )
    return hits, reasons


def _validate(field, x1, T, settings, diam, max_period):
    """Second section pass, closure test and Floquet multipliers from ``x1``.

    Returns an :class:`OrbitRecord` or ``None``.
    """
    rec_radius = 1e-4 * diam
    hits, _ = _recurrence(field, x1[None, :], settings, min(1.5 * T, max_period), rec_radius,
                          None, None)
    if 0 not in hits:
        return None
    T2 = hits[0].t
    if not 0 < T2 <= max_period:
        return None
    # the second return was computed at full tolerance; start from it
    x1 = hits[0].state
    traj = integrate(field, x1, settings, t_end=T2)
    closure = float(np.linalg.norm(traj.final_state - x1))
    if closure > 1e-5 * diam:
        return None
    points = traj.sample(np.linspace(0.0, T2, N_ORBIT_POINTS, endpoint=False))
    extent = np.max(np.ptp(points, axis=0))
    if extent <= 1e-3 * diam:
        # collapsed onto an equilibrium
        return None
    mu = eigen(monodromy(field, x1, T2, settings)).values
    stability = floquet_stability(mu)
    return OrbitRecord(
        points=points,
        period=float(T2),
        multipliers=mu,
        is_stable=stability == "stable",
        stability=stability,
        closure=closure,
    )


def _same_orbit(a, b, radius):
    return bool(
        np.all(distance_to_polyline(a.points, b.points, closed=True) <= radius)
        and np.all(distance_to_polyline(b.points, a.points, closed=True) <= radius)
    )


def search_periodic_orbits(field, bounds, n_trajectories=50, max_period=100.0, seed=0,
                           timeout=None, fixed_points=(), fp_tol=1e-8, settings=None,
                           stop_after_first=False):
    """Search for periodic orbits and report how every trajectory ended.

    Each trajectory runs a transient of ``max_period / 2``. Endpoints resting
    on an equilibrium are skipped; the others get a section through the
    endpoint with normal ``F(endpoint)`` and are followed for up to
    ``max_period`` until a same-direction crossing lands within
    ``1e-4 * diameter`` of the section point. Candidates are refined by a
    second section pass, checked for closure to ``1e-5 * diameter`` and
    classified by their Floquet multipliers. Orbits whose samples lie within
    ``1e-3 * diameter`` of each other are merged.

    A wall-clock ``timeout`` (seconds) ends the search early with whatever
    has been validated; ``timed_out`` records it.
    """
    b = validate_bounds(bounds, field.dim)
    settings = settings or IntegrationSettings()
    # transients and recurrence scans only need to locate candidates;
    # validation reruns at the full tolerance
    scan = replace(settings, rel_tol=100 * settings.rel_tol, abs_tol=100 * settings.abs_tol)
    diam = float(np.linalg.norm(b[:, 1] - b[:, 0]))
    box = expanded_box(b)
    deadline = None if timeout is None else time.monotonic() + float(timeout)
    out = OrbitSearch()

    X0 = np.array([trajectory_rng(seed, i).uniform(b[:, 0], b[:, 1]) for i in range(n_trajectories)])
    if len(X0) == 0:
        return out
    ends, reasons = integrate_many(field, X0, scan, bounds=b, t_end=max_period / 2,
                                   deadline=deadline)
    fp_locs = [fp.location for fp in fixed_points]
    near_fp = max(10 * fp_tol, 1e-4 * diam)
    live = []
    for i, (x, r) in enumerate(zip(ends, reasons)):
        if r == "timeout":
            out.timed_out = True
        elif r == "left_bounds":
            out.escaped += 1
        elif r != "reached_t_end":
            out.failures += 1
        elif float(np.linalg.norm(field.batch(x[:, None])[:, 0])) <= 10 * fp_tol or any(
            np.linalg.norm(x - p) <= near_fp for p in fp_locs
        ):
            out.skipped_fixed_point += 1
        else:
            live.append(i)
    if not live:
        return out

    X = ends[live]
    hits, reasons2 = _recurrence(field, X, scan, max_period, 1e-4 * diam, box, deadline)
    for k, r in enumerate(reasons2):
        if r == "timeout":
            out.timed_out = True
        elif r == "left_bounds":
            out.escaped += 1
        elif r in ("stiff", "nonfinite"):
            out.failures += 1
        elif k not in hits:
            out.no_return += 1

    dedup = 1e-3 * diam
    for k in sorted(hits):
        if deadline is not None and time.monotonic() > deadline:
            out.timed_out = True
            break
        out.candidates += 1
        x1 = hits[k].state
        if any(distance_to_polyline(x1[None, :], o.points, closed=True)[0] <= dedup for o in out.orbits):
            continue
        try:
            orbit = _validate(field, x1, hits[k].t, settings, diam, max_period)
        except FlowClassError:
            orbit = None
            out.failures += 1
        if orbit is None:
            out.rejected += 1
            continue
        out.orbits.append(orbit)
        if stop_after_first:
            break

    kept = []
    for orbit in sorted(out.orbits, key=lambda o: o.closure):
        if not any(_same_orbit(orbit, other, dedup) for other in kept):
            kept.append(orbit)
    # restore discovery order among survivors
    out.orbits = [o for o in out.orbits if any(o is k for k in kept)]
    return out


def find_periodic_orbits(field, bounds, n_trajectories=50, max_period=100.0, seed=0,
                         timeout=None, **kwargs):
    """Validated periodic orbits found from ``n_trajectories`` random starts.

    See :func:`search_periodic_orbits` for the procedure.
    """
    return search_periodic_orbits(
        field, bounds, n_trajectories=n_trajectories, max_period=max_period, seed=seed,
        timeout=timeout, **kwargs,
    ).orbits


def has_periodic_orbits(field, bounds, **kwargs):
    """True as soon as one orbit validates."""
    kwargs["stop_after_first"] = True
    return bool(search_periodic_orbits(field, bounds, **kwargs).orbits)
