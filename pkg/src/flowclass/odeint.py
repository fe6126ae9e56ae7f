"""Adaptive Dormand-Prince 5(4) integration with dense output.

The stepping core advances ``m`` independent trajectories at once, stored
column-wise in a ``(d, m)`` array, each with its own time and step size.
Single-trajectory entry points are the ``m == 1`` case. Batching matters
here because the orbit search and the fate analysis each integrate dozens
of long trajectories, and per-step Python overhead dominates for small ``d``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EvaluationError, StiffnessError
from .numerics import jacobian_product

__all__ = [
    "IntegrationSettings",
    "Trajectory",
    "CrossingEvent",
    "Section",
    "integrate",
    "integrate_many",
    "detect_crossings",
    "monodromy",
    "expanded_box",
]

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights, 7 stages (FSAL)
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# quartic continuous extension, y(t + th) = y + h * K^T P [th, th^2, th^3, th^4]
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_A_ROWS = [np.array(r) for r in _A]

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass(frozen=True)
class IntegrationSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 1_000_000
    t_end: float = 1.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Trajectory:
    """Accepted steps of one integration, with dense output between them.

    ``terminal_reason`` is one of ``reached_t_end``, ``left_bounds``,
    ``step_limit`` or ``event``.
    """

    times: np.ndarray
    states: np.ndarray
    terminal_reason: str
    _coeffs: list = field(default_factory=list, repr=False)

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self):
        return float(self.times[-1])

    def sample(self, t):
        """Evaluate the dense interpolant at time(s) ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.shape[0], self.states.shape[1]))
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self._coeffs) - 1)
        for i, (ti, ki) in enumerate(zip(t, k)):
            if not self._coeffs:
                out[i] = self.states[0]
                continue
            t0, h, y0, Q = self._coeffs[ki]
            out[i] = _dense_eval(y0, h, Q, (ti - t0) / h)
        return out


@dataclass(frozen=True)
class CrossingEvent:
    t: float
    state: np.ndarray
    direction: int


@dataclass(frozen=True)
class Section:
    """Hyperplane ``<x - point, normal> = 0``."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))
        if not np.linalg.norm(self.normal) > 0:
            raise ValueError("section normal must be nonzero")


def expanded_box(bounds, margin=0.1):
    b = np.asarray(bounds, dtype=float)
    span = b[:, 1] - b[:, 0]
    return b[:, 0] - margin * span, b[:, 1] + margin * span


def _dense_eval(y0, h, Q, theta):
    return y0 + h * (Q @ np.array([theta, theta**2, theta**3, theta**4]))


class StepInfo:
    """Accepted steps of the active columns, handed to step hooks.

    ``Q[:, :, j]`` holds the dense-output coefficients of local column ``j``.
    """

    __slots__ = ("cols", "t0", "h", "y0", "y1", "f1", "_K", "_Q")

    def __init__(self, cols, t0, h, y0, y1, f1, K):
        self.cols = cols
        self.t0 = t0
        self.h = h
        self.y0 = y0
        self.y1 = y1
        self.f1 = f1
        self._K = K
        self._Q = None

    @property
    def Q(self):
        if self._Q is None:
            # K: (7, d, k) -> Q: (d, 4, k)
            self._Q = np.einsum("sdk,sp->dpk", self._K, _P)
        return self._Q

    def dense(self, j, t):
        theta = (t - self.t0[j]) / self.h[j]
        return _dense_eval(self.y0[:, j], self.h[j], self.Q[:, :, j], theta)

    def coeffs(self, j):
        return (self.t0[j], self.h[j], self.y0[:, j].copy(), self.Q[:, :, j].copy())


def _rms(a, axis=0):
    return np.sqrt(np.mean(a * a, axis=axis))


def _initial_step(fun, y0, f0, settings, span):
    scale = settings.abs_tol + np.abs(y0) * settings.rel_tol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    h0 = np.minimum(h0, span)
    y1 = y0 + h0 * f0
    f1 = fun(y1)
    d2 = _rms((f1 - f0) / scale) / h0
    d2 = np.where(np.isfinite(d2), d2, 1e300)
    dm = np.maximum(d1, d2)
    h1 = np.where(dm <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.maximum(dm, 1e-300)) ** 0.2)
    return np.minimum(np.minimum(100 * h0, h1), settings.max_step)


def run_batch(fun, Y0, t_end, settings, box=None, on_step=None, deadline=None, record=False):
    """Advance every column of ``Y0`` from ``t = 0`` to its ``t_end``.

    Parameters
    ----------
    fun : callable
        ``(d, k) -> (d, k)`` right-hand side on column-stacked states.
    Y0 : ndarray, shape (d, m)
    t_end : float or ndarray, shape (m,)
    settings : IntegrationSettings
    box : (lo, hi), optional
        Columns leave with reason ``left_bounds`` once any of the leading
        ``len(lo)`` components exits ``[lo, hi]``.
    on_step : callable, optional
        ``on_step(info) -> bool array`` called after each batch of accepted
        steps; true entries stop those columns with reason ``event``.
    deadline : float, optional
        ``time.monotonic()`` value after which remaining columns stop with
        reason ``timeout``.
    record : bool
        Keep step endpoints and dense coefficients for each column.

    Returns
    -------
    t, Y, reasons, records
        Final times, final states, per-column reasons and, when ``record``,
        per-column ``(times, states, coeffs)`` lists.  Reasons beyond the
        public set are ``stiff``, ``nonfinite`` and ``timeout``.
    """
    Y = np.array(Y0, dtype=float, copy=True)
    d, m = Y.shape
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), (m,)).copy()
    t = np.zeros(m)
    reasons = [None] * m
    active = np.ones(m, dtype=bool)
    nsteps = np.zeros(m, dtype=int)
    records = [([0.0], [Y[:, j].copy()], []) for j in range(m)] if record else None
    if box is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        nb = lo.shape[0]

    with np.errstate(all="ignore"):
        F = fun(Y)
    bad = ~np.all(np.isfinite(F), axis=0) | ~np.all(np.isfinite(Y), axis=0)
    for j in np.flatnonzero(bad):
        reasons[j] = "nonfinite"
        active[j] = False
    done0 = active & (t_end <= 0)
    for j in np.flatnonzero(done0):
        reasons[j] = "reached_t_end"
        active[j] = False

    h = np.zeros(m)
    if active.any():
        idx = np.flatnonzero(active)
        with np.errstate(all="ignore"):
            h[idx] = _initial_step(fun, Y[:, idx], F[:, idx], settings, t_end[idx])
    last_nonfinite = np.zeros(m, dtype=bool)

    with np.errstate(all="ignore"):
        while True:
            idx = np.flatnonzero(active)
            k = idx.shape[0]
            if k == 0:
                break
            if deadline is not None and time.monotonic() > deadline:
                for j in idx:
                    reasons[j] = "timeout"
                active[:] = False
                break
            full = k == m
            y = Y if full else Y[:, idx]
            t_cur = t if full else t[idx]
            t_fin = t_end if full else t_end[idx]
            h_cur = h if full else h[idx]
            remaining = t_fin - t_cur
            hh = np.minimum(h_cur, remaining)
            Ks = np.empty((7, d, k))
            Kf = Ks.reshape(7, d * k)
            Ks[0] = F if full else F[:, idx]
            for s in range(1, 6):
                Ks[s] = fun(y + hh * (_A_ROWS[s] @ Kf[:s]).reshape(d, k))
            y_new = y + hh * (_B @ Kf[:6]).reshape(d, k)
            f_new = fun(y_new)
            Ks[6] = f_new
            # stage 1 has zero weight in _B and _E, but feeds every later stage,
            # so a non-finite stage anywhere makes err_norm non-finite
            r = (hh * (_E @ Kf).reshape(d, k)) / (
                settings.abs_tol + settings.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            )
            err_norm = np.sqrt(np.einsum("ij,ij->j", r, r) / d)
            finite = np.isfinite(err_norm)
            err_norm[~finite] = np.inf
            accept = err_norm <= 1.0

            factor = _SAFETY * err_norm**-0.2
            factor = np.where(
                accept, np.minimum(_MAX_FACTOR, factor), np.clip(factor, _MIN_FACTOR, 1.0)
            )
            h_next = np.minimum(hh * factor, settings.max_step)
            # a clipped final step must not shrink the step carried forward
            h_next = np.where(accept & (hh < h_cur), np.maximum(h_next, h_cur), h_next)
            h[idx] = h_next

            n_acc = np.count_nonzero(accept)
            if n_acc < k:
                last_nonfinite[idx] = ~finite
                rej = idx[~accept]
                tiny = h[rej] < 1e-14 * np.maximum(t_end[rej], 1e-300)
                for j in rej[tiny]:
                    reasons[j] = "nonfinite" if last_nonfinite[j] else "stiff"
                    active[j] = False
                if n_acc == 0:
                    continue

            if n_acc == k:
                loc = slice(None)
                cols = idx
                info = StepInfo(cols, t_cur.copy(), hh, y, y_new, f_new, Ks)
                t_new = np.where(hh >= remaining, t_fin, t_cur + hh)
            else:
                loc = np.flatnonzero(accept)
                cols = idx[loc]
                info = StepInfo(cols, t[cols], hh[loc], y[:, loc], y_new[:, loc], f_new[:, loc],
                                Ks[:, :, loc])
                t_new = np.where(hh[loc] >= remaining[loc], t_end[cols], t[cols] + hh[loc])
            if full and n_acc == k:
                t = t_new
                Y = y_new
                F = f_new
            else:
                t[cols] = t_new
                Y[:, cols] = info.y1
                F[:, cols] = info.f1
            nsteps[cols] += 1
            if record:
                for jl, j in enumerate(cols):
                    times, states, coeffs = records[j]
                    times.append(t_new[jl])
                    states.append(info.y1[:, jl].copy())
                    coeffs.append(info.coeffs(jl))

            stop = t_new >= t_end[cols]
            if on_step is not None:
                hooked = on_step(info)
                if hooked is not None:
                    hooked = np.asarray(hooked, dtype=bool)
                    for j in cols[hooked]:
                        reasons[j] = "event"
                    stop = stop & ~hooked
            else:
                hooked = None
            if box is not None:
                yb = info.y1[:nb]
                out = np.any((yb < lo[:, None]) | (yb > hi[:, None]), axis=0)
                if hooked is not None:
                    out &= ~hooked
                for j in cols[out]:
                    reasons[j] = "left_bounds"
                stop &= ~out
            else:
                out = None
            for j in cols[stop]:
                reasons[j] = "reached_t_end"
            if hooked is not None:
                stop |= hooked
            if out is not None:
                stop |= out
            lim = (nsteps[cols] >= settings.max_steps) & ~stop
            if lim.any():
                for j in cols[lim]:
                    reasons[j] = "step_limit"
                stop |= lim
            if stop.any():
                active[cols[stop]] = False

    return t, Y, reasons, records


def _raise_for(reason, t):
    if reason == "stiff":
        raise StiffnessError(f"step size underflow at t={t:.6g}", t=t)
    if reason == "nonfinite":
        raise EvaluationError(f"vector field became non-finite near t={t:.6g}")


def _fun_of(field):
    return field.batch


def _settings(settings, t_end):
    settings = settings or IntegrationSettings()
    if t_end is not None:
        settings = replace(settings, t_end=float(t_end))
    return settings


def integrate(field, x0, settings=None, bounds=None, t_end=None):
    """Integrate one trajectory of ``field`` from ``x0``.

    Parameters
    ----------
    field : VectorField
    x0 : array_like
    settings : IntegrationSettings, optional
    bounds : sequence of (lo, hi), optional
        Stop with ``left_bounds`` when any axis leaves the box expanded by
        10% of its span on each side.
    t_end : float, optional
        Overrides ``settings.t_end``.

    Raises
    ------
    StiffnessError
        If the step size underflows ``1e-14 * t_end``.
    EvaluationError
        If the field produces non-finite values that cannot be stepped around.
    """
    settings = _settings(settings, t_end)
    if not settings.t_end > 0:
        raise ValueError("t_end must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    box = expanded_box(bounds) if bounds is not None else None
    t, Y, reasons, records = run_batch(
        _fun_of(field), x0[:, None], settings.t_end, settings, box=box, record=True
    )
    _raise_for(reasons[0], t[0])
    times, states, coeffs = records[0]
    return Trajectory(np.array(times), np.array(states), reasons[0], coeffs)


def integrate_many(field, X0, settings=None, bounds=None, t_end=None, deadline=None):
    """Integrate many initial states (rows of ``X0``) without recording steps.

    Returns final states (rows) and per-trajectory reasons; failed
    trajectories carry ``stiff`` or ``nonfinite`` instead of raising.
    """
    settings = _settings(settings, t_end)
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    box = expanded_box(bounds) if bounds is not None else None
    _, Y, reasons, _ = run_batch(
        _fun_of(field), X0.T.copy(), settings.t_end, settings, box=box, deadline=deadline
    )
    return Y.T, reasons


class SectionWatcher:
    """Batched crossing detector for per-column hyperplanes.

    Each column ``j`` has its own section ``(points[:, j], normals[:, j])``
    over the leading ``len(points)`` state components. Crossings are refined
    by regula falsi on the dense output and appended to ``events[j]``. A
    column stops when ``stop_when(j, event)`` returns true or it has
    collected ``max_crossings`` events.
    """

    def __init__(self, points, normals, field_norm, max_crossings=None, stop_when=None,
                 direction=0):
        self.points = np.asarray(points, dtype=float)
        self.normals = np.asarray(normals, dtype=float)
        self.n = self.points.shape[0]
        m = self.points.shape[1]
        self.events = [[] for _ in range(m)]
        self.max_crossings = max_crossings
        self.stop_when = stop_when
        self.direction = direction
        self.field_norm = field_norm
        self.tols = 1e-10 * np.linalg.norm(self.normals, axis=0)

    def _g(self, y, j):
        return float(np.dot(y[: self.n] - self.points[:, j], self.normals[:, j]))

    def __call__(self, info):
        n = self.n
        cols = info.cols
        g0 = np.einsum("dk,dk->k", info.y0[:n] - self.points[:, cols], self.normals[:, cols])
        g1 = np.einsum("dk,dk->k", info.y1[:n] - self.points[:, cols], self.normals[:, cols])
        up = (g0 < 0) & (g1 >= 0)
        down = (g0 > 0) & (g1 <= 0)
        stop = np.zeros(cols.shape[0], dtype=bool)
        for jl in np.flatnonzero(up | down):
            j = cols[jl]
            direction = 1 if up[jl] else -1
            if self.direction and direction != self.direction:
                continue
            ev = self._refine(info, jl, j, g0[jl], direction)
            evs = self.events[j]
            if evs:
                # de-chattering: drop events within 10 local steps of the last one
                if ev.t - evs[-1].t < 10 * info.h[jl] and self.field_norm(ev.state) > 1e-8:
                    continue
            evs.append(ev)
            if self.stop_when is not None and self.stop_when(j, ev):
                stop[jl] = True
            if self.max_crossings is not None and len(evs) >= self.max_crossings:
                stop[jl] = True
        return stop

    def _refine(self, info, jl, j, g_lo, direction):
        # g along the step is a quartic in theta; solve it in scalar arithmetic
        h = float(info.h[jl])
        c = [float(g_lo)] + list(h * (self.normals[:, j] @ info.Q[: self.n, :, jl]))

        def g(th):
            return c[0] + th * (c[1] + th * (c[2] + th * (c[3] + th * c[4])))

        tol = self.tols[j]
        a, b = 0.0, 1.0
        ga, gb = c[0], g(1.0)
        th, side = 1.0, 0
        for _ in range(200):
            th = (a * gb - b * ga) / (gb - ga) if gb != ga else 0.5 * (a + b)
            if not a < th < b:
                th = 0.5 * (a + b)
            gm = g(th)
            if abs(gm) <= tol or (b - a) * abs(h) <= 4e-16 * max(1.0, abs(info.t0[jl])):
                break
            if (gm < 0) == (ga < 0):
                a, ga = th, gm
                if side == -1:
                    gb *= 0.5
                side = -1
            else:
                b, gb = th, gm
                if side == 1:
                    ga *= 0.5
                side = 1
        tm = info.t0[jl] + th * h
        y = info.dense(jl, tm)
        return CrossingEvent(t=float(tm), state=y[: self.n].copy(), direction=direction)


def detect_crossings(field, x0, section, settings=None, max_crossings=None, bounds=None,
                     t_end=None, direction=0):
    """Crossings of ``section`` along the trajectory from ``x0``.

    Sign changes of ``<x(t) - point, normal>`` between accepted steps are
    refined by regula falsi on the dense output until the residual is below
    ``1e-10 |normal|``. ``direction`` filters events (``+1``, ``-1`` or
    ``0`` for both).
    """
    settings = _settings(settings, t_end)
    if not isinstance(section, Section):
        section = Section(*section) if not isinstance(section, dict) else Section(**section)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    watcher = SectionWatcher(
        section.point[:, None],
        section.normal[:, None],
        lambda y: float(np.linalg.norm(field(y))),
        max_crossings=max_crossings,
        direction=direction,
    )
    box = expanded_box(bounds) if bounds is not None else None
    t, _, reasons, _ = run_batch(
        _fun_of(field), x0[:, None], settings.t_end, settings, box=box, on_step=watcher
    )
    _raise_for(reasons[0], t[0])
    return watcher.events[0]


def variational_rhs(field):
    """Right-hand side of the state plus variational system ``dPhi/dt = J Phi``."""
    n = field.dim

    def fun(Y):
        out = np.empty_like(Y)
        for j in range(Y.shape[1]):
            x = Y[:n, j]
            Phi = Y[n:, j].reshape(n, n)
            try:
                f, JPhi = jacobian_product(field, x, Phi)
            except EvaluationError:
                out[:, j] = np.nan
                continue
            out[:n, j] = f
            out[n:, j] = JPhi.reshape(-1)
        return out

    return fun


def monodromy(field, orbit_start, period, settings=None):
    """Fundamental matrix ``Phi(period)`` of the linearised flow along ``x(t)``.

    The state and ``Phi`` (with ``Phi(0) = I``) are integrated jointly;
    ``J(x) Phi`` comes from one dual-number pass seeded with ``Phi``.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    settings = _settings(settings, period)
    n = field.dim
    x0 = np.asarray(orbit_start, dtype=float).reshape(-1)
    Y0 = np.concatenate([x0, np.eye(n).reshape(-1)])[:, None]
    t, Y, reasons, _ = run_batch(variational_rhs(field), Y0, period, settings)
    _raise_for(reasons[0], t[0])
    return Y[n:, 0].reshape(n, n)
