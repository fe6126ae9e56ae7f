"""Place a vector field in the gradient / gradient-like / Morse-Smale hierarchy.

:func:`classify_system` runs the individual analyses (Jacobian symmetry and
curl on a random sample, equilibria, periodic orbits, trajectory fates and,
for planar saddles, manifold transversality) and applies a fixed rule order
to their results.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FlowClassError
from .fixedpoints import FixedPointRecord, FixedPointType, find_fixed_points
from .geometry import distance_to_polyline
from .manifolds import check_transversality
from .numerics import jacobian
from .odeint import IntegrationSettings, integrate_many
from .orbits import (
    MODULUS_TOL,
    OrbitRecord,
    search_periodic_orbits,
    trajectory_rng,
    trivial_multiplier_index,
)
from .structure import (
    curl_from_jacobian,
    relative_symmetry_error,
    sample_region,
    validate_bounds,
)

__all__ = [
    "SystemClass",
    "ClassifySettings",
    "ClassificationReport",
    "classify_system",
    "quick_classify",
    "get_system_class",
    "trajectory_fates",
    "is_gradient",
    "is_gradient_like",
    "is_morse_smale",
    "allows_periodic_orbits",
    "landscape_interpretation",
]

_FATE_STREAM = 0xFA7E
N_FATES = 20
FATE_HORIZON_CAP = 5000.0


class SystemClass(enum.Enum):
    """Classes ordered from most restrictive to most general."""

    GRADIENT = "GRADIENT"
    GRADIENT_LIKE = "GRADIENT_LIKE"
    MORSE_SMALE = "MORSE_SMALE"
    STRUCTURALLY_STABLE = "STRUCTURALLY_STABLE"
    GENERAL = "GENERAL"


@dataclass(frozen=True)
class ClassifySettings:
    n_samples: int = 100
    n_starts: int = 100
    check_manifolds: bool = True
    orbit_timeout: float | None = 10.0
    seed: int = 0
    gradient_sym: float = 1e-8
    gradient_curl: float = 1e-8
    gradient_like_sym: float = 0.1
    hyper_tol: float = 1e-8
    n_trajectories: int = 50
    max_period: float = 100.0
    threads: int | None = None

    def __post_init__(self):
        for name in ("gradient_sym", "gradient_curl", "gradient_like_sym", "hyper_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.gradient_sym < self.gradient_like_sym:
            raise ValueError("gradient_sym must be below gradient_like_sym")
        if self.n_samples < 1 or self.n_starts < 1:
            raise ValueError("n_samples and n_starts must be >= 1")

    def thresholds(self):
        return {
            "gradient_sym": self.gradient_sym,
            "gradient_curl": self.gradient_curl,
            "gradient_like_sym": self.gradient_like_sym,
            "hyper_tol": self.hyper_tol,
        }


@dataclass(frozen=True)
class ClassificationReport:
    """Outcome of :func:`classify_system`.

    ``has_transverse_manifolds`` is ``True``, ``False`` or ``None`` (not
    determined). ``details`` holds plain JSON-compatible data: budgets,
    thresholds, fate counts, search statistics and warnings.
    """

    system_class: SystemClass
    fixed_points: list
    periodic_orbits: list
    jacobian_symmetry: float
    curl_gradient_ratio: float
    has_transverse_manifolds: bool | None
    confidence: float
    details: dict = field(default_factory=dict)

    @property
    def is_gradient(self):
        return is_gradient(self)

    @property
    def is_gradient_like(self):
        return is_gradient_like(self)

    @property
    def is_morse_smale(self):
        return is_morse_smale(self)

    @property
    def allows_periodic_orbits(self):
        return allows_periodic_orbits(self)

    def to_dict(self):
        return {
            "system_class": self.system_class.value,
            "confidence": self.confidence,
            "fixed_points": [_fp_to_dict(fp) for fp in self.fixed_points],
            "periodic_orbits": [_orbit_to_dict(o) for o in self.periodic_orbits],
            "jacobian_symmetry": self.jacobian_symmetry,
            "curl_gradient_ratio": self.curl_gradient_ratio,
            "has_transverse_manifolds": (
                "unknown" if self.has_transverse_manifolds is None else self.has_transverse_manifolds
            ),
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d):
        htm = d["has_transverse_manifolds"]
        return cls(
            system_class=SystemClass(d["system_class"]),
            fixed_points=[_fp_from_dict(x) for x in d["fixed_points"]],
            periodic_orbits=[_orbit_from_dict(x) for x in d["periodic_orbits"]],
            jacobian_symmetry=float(d["jacobian_symmetry"]),
            curl_gradient_ratio=float(d["curl_gradient_ratio"]),
            has_transverse_manifolds=None if htm == "unknown" else bool(htm),
            confidence=float(d["confidence"]),
            details=d.get("details", {}),
        )


def _complex_list(values):
    return [{"re": float(np.real(v)), "im": float(np.imag(v))} for v in values]


def _complex_array(items):
    return np.array([complex(x["re"], x["im"]) for x in items], dtype=complex)


def _fp_to_dict(fp):
    return {
        "location": [float(v) for v in fp.location],
        "eigenvalues": _complex_list(fp.eigenvalues),
        "type": fp.type.value,
        "residual": fp.residual,
    }


def _fp_from_dict(d):
    return FixedPointRecord(
        location=np.array(d["location"], dtype=float),
        eigenvalues=_complex_array(d["eigenvalues"]),
        type=FixedPointType(d["type"]),
        residual=float(d["residual"]),
    )


def _orbit_to_dict(o):
    return {
        "period": o.period,
        "is_stable": o.is_stable,
        "stability": o.stability,
        "multipliers": _complex_list(o.multipliers),
        "closure": o.closure,
        "points": [[float(v) for v in p] for p in o.points],
    }


def _orbit_from_dict(d):
    return OrbitRecord(
        points=np.array(d["points"], dtype=float),
        period=float(d["period"]),
        multipliers=_complex_array(d["multipliers"]),
        is_stable=bool(d["is_stable"]),
        stability=d.get("stability", "stable" if d["is_stable"] else "unstable"),
        closure=float(d.get("closure", 0.0)),
    )


# ---------------------------------------------------------------- predicates


def is_gradient(report):
    return report.system_class is SystemClass.GRADIENT


def is_gradient_like(report):
    return report.system_class in (SystemClass.GRADIENT, SystemClass.GRADIENT_LIKE)


def is_morse_smale(report):
    return report.system_class in (
        SystemClass.GRADIENT,
        SystemClass.GRADIENT_LIKE,
        SystemClass.MORSE_SMALE,
    )


def allows_periodic_orbits(report):
    return not is_gradient_like(report)


_LANDSCAPE = {
    SystemClass.GRADIENT: (
        True, "potential", "True potential landscape; elevation = −log(probability)"),
    SystemClass.GRADIENT_LIKE: (
        True, "quasi-potential", "Quasi-potential exists; landscape approximation valid"),
    SystemClass.MORSE_SMALE: (
        True, "local", "Local potentials around attractors; limit cycles as valleys"),
    SystemClass.STRUCTURALLY_STABLE: (
        True, "local", "Local potentials around attractors; limit cycles as valleys"),
    SystemClass.GENERAL: (
        False, "none", "Landscape metaphor breaks down; curl dynamics dominate"),
}


def landscape_interpretation(report):
    """``(can_represent, landscape_type, description)`` for a report or class."""
    cls = report if isinstance(report, SystemClass) else report.system_class
    return _LANDSCAPE[cls]


# ----------------------------------------------------------------- pipeline


def _structure_stats(field, bounds, settings, warnings):
    pts = sample_region(bounds, settings.n_samples, settings.seed)
    sym, ratio, curls = [], [], []
    bad = 0
    for p in pts:
        try:
            J = jacobian(field, p)
            F = field(p)
        except FlowClassError:
            bad += 1
            continue
        sym.append(relative_symmetry_error(J))
        c = curl_from_jacobian(J)
        curls.append(c)
        nF = float(np.linalg.norm(F))
        if nF >= 1e-12:
            ratio.append(c / nF)
    if bad:
        warnings.append(f"field or Jacobian evaluation failed at {bad} sample points")
    mean = lambda v: float(np.mean(v)) if v else 0.0  # noqa: E731
    return {
        "symmetry": mean(sym),
        "ratio": mean(ratio),
        "max_curl": float(max(curls)) if curls else 0.0,
        "evaluated": len(sym),
        "ratio_points": len(ratio),
        "failed": bad,
    }


def trajectory_fates(field, bounds, fixed_points, orbits, settings=None, n=N_FATES,
                     integration=None):
    """Where ``n`` seeded random trajectories end up.

    Each runs for ``max(50, 10 * longest period, 50 * tau)`` where ``tau`` is
    the slowest relaxation time ``1 / min|Re l|`` among attracting fixed
    points, capped at ``FATE_HORIZON_CAP``. An endpoint within
    ``1e-4 * diameter`` of a fixed point counts as ``to_fixed_point``, within
    ``1e-2 * diameter`` of an orbit polyline as ``to_orbit``; trajectories
    leaving the expanded box are ``escaped`` and everything else is
    ``wandering``. Integration failures are counted under ``failed``.
    """
    b = validate_bounds(bounds, field.dim)
    seed = settings.seed if isinstance(settings, ClassifySettings) else int(settings or 0)
    diam = float(np.linalg.norm(b[:, 1] - b[:, 0]))
    T = max(50.0, 10.0 * max((o.period for o in orbits), default=0.0))
    # slow attractors need a proportionally longer run; keeps fates invariant under F -> cF
    rates = [-float(np.max(fp.eigenvalues.real)) for fp in fixed_points
             if np.all(fp.eigenvalues.real < 0)]
    if rates:
        T = min(max(T, 50.0 / min(rates)), max(T, FATE_HORIZON_CAP))
    X0 = np.array([
        trajectory_rng(seed, i, stream=_FATE_STREAM).uniform(b[:, 0], b[:, 1]) for i in range(n)
    ])
    fates = {"to_fixed_point": 0, "to_orbit": 0, "escaped": 0, "wandering": 0, "failed": 0}
    if n == 0:
        return fates
    ends, reasons = integrate_many(field, X0, integration or IntegrationSettings(), bounds=b,
                                   t_end=T)
    for x, r in zip(ends, reasons):
        if r == "left_bounds":
            fates["escaped"] += 1
        elif r in ("stiff", "nonfinite"):
            fates["failed"] += 1
        elif any(np.linalg.norm(x - fp.location) <= 1e-4 * diam for fp in fixed_points):
            fates["to_fixed_point"] += 1
        elif any(
            distance_to_polyline(x[None, :], o.points, closed=True)[0] <= 1e-2 * diam
            for o in orbits
        ):
            fates["to_orbit"] += 1
        else:
            fates["wandering"] += 1
    return fates


def _decades(value, threshold):
    if value <= 0 or not math.isfinite(value):
        return math.inf
    return abs(math.log10(value) - math.log10(threshold))


def _margin(value, threshold):
    """Confidence factor from the log-distance between a statistic and its threshold."""
    return min(1.0, max(0.5, _decades(value, threshold)))


def _confidence(stats, fixed_points, orbits, settings, transversality_unknown, warnings,
                failed):
    c = 1.0
    c *= _margin(stats["symmetry"], settings.gradient_sym)
    c *= _margin(stats["symmetry"], settings.gradient_like_sym)
    c *= _margin(stats["max_curl"], settings.gradient_curl)
    for fp in fixed_points:
        eig = np.asarray(fp.eigenvalues)
        scale = max(1.0, float(np.max(np.abs(eig))))
        c *= _margin(float(np.min(np.abs(eig.real))) / scale, settings.hyper_tol)
    for o in orbits:
        mu = np.asarray(o.multipliers)
        try:
            rest = np.delete(mu, trivial_multiplier_index(mu))
        except FlowClassError:
            continue
        if rest.size:
            c *= _margin(float(np.min(np.abs(np.abs(rest) - 1.0))), MODULUS_TOL)
    if transversality_unknown:
        c *= 0.9
    c *= 0.8 ** len(warnings)
    c = max(0.05, c)
    if failed:
        c = min(c, 0.5)
    return float(min(1.0, c))


def classify_system(field, bounds, settings=None, **overrides):
    """Classify ``field`` on the box ``bounds``.

    Parameters
    ----------
    field : VectorField
    bounds : sequence of (lo, hi)
    settings : ClassifySettings, optional
    **overrides
        Replace individual :class:`ClassifySettings` fields.

    Returns
    -------
    ClassificationReport

    Notes
    -----
    Rules, first match wins:

    a. a non-hyperbolic fixed point or orbit, or a wandering trajectory: GENERAL
    b. no orbits, mean symmetry error below ``gradient_sym`` and curl below
       ``gradient_curl`` at every sample: GRADIENT
    c. no orbits and mean symmetry error below ``gradient_like_sym``: GRADIENT_LIKE
    d. manifolds transverse, or no saddles: MORSE_SMALE
    e. transversality not determined: STRUCTURALLY_STABLE
    f. tangency: GENERAL
    """
    settings = settings or ClassifySettings()
    if overrides:
        settings = replace(settings, **overrides)
    b = validate_bounds(bounds, field.dim)
    warnings = []
    failed = False

    stats = _structure_stats(field, b, settings, warnings)
    failed |= stats["failed"] > 0

    try:
        fps = find_fixed_points(field, b, n_starts=settings.n_starts, seed=settings.seed,
                                hyper_tol=settings.hyper_tol, threads=settings.threads)
    except FlowClassError as exc:
        warnings.append(f"fixed-point search failed: {exc}")
        failed = True
        fps = []

    search = search_periodic_orbits(
        field, b, n_trajectories=settings.n_trajectories, max_period=settings.max_period,
        seed=settings.seed, timeout=settings.orbit_timeout, fixed_points=fps,
    )
    orbits = list(search.orbits)
    if search.timed_out:
        warnings.append("periodic-orbit search hit its timeout")
    if search.failures:
        warnings.append(f"{search.failures} orbit-search integrations failed")
        failed = True

    fates = trajectory_fates(field, b, fps, orbits, settings.seed)
    if fates["failed"]:
        warnings.append(f"{fates['failed']} fate trajectories failed to integrate")
        failed = True

    saddles = [fp for fp in fps if fp.type is FixedPointType.SADDLE]
    if not saddles:
        verdict = {"verdict": "no_saddles"}
    elif not settings.check_manifolds:
        verdict = {"verdict": "not_checked", "reason": "disabled"}
    elif field.dim > 2:
        verdict = {"verdict": "not_checked", "reason": "dimension > 2"}
    else:
        try:
            v = check_transversality(field, saddles, b)
            verdict = {
                "verdict": v.verdict,
                "checked_pairs": v.checked_pairs,
                "intersections": v.intersections,
                "min_angle": v.min_angle,
                "angle_threshold": v.angle_threshold,
            }
        except FlowClassError as exc:
            warnings.append(f"manifold tracing failed: {exc}")
            failed = True
            verdict = {"verdict": "not_checked", "reason": "failure"}
    vv = verdict["verdict"]
    transverse = {"no_saddles": True, "transverse": True, "no_intersections": True,
                  "tangency": False}.get(vv)

    non_hyperbolic = any(
        fp.type in (FixedPointType.NON_HYPERBOLIC, FixedPointType.CENTER) for fp in fps
    ) or any(o.stability == "non_hyperbolic" for o in orbits)
    curl_free = stats["max_curl"] <= settings.gradient_curl and stats["evaluated"] > 0
    if non_hyperbolic or fates["wandering"] > 0:
        cls, rule = SystemClass.GENERAL, "a"
    elif not orbits and stats["symmetry"] < settings.gradient_sym and curl_free:
        cls, rule = SystemClass.GRADIENT, "b"
    elif not orbits and stats["symmetry"] < settings.gradient_like_sym:
        cls, rule = SystemClass.GRADIENT_LIKE, "c"
    elif transverse is True:
        cls, rule = SystemClass.MORSE_SMALE, "d"
    elif transverse is None:
        cls, rule = SystemClass.STRUCTURALLY_STABLE, "e"
    else:
        cls, rule = SystemClass.GENERAL, "f"

    confidence = _confidence(stats, fps, orbits, settings, transverse is None, warnings,
                             failed)
    details = {
        "rule": rule,
        "seed": settings.seed,
        "n_samples": settings.n_samples,
        "n_starts": settings.n_starts,
        "orbit_timeout": settings.orbit_timeout,
        "check_manifolds": settings.check_manifolds,
        "thresholds": settings.thresholds(),
        "samples_evaluated": stats["evaluated"],
        "ratio_samples": stats["ratio_points"],
        "max_curl": stats["max_curl"],
        "curl_free": curl_free,
        "saddles": len(saddles),
        "orbit_search": {
            "trajectories": settings.n_trajectories,
            "max_period": settings.max_period,
            "candidates": search.candidates,
            "rejected": search.rejected,
            "failures": search.failures,
            "skipped_fixed_point": search.skipped_fixed_point,
            "escaped": search.escaped,
            "no_return": search.no_return,
            "timed_out": search.timed_out,
        },
        "fates": fates,
        "transversality": verdict,
        "warnings": warnings,
    }
    return ClassificationReport(
        system_class=cls,
        fixed_points=fps,
        periodic_orbits=orbits,
        jacobian_symmetry=stats["symmetry"],
        curl_gradient_ratio=stats["ratio"],
        has_transverse_manifolds=transverse,
        confidence=confidence,
        details=details,
    )


QUICK_CONFIDENCE_CAP = 0.8


def quick_classify(field, bounds, seed=0, **overrides):
    """Reduced-budget classification without manifold analysis.

    20 samples, 25 Newton starts, a 2 s orbit-search timeout; confidence
    is capped at 0.8.
    """
    settings = ClassifySettings(n_samples=20, n_starts=25, check_manifolds=False,
                                orbit_timeout=2.0, seed=seed)
    report = classify_system(field, bounds, settings, **overrides)
    return replace(report, confidence=min(report.confidence, QUICK_CONFIDENCE_CAP))


def get_system_class(field, bounds, settings=None, **overrides):
    return classify_system(field, bounds, settings, **overrides).system_class
