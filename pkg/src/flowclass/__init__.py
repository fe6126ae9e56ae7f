"""Classify autonomous ODE systems as gradient, gradient-like, Morse-Smale or general.

The top-level namespace re-exports the main entry points; the submodules
hold the individual analyses.
"""

__version__ = "0.1.0"

from .classify import (
    ClassificationReport,
    ClassifySettings,
    SystemClass,
    allows_periodic_orbits,
    classify_system,
    get_system_class,
    is_gradient,
    is_gradient_like,
    is_morse_smale,
    landscape_interpretation,
    quick_classify,
    trajectory_fates,
)
from .errors import (
    BoundsError,
    EvaluationError,
    FlowClassError,
    InvalidOrbitError,
    ModelParseError,
    NotASaddleError,
    NumericalFailure,
    SingularMatrixError,
    StiffnessError,
)
from .fixedpoints import FixedPointRecord, FixedPointType, find_fixed_points
from .manifolds import check_transversality, detect_homoclinic, stable_manifold, unstable_manifold
from .modeldsl import compile_model, load_model, parse_model
from .numerics import eigen, jacobian
from .odeint import IntegrationSettings, Section, detect_crossings, integrate, monodromy
from .orbits import OrbitRecord, find_periodic_orbits, has_periodic_orbits
from .report import render_report
from .structure import (
    RegionSample,
    curl_magnitude,
    curl_to_gradient_ratio,
    is_curl_free,
    relative_symmetry_error,
)
from .vectorfield import VectorField, builtin, make_field
