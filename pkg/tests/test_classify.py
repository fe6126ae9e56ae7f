import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowclass.classify import (
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
from flowclass.vectorfield import DEFAULT_BOUNDS, builtin

B = DEFAULT_BOUNDS
_cache = {}


def report(name):
    if name not in _cache:
        _cache[name] = classify_system(builtin(name), B[name])
    return _cache[name]


def test_gradient2d():
    r = report("gradient2d")
    assert r.system_class is SystemClass.GRADIENT
    assert r.jacobian_symmetry < 1e-10 and r.curl_gradient_ratio < 1e-10
    assert 0.9 <= r.confidence <= 1.0
    assert r.details["fates"]["to_fixed_point"] == 20


def test_rotation_is_morse_smale():
    r = report("rotation")
    assert r.system_class is SystemClass.MORSE_SMALE
    assert r.jacobian_symmetry == pytest.approx(2**-0.5, rel=1e-12)
    assert r.periodic_orbits == []


def test_toggle_is_gradient_like():
    r = report("toggle")
    assert r.system_class is SystemClass.GRADIENT_LIKE
    assert 1e-8 < r.jacobian_symmetry < 0.1


def test_vanderpol():
    r = report("vanderpol")
    assert r.system_class is SystemClass.MORSE_SMALE
    assert len(r.periodic_orbits) == 1 and r.periodic_orbits[0].is_stable
    assert [fp.type.value for fp in r.fixed_points] == ["UNSTABLE_FOCUS"]
    fates = r.details["fates"]
    assert fates["to_orbit"] > 0 and fates["wandering"] == 0


@pytest.mark.slow
def test_lorenz():
    r = report("lorenz")
    assert r.system_class is SystemClass.GENERAL
    assert r.details["fates"]["wandering"] > 0
    assert r.details["transversality"]["verdict"] == "not_checked"


@pytest.mark.parametrize("name", ["gradient2d", "rotation", "toggle", "vanderpol"])
def test_report_invariants(name):
    r = report(name)
    assert 0.0 <= r.confidence <= 1.0
    if r.system_class in (SystemClass.GRADIENT, SystemClass.GRADIENT_LIKE):
        assert r.periodic_orbits == []
    if r.periodic_orbits:
        assert allows_periodic_orbits(r)


@pytest.mark.parametrize("name", ["gradient2d", "vanderpol"])
def test_json_round_trip(name):
    r = report(name)
    text = json.dumps(r.to_dict())
    back = ClassificationReport.from_dict(json.loads(text))
    assert back.system_class is r.system_class
    assert back.confidence == r.confidence
    assert back.jacobian_symmetry == r.jacobian_symmetry
    assert len(back.fixed_points) == len(r.fixed_points)
    for a, b in zip(back.fixed_points, r.fixed_points):
        np.testing.assert_array_equal(a.location, b.location)
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
    for a, b in zip(back.periodic_orbits, r.periodic_orbits):
        assert a.period == b.period
        np.testing.assert_array_equal(a.multipliers, b.multipliers)
    assert json.dumps(back.to_dict()) == text


def test_determinism_and_threads():
    f, b = builtin("toggle"), B["toggle"]
    a = classify_system(f, b, threads=1).to_dict()
    c = classify_system(f, b, threads=3).to_dict()
    assert json.dumps(a) == json.dumps(c)


@pytest.mark.parametrize(
    "cls, expected",
    [
        (SystemClass.GRADIENT, (True, True, True, False)),
        (SystemClass.GRADIENT_LIKE, (False, True, True, False)),
        (SystemClass.MORSE_SMALE, (False, False, True, True)),
        (SystemClass.STRUCTURALLY_STABLE, (False, False, False, True)),
        (SystemClass.GENERAL, (False, False, False, True)),
    ],
)
def test_predicates(cls, expected):
    r = ClassificationReport(cls, [], [], 0.0, 0.0, None, 1.0)
    assert (is_gradient(r), is_gradient_like(r), is_morse_smale(r), allows_periodic_orbits(r)) == expected
    assert (r.is_gradient, r.is_gradient_like, r.is_morse_smale, r.allows_periodic_orbits) == expected


@pytest.mark.property
@given(st.sampled_from(list(SystemClass)))
def test_predicate_monotonicity(cls):
    r = ClassificationReport(cls, [], [], 0.0, 0.0, True, 0.5)
    assert not is_gradient(r) or is_gradient_like(r)
    assert not is_gradient_like(r) or is_morse_smale(r)
    assert allows_periodic_orbits(r) == (not is_gradient_like(r))


def test_landscape_strings():
    assert landscape_interpretation(SystemClass.GRADIENT) == (
        True, "potential", "True potential landscape; elevation = −log(probability)")
    assert landscape_interpretation(SystemClass.GRADIENT_LIKE)[2] == (
        "Quasi-potential exists; landscape approximation valid")
    assert landscape_interpretation(SystemClass.MORSE_SMALE) == (
        True, "local", "Local potentials around attractors; limit cycles as valleys")
    assert landscape_interpretation(SystemClass.STRUCTURALLY_STABLE) == landscape_interpretation(
        SystemClass.MORSE_SMALE)
    assert landscape_interpretation(SystemClass.GENERAL) == (
        False, "none", "Landscape metaphor breaks down; curl dynamics dominate")


@pytest.mark.property
@pytest.mark.parametrize("name", ["gradient2d", "rotation", "toggle"])
@settings(max_examples=8)
@given(c=st.floats(0.1, 10.0))
def test_class_is_scale_invariant(name, c):
    from flowclass.vectorfield import make_field

    f = builtin(name)
    g = make_field(lambda x, f=f, c=c: c * f(x), f.dim)
    a = quick_classify(f, B[name]).system_class
    assert quick_classify(g, B[name]).system_class is a


def test_quick_classify():
    r = quick_classify(builtin("gradient2d"), B["gradient2d"])
    assert r.system_class is SystemClass.GRADIENT
    assert r.confidence <= 0.8
    assert r.details["n_samples"] == 20
    assert quick_classify(builtin("vanderpol"), B["vanderpol"]).system_class is SystemClass.MORSE_SMALE


@pytest.mark.slow
def test_quick_lorenz():
    assert quick_classify(builtin("lorenz"), B["lorenz"]).system_class is SystemClass.GENERAL


def test_get_system_class():
    assert get_system_class(builtin("rotation"), B["rotation"]) is SystemClass.MORSE_SMALE


def test_trajectory_fates_gradient():
    f = builtin("gradient2d")
    fps = report("gradient2d").fixed_points
    fates = trajectory_fates(f, B["gradient2d"], fps, [], 0)
    assert fates["to_fixed_point"] == 20 and fates["wandering"] == 0


def test_settings_validation():
    with pytest.raises(ValueError):
        ClassifySettings(gradient_sym=0.2, gradient_like_sym=0.1)
    with pytest.raises(ValueError):
        ClassifySettings(n_samples=0)
    with pytest.raises(Exception):
        classify_system(builtin("gradient2d"), [])
