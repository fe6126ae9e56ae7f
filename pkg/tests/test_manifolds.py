import math

import numpy as np
import pytest

from flowclass.errors import NotASaddleError
from flowclass.fixedpoints import classify_at
from flowclass.manifolds import (
    ANGLE_THRESHOLD,
    check_transversality,
    detect_homoclinic,
    offset,
    stable_manifold,
    unstable_manifold,
)
from flowclass.odeint import integrate
from flowclass.vectorfield import builtin, make_field

linear = make_field(lambda x: np.array([x[0], -x[1]]), 2)
double_well = make_field(lambda x: np.array([x[0] - x[0] ** 3, -x[1]]), 2)
pendulum = make_field(lambda x: np.array([x[1], -np.sin(x[0])]), 2)
channel = make_field(lambda x: np.array([np.sin(x[0]), -x[1] * np.cos(x[0])]), 2)


def test_linear_saddle_branches_lie_on_axes():
    un = unstable_manifold(linear, [0.0, 0.0])
    st = stable_manifold(linear, [0.0, 0.0])
    assert len(un) == 2 and len(st) == 2
    for br in un:
        assert np.max(np.abs(br.points[:, 1])) < 1e-8
        assert br.kind == "unstable"
    for br in st:
        assert np.max(np.abs(br.points[:, 0])) < 1e-8
    assert {br.sign for br in un} == {1, -1}


def test_branch_invariants():
    for br in unstable_manifold(linear, [0.0, 0.0], n_points=50, extent=2.0):
        loc = br.saddle.location
        np.testing.assert_allclose(br.points[0], loc + br.sign * offset(loc) * br.eigvec)
        steps = np.linalg.norm(np.diff(br.points, axis=0), axis=1)
        assert np.all(steps <= 2 * 2.0 / 50)
        assert br.arc_length <= 2.0 + 1e-9
        assert len(br.points) == 50


def test_lorenz_origin_unstable_direction():
    f = builtin("lorenz")
    brs = unstable_manifold(f, [0.0, 0.0, 0.0])
    assert len(brs) == 2
    s, r = 10.0, 28.0
    lam = (-(s + 1) + math.sqrt((s + 1) ** 2 + 4 * s * (r - 1))) / 2
    assert brs[0].eigenvalue.real == pytest.approx(lam, rel=1e-10)
    # eigenvector of the x-y block for lam: (s, lam + s) up to scale
    v = np.array([s, lam + s, 0.0])
    v /= np.linalg.norm(v)
    assert abs(abs(brs[0].eigvec @ v) - 1.0) < 1e-10


def test_not_a_saddle():
    with pytest.raises(NotASaddleError):
        unstable_manifold(builtin("toggle"), [0.6823278038280193] * 2)
    with pytest.raises(NotASaddleError):
        stable_manifold(builtin("gradient2d"), [0.0, 0.0])


def test_double_well_stable_manifold_is_vertical_axis():
    for br in stable_manifold(double_well, [0.0, 0.0]):
        assert np.max(np.abs(br.points[:, 0])) < 1e-8


@pytest.mark.property
@pytest.mark.parametrize(
    "field, saddle",
    [(linear, [0.0, 0.0]), (double_well, [0.0, 0.0]), (pendulum, [math.pi, 0.0]),
     (builtin("lorenz"), [0.0, 0.0, 0.0])],
)
def test_time_reversal_duality(field, saddle):
    st = stable_manifold(field, saddle)
    neg = field.negated()
    un = unstable_manifold(neg, classify_at(neg, saddle))
    assert len(st) == len(un)
    for a, b in zip(st, un):
        np.testing.assert_allclose(a.points, b.points, atol=1e-8)


def test_stable_points_flow_to_saddle():
    delta = offset(np.zeros(2))
    for br in stable_manifold(linear, [0.0, 0.0], extent=1.0):
        for p in br.points[::10]:
            t = math.log(max(np.linalg.norm(p) / delta, 1.0)) + 1.0
            end = integrate(linear, p, t_end=t).final_state
            assert np.linalg.norm(end) <= 10 * delta


def test_detect_homoclinic():
    assert not detect_homoclinic(linear, [0.0, 0.0])
    assert not detect_homoclinic(double_well, [0.0, 0.0])
    assert detect_homoclinic(pendulum, [math.pi, 0.0])
    fish = make_field(lambda x: np.array([x[1], x[0] - x[0] ** 2]), 2)
    assert detect_homoclinic(fish, [0.0, 0.0])


def test_pendulum_branch_conserves_energy():
    H = lambda p: 0.5 * p[:, 1] ** 2 - np.cos(p[:, 0])  # noqa: E731
    for br in unstable_manifold(pendulum, [math.pi, 0.0], n_points=200, extent=6.0):
        # linear resampling between dense samples dominates the error
        assert np.max(np.abs(H(br.points) - 1.0)) < 2e-4


def test_transversality_examples():
    b = [(-2.0, 2.0), (-2.0, 2.0)]
    empty = check_transversality(linear, [], b)
    assert empty.verdict == "no_intersections" and empty.checked_pairs == 0
    v = check_transversality(linear, [[0.0, 0.0]], b)
    assert v.verdict == "no_intersections"
    assert v.checked_pairs == 4
    assert v.angle_threshold == ANGLE_THRESHOLD


def test_saddle_connection_is_tangency():
    b = [(-1.0, 4.0), (-1.5, 1.5)]
    v = check_transversality(channel, [[0.0, 0.0], [math.pi, 0.0]], b)
    assert v.verdict == "tangency"
    assert v.min_angle < ANGLE_THRESHOLD


def test_verdict_independent_of_saddle_order():
    b = [(-1.0, 4.0), (-1.5, 1.5)]
    a = check_transversality(channel, [[0.0, 0.0], [math.pi, 0.0]], b)
    c = check_transversality(channel, [[math.pi, 0.0], [0.0, 0.0]], b)
    assert (a.verdict, a.checked_pairs, a.intersections) == (c.verdict, c.checked_pairs, c.intersections)
    assert a.min_angle == pytest.approx(c.min_angle, abs=1e-12)
