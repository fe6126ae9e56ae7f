import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowclass.fixedpoints import (
    FixedPointType,
    classify_at,
    classify_eigenvalues,
    find_fixed_points,
    is_hyperbolic,
    newton,
)
from flowclass.vectorfield import DEFAULT_BOUNDS, builtin, make_field

T = FixedPointType


def _cubic_root():
    # bisection oracle for s^3 + s - 1 = 0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid**3 + mid - 1 > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize(
    "eigs, expected",
    [
        ([-1, -3], T.STABLE_NODE),
        ([1j, -1j], T.CENTER),
        ([-1 + 1j, -1 - 1j], T.STABLE_FOCUS),
        ([2, -1], T.SADDLE),
        ([1, 3], T.UNSTABLE_NODE),
        ([0.5 + 1j, 0.5 - 1j], T.UNSTABLE_FOCUS),
        ([0.0, -1.0], T.NON_HYPERBOLIC),
        ([1j, -1j, 0.0], T.NON_HYPERBOLIC),
        ([1j, -1j, -1.0], T.NON_HYPERBOLIC),
        ([1 + 1j, 1 - 1j, -2.0], T.SADDLE),
    ],
)
def test_classify_eigenvalues(eigs, expected):
    assert classify_eigenvalues(eigs) is expected


def test_hyper_tol_is_relative():
    # the zero band is 1e-8 * 1e3 = 1e-5 here
    assert classify_eigenvalues([1e-6, -1e3]) is T.NON_HYPERBOLIC
    assert classify_eigenvalues([1e-4, -1e3]) is T.SADDLE
    assert classify_eigenvalues([1e-6, -1e3], hyper_tol=1e-10) is T.SADDLE
    assert classify_eigenvalues([1e-9, -0.5]) is T.NON_HYPERBOLIC


@pytest.mark.property
@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False), min_size=1, max_size=6))
def test_classification_is_total(eigs):
    assert isinstance(classify_eigenvalues(eigs), FixedPointType)


def test_is_hyperbolic():
    assert is_hyperbolic([-1, -3])
    assert not is_hyperbolic([0.0, -1])
    s, r, b = 10.0, 28.0, 8 / 3
    disc = math.sqrt((s + 1) ** 2 + 4 * s * (r - 1))
    lorenz0 = [-b, (-(s + 1) + disc) / 2, (-(s + 1) - disc) / 2]
    assert is_hyperbolic(lorenz0)
    rec = classify_at(builtin("lorenz"), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(sorted(rec.eigenvalues.real), sorted(lorenz0), rtol=1e-12)
    assert rec.is_hyperbolic


def test_classify_at_examples():
    g = classify_at(builtin("gradient2d"), [0.0, 0.0])
    assert g.type is T.STABLE_NODE
    np.testing.assert_allclose(g.eigenvalues, [-2, -2])
    r = classify_at(builtin("rotation"), [0.0, 0.0])
    assert r.type is T.STABLE_FOCUS
    np.testing.assert_allclose(r.eigenvalues, [-1 + 1j, -1 - 1j])
    v = classify_at(builtin("vanderpol"), [0.0, 0.0])
    assert v.type is T.UNSTABLE_FOCUS
    np.testing.assert_allclose(v.eigenvalues, [(1 + 1j * math.sqrt(3)) / 2, (1 - 1j * math.sqrt(3)) / 2])
    assert v.residual == 0.0


def test_gradient2d_fixed_point():
    fps = find_fixed_points(builtin("gradient2d"), DEFAULT_BOUNDS["gradient2d"])
    assert len(fps) == 1
    assert np.max(np.abs(fps[0].location)) < 1e-8
    assert fps[0].type is T.STABLE_NODE


def test_lorenz_fixed_points():
    fps = find_fixed_points(builtin("lorenz"), DEFAULT_BOUNDS["lorenz"])
    c = math.sqrt(72.0)
    expected = [[-c, -c, 27.0], [0.0, 0.0, 0.0], [c, c, 27.0]]
    assert len(fps) == 3
    for fp, e in zip(fps, expected):
        np.testing.assert_allclose(fp.location, e, atol=1e-5)
        assert fp.type is T.SADDLE


def test_toggle_fixed_point():
    fps = find_fixed_points(builtin("toggle"), DEFAULT_BOUNDS["toggle"])
    s = _cubic_root()
    assert len(fps) == 1
    np.testing.assert_allclose(fps[0].location, [s, s], atol=1e-6)
    assert fps[0].type is T.STABLE_NODE


@pytest.mark.parametrize("name", ["gradient2d", "rotation", "toggle", "vanderpol", "lorenz"])
def test_records_satisfy_residual_and_dedup(name):
    f = builtin(name)
    b = np.array(DEFAULT_BOUNDS[name])
    fps = find_fixed_points(f, b)
    radius = 1e-6 * (b[:, 1] - b[:, 0])
    for i, fp in enumerate(fps):
        assert np.linalg.norm(f(fp.location)) <= 1e-8
        assert fp.type is classify_eigenvalues(fp.eigenvalues)
        for other in fps[i + 1:]:
            assert not np.all(np.abs(fp.location - other.location) <= radius)
    locs = [tuple(fp.location) for fp in fps]
    assert locs == sorted(locs)


@pytest.mark.parametrize("name", ["toggle", "lorenz", "vanderpol"])
@pytest.mark.parametrize("seed", range(5))
def test_result_stable_under_more_starts(name, seed):
    f = builtin(name)
    a = find_fixed_points(f, DEFAULT_BOUNDS[name], n_starts=100, seed=seed)
    b = find_fixed_points(f, DEFAULT_BOUNDS[name], n_starts=200, seed=seed)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x.location, y.location, atol=1e-6)


def test_threads_do_not_change_result():
    f = builtin("lorenz")
    a = find_fixed_points(f, DEFAULT_BOUNDS["lorenz"], threads=1)
    b = find_fixed_points(f, DEFAULT_BOUNDS["lorenz"], threads=4)
    assert [fp.location.tolist() for fp in a] == [fp.location.tolist() for fp in b]


def test_empty_result_and_bad_args():
    shifted = make_field(lambda x: x - 10.0, 1)
    assert find_fixed_points(shifted, [(-1.0, 1.0)]) == []
    with pytest.raises(ValueError):
        find_fixed_points(shifted, [(-1.0, 1.0)], n_starts=0)


def test_newton_abandons_singular_start():
    flat = make_field(lambda x: np.array([x[0] ** 2 + 1.0]), 1)
    assert newton(flat, [0.0]) is None
    x, r = newton(builtin("toggle"), [0.5, 0.5])
    assert r <= 1e-8
