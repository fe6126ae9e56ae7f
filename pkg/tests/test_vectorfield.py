import numpy as np
import pytest

from flowclass.errors import (
    EvaluationError,
    InconsistentDimensionError,
    InvalidDimensionError,
    UnknownModelError,
    UnknownParameterError,
)
from flowclass.vectorfield import (
    BUILTIN_DIMENSIONS,
    BUILTIN_MODELS,
    StemCellParams,
    builtin,
    dimension,
    infer_field,
    make_field,
    stem_cell_rhs,
)


def test_make_field_examples():
    f = make_field(lambda x: -x, 2)
    np.testing.assert_array_equal(f([1.0, 2.0]), [-1.0, -2.0])
    assert dimension(f) == 2
    z = make_field(lambda x: np.array([0.0]), 1)
    np.testing.assert_array_equal(z([5.0]), [0.0])
    q = make_field(lambda x: np.array([x[0] ** 2, x[0] * x[1]]), 2)
    np.testing.assert_array_equal(q([2.0, 3.0]), [4.0, 6.0])


def test_make_field_rejects_zero_dim():
    with pytest.raises(InvalidDimensionError):
        make_field(lambda x: x, 0)


def test_infer_field():
    assert infer_field(lambda x: -x, [1.0, 2.0]).dim == 2
    assert infer_field(lambda x: -x, [0.0]).dim == 1
    with pytest.raises(InconsistentDimensionError):
        infer_field(lambda x: np.zeros(3), [1.0, 2.0])


def test_nonfinite_output_is_an_evaluation_error():
    f = make_field(lambda x: np.array([1.0 / x[0]]), 1)
    with pytest.raises(EvaluationError):
        f([0.0])


def test_wrong_length_output():
    f = make_field(lambda x: np.zeros(3), 2)
    with pytest.raises(EvaluationError):
        f([0.0, 0.0])


def test_builtin_examples():
    np.testing.assert_array_equal(builtin("lorenz")([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(builtin("rotation", {"omega": 1.0})([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(builtin("vanderpol")([1.0, 1.0]), [1.0, -1.0])
    np.testing.assert_array_equal(builtin("gradient2d")([1.0, -1.0]), [-2.0, 2.0])


def test_builtin_dimensions():
    assert BUILTIN_DIMENSIONS == {
        "gradient2d": 2, "rotation": 2, "toggle": 2, "vanderpol": 2, "lorenz": 3, "stemcell": 4,
    }
    for name in BUILTIN_MODELS:
        assert dimension(builtin(name)) == BUILTIN_DIMENSIONS[name]


def test_builtin_errors():
    with pytest.raises(UnknownModelError):
        builtin("duffing")
    with pytest.raises(UnknownParameterError):
        builtin("lorenz", {"gamma": 1.0})


def test_builtin_batch_matches_pointwise(rng):
    for name in BUILTIN_MODELS:
        f = builtin(name)
        X = rng.uniform(0.1, 3.0, size=(f.dim, 7))
        expect = np.column_stack([f(X[:, j]) for j in range(7)])
        np.testing.assert_allclose(f.batch(X), expect, rtol=1e-14, atol=1e-14)


def test_stemcell_defaults():
    p = StemCellParams()
    assert (p.k0, p.k5, p.k11, p.k13, p.kd, p.L) == (0.005, 0.00135, 5.0, 0.005, 1.0, 50.0)


def test_stemcell_at_origin():
    out = stem_cell_rhs(np.zeros(4))
    np.testing.assert_allclose(out, [0.0, 0.01, 1.0, 5.0], rtol=1e-15)


def test_stemcell_without_degradation_is_production(rng):
    from dataclasses import replace

    p = replace(StemCellParams(), kd=0.0)
    from flowclass.vectorfield import stem_cell_production

    x = rng.uniform(0, 50, 4)
    np.testing.assert_allclose(stem_cell_rhs(x, p), stem_cell_production(x, p))


def test_stemcell_pure_degradation(rng):
    zero = {f"k{i}": 0.0 for i in range(15)}
    p = StemCellParams(**zero, kd=0.7)
    x = rng.uniform(0, 50, 4)
    np.testing.assert_allclose(stem_cell_rhs(x, p), -0.7 * x, atol=1e-15)


def test_negated_and_scaled():
    f = builtin("vanderpol")
    x = np.array([0.3, -1.2])
    np.testing.assert_array_equal(f.negated()(x), -f(x))
    np.testing.assert_allclose(f.scaled(2.5)(x), 2.5 * f(x))
    g = make_field(lambda x: x**2, 2)
    np.testing.assert_array_equal(g.negated()(x), -(x**2))


def test_composed_field_keeps_derivatives():
    from flowclass.numerics import jacobian
    from flowclass.vectorfield import builtin, make_field

    f = builtin("vanderpol")
    g = make_field(lambda x: 3.0 * f(x), 2)
    x = np.array([0.5, -1.0])
    np.testing.assert_array_equal(jacobian(g, x), 3.0 * jacobian(f, x))
