import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from drlseg.fields import (
    Grid2D,
    VectorField2D,
    as_field,
    as_mask,
    divergence,
    gradient,
    gradient_adjoint,
    integrate,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
small_fields = st.integers(3, 9).flatmap(lambda n: arrays(float, (n, n + 1), elements=finite))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(0, 4)
    with pytest.raises(ValueError):
        Grid2D(4, 4, spacing=0.0)
    g = Grid2D(5, 3, 0.5)
    assert g.shape == (3, 5)
    x, y = g.coordinates()
    assert x[0, 4] == 2.0 and y[2, 0] == 1.0


def test_field_and_mask_validation():
    with pytest.raises(ValueError):
        as_field(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        as_field(np.zeros(4))
    with pytest.raises(ValueError):
        as_mask(np.array([[0, 2]]))
    assert as_mask(np.array([[0, 1]])).dtype == bool


def test_gradient_of_constant_is_zero():
    g = gradient(np.full((6, 7), 3.5))
    assert not g.dx.any() and not g.dy.any()


def test_gradient_of_ramp():
    x = np.tile(np.arange(5.0), (5, 1))
    g = gradient(x)
    assert np.all(g.dx == 1.0)
    assert np.all(g.dy == 0.0)


def test_gradient_exact_on_quadratics(rng):
    # central differences are exact for quadratics in the interior
    ys, xs = np.mgrid[0:8, 0:8].astype(float)
    a, b, c, d, e, f = rng.normal(size=6)
    q = a * xs**2 + b * xs * ys + c * ys**2 + d * xs + e * ys + f
    g = gradient(q)
    dqdx = 2 * a * xs + b * ys + d
    dqdy = b * xs + 2 * c * ys + e
    np.testing.assert_allclose(g.dx[:, 1:-1], dqdx[:, 1:-1], atol=1e-10)
    np.testing.assert_allclose(g.dy[1:-1], dqdy[1:-1], atol=1e-10)


def test_gradient_respects_spacing():
    x = np.tile(np.arange(6.0), (4, 1)) * 0.25
    assert np.allclose(gradient(x, spacing=0.25).dx, 1.0)


def test_divergence_of_constant_and_identity():
    v = VectorField2D(np.full((5, 5), 2.0), np.full((5, 5), -1.0))
    assert not divergence(v).any()
    ys, xs = np.mgrid[0:7, 0:7].astype(float)
    div = divergence(VectorField2D(xs, ys))
    assert np.allclose(div[1:-1, 1:-1], 2.0)


def test_div_grad_is_wide_laplacian(rng):
    # central gradient followed by central divergence gives the 5-point
    # Laplacian with stride 2, exact two pixels away from the border
    f = rng.normal(size=(12, 11))
    lap = divergence(gradient(f))
    oracle = np.zeros_like(f)
    for i in range(2, f.shape[0] - 2):
        for j in range(2, f.shape[1] - 2):
            oracle[i, j] = (f[i + 2, j] + f[i - 2, j] + f[i, j + 2] + f[i, j - 2] - 4 * f[i, j]) / 4.0
    np.testing.assert_allclose(lap[2:-2, 2:-2], oracle[2:-2, 2:-2], atol=1e-12)


def test_integrate_examples():
    assert integrate(np.ones((4, 4))) == 16.0
    assert integrate(np.zeros((3, 3))) == 0.0
    ind = np.zeros((4, 4))
    ind[0, :3] = 1
    assert integrate(ind, spacing=0.5) == 0.75


@given(small_fields, small_fields, finite, finite)
def test_gradient_is_linear(f, g, a, b):
    if f.shape != g.shape:
        g = np.resize(g, f.shape)
    lhs = gradient(a * f + b * g)
    rf, rg = gradient(f), gradient(g)
    scale = 1 + np.abs(a * f).max() + np.abs(b * g).max()
    assert np.allclose(lhs.dx, a * rf.dx + b * rg.dx, atol=1e-12 * scale)
    assert np.allclose(lhs.dy, a * rf.dy + b * rg.dy, atol=1e-12 * scale)


@given(small_fields)
def test_gradient_adjoint_is_transpose(f):
    rng = np.random.default_rng(f.size)
    v = VectorField2D(rng.normal(size=f.shape), rng.normal(size=f.shape))
    g = gradient(f)
    lhs = np.sum(v.dx * g.dx + v.dy * g.dy)
    rhs = np.sum(f * gradient_adjoint(v))
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


@given(small_fields, st.floats(0.0, 5.0))
def test_integrate_linear_and_monotone(f, shift):
    assert integrate(f + shift) >= integrate(f) - 1e-9
    assert np.isclose(integrate(2.0 * f), 2.0 * integrate(f))
