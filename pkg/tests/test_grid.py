import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pnpfd.grid import (
    Field,
    NonFiniteFieldError,
    backward_dx,
    backward_dy,
    face_avg_L,
    face_avg_R,
    ghost_value,
    grad_h,
    grad_norm2_h,
    inner_h,
    laplacian_h,
    make_grid,
    norm2_h,
    norm_inf,
)


def test_make_grid_spacing_and_centers():
    g = make_grid(0, 1, 0, 1, 20, 20)
    assert g.dx == pytest.approx(0.05) and g.dy == pytest.approx(0.05)
    assert g.x[0] == pytest.approx(0.025)
    g = make_grid(0, 1, 0, 1, 2, 2)
    assert np.allclose(g.x, [0.25, 0.75])
    g = make_grid(0, 2, 0, 1, 4, 2)
    assert (g.dx, g.dy) == (0.5, 0.5)
    assert g.y[1] == pytest.approx(0.75)
    assert g.center(1, 2) == pytest.approx((0.25, 0.75))


@pytest.mark.parametrize("args", [(0, 1, 0, 1, 1, 4), (0, 1, 0, 1, 4, 1), (1, 0, 0, 1, 4, 4), (0, 1, 2, 2, 4, 4)])
def test_make_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_field_validation():
    g = make_grid(0, 1, 0, 1, 3, 3)
    with pytest.raises(ValueError):
        Field(g, np.zeros((3, 4)))
    bad = np.zeros((3, 3))
    bad[1, 1] = np.nan
    with pytest.raises(NonFiniteFieldError):
        Field(g, bad)
    f = Field(g, np.ones((3, 3)))
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0


def test_ghost_reflection():
    g = make_grid(0, 1, 0, 1, 4, 5)
    v = np.arange(20.0).reshape(4, 5)
    v[0, 2] = 7.5
    v[3, 2] = -2.0
    f = Field(g, v)
    assert ghost_value(f, 0, 3) == 7.5
    assert ghost_value(f, 5, 3) == -2.0
    for k in range(1, 6):
        assert ghost_value(f, 0, k) == f.at(1, k)
        assert ghost_value(f, 5, k) == f.at(4, k)
    for j in range(1, 5):
        assert ghost_value(f, j, 0) == f.at(j, 1)
        assert ghost_value(f, j, 6) == f.at(j, 5)
    assert ghost_value(g.constant(3.25), 0, 1) == 3.25


def test_ghost_corner_and_far_cells_rejected():
    f = make_grid(0, 1, 0, 1, 3, 3).zeros()
    with pytest.raises(IndexError):
        ghost_value(f, 0, 0)
    with pytest.raises(IndexError):
        ghost_value(f, 5, 1)


def test_laplacian_examples():
    g = make_grid(0, 1, 0, 1, 6, 5)
    assert np.array_equal(laplacian_h(g.constant(2.5)).values, np.zeros(g.shape))
    quad = laplacian_h(g.sample(lambda x, y: x ** 2 + 0 * y)).values
    assert np.allclose(quad[1:-1, :], 2.0, rtol=0, atol=1e-10)

    g3 = make_grid(0, 3, 0, 3, 3, 3)
    v = np.zeros((3, 3))
    v[1, 1] = 1.0
    lap = laplacian_h(Field(g3, v)).values
    assert lap[1, 1] == -4.0
    assert lap[0, 1] == lap[2, 1] == lap[1, 0] == lap[1, 2] == 1.0
    assert lap[0, 0] == 0.0


def test_grad_examples():
    g = make_grid(0, 1, 0, 1, 5, 4)
    gx, gy = grad_h(g.constant(1.0))
    assert not gx.values.any() and not gy.values.any()
    gx, gy = grad_h(g.sample(lambda x, y: x + 0 * y))
    assert np.allclose(gx.values[:-1], 1.0) and not gx.values[-1].any()
    assert not gy.values.any()

    g2 = make_grid(0, 1, 0, 1, 2, 2)
    gx, _ = grad_h(Field(g2, [[0.0, 0.0], [1.0, 1.0]]))
    assert np.allclose(gx.values[0], 1 / g2.dx) and not gx.values[1].any()


def test_backward_differences():
    g = make_grid(0, 1, 0, 1, 2, 2)
    f = Field(g, [[2.0, 2.0], [5.0, 5.0]])
    assert backward_dx(f, 2, 1) == 6.0
    assert backward_dx(f, 1, 1) == 0.0
    lin = make_grid(0, 1, 0, 2, 6, 6).sample(lambda x, y: 3 * x - 0.5 * y)
    assert backward_dx(lin, 4, 2) == pytest.approx(3.0)
    assert backward_dy(lin, 2, 4) == pytest.approx(-0.5)
    assert np.array_equal(backward_dy(lin).values[:, 0], np.zeros(6))


def test_face_averages():
    g = make_grid(0, 1, 0, 1, 2, 2)
    f = Field(g, [[1.0, 4.0], [3.0, 8.0]])
    L, R = face_avg_L(f), face_avg_R(f)
    assert L.at(2, 1) == 2.0
    assert L.at(1, 1) == 1.0 and L.at(1, 2) == 4.0
    assert R.at(1, 2) == 2.5 and R.at(2, 1) == 3.0
    c = g.constant(0.3)
    assert np.array_equal(face_avg_L(c).values, c.values)
    assert np.array_equal(face_avg_R(c).values, c.values)


def test_norms():
    g = make_grid(0, 1, 0, 1, 2, 2)
    assert norm2_h(g.constant(1.0)) == 1.0
    f = g.sample(lambda x, y: x - 3 * y)
    assert inner_h(f, g.zeros()) == 0.0
    assert grad_norm2_h(g.constant(4.0)) == 0.0
    assert norm_inf(f) == pytest.approx(2.0)


def test_field_arithmetic_keeps_grid():
    g = make_grid(0, 1, 0, 1, 3, 2)
    f = g.constant(2.0)
    h = 3 * f - f / 2
    assert isinstance(h, Field) and h.grid == g
    assert np.allclose(h.values, 5.0)
    other = make_grid(0, 2, 0, 1, 3, 2).constant(1.0)
    with pytest.raises(ValueError):
        f + other


grid_dims = st.tuples(st.integers(2, 7), st.integers(2, 7))


@st.composite
def field_pair(draw):
    nx, ny = draw(grid_dims)
    lx = draw(st.floats(0.2, 5.0))
    ly = draw(st.floats(0.2, 5.0))
    g = make_grid(0.0, lx, -1.0, -1.0 + ly, nx, ny)
    elems = st.floats(-10, 10, allow_nan=False)
    a = draw(arrays(np.float64, (nx, ny), elements=elems))
    b = draw(arrays(np.float64, (nx, ny), elements=elems))
    return Field(g, a), Field(g, b)


@settings(max_examples=60, deadline=None)
@given(field_pair())
def test_summation_by_parts(pair):
    f, h = pair
    fx, fy = grad_h(f)
    hx, hy = grad_h(h)
    lhs = inner_h(laplacian_h(f), h)
    sym = inner_h(f, laplacian_h(h))
    rhs = -(inner_h(fx, hx) + inner_h(fy, hy))
    scale = max(1.0, abs(lhs), np.abs(f.values).max() * np.abs(h.values).max() * f.grid.size)
    assert abs(lhs - sym) <= 1e-12 * scale
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(field_pair())
def test_laplacian_has_zero_mean(pair):
    f, _ = pair
    total = inner_h(laplacian_h(f), f.grid.constant(1.0))
    assert abs(total) <= 1e-12 * max(1.0, np.abs(laplacian_h(f).values).sum() * f.grid.cell_area)


@settings(max_examples=40, deadline=None)
@given(field_pair(), st.floats(-5, 5))
def test_gradient_ignores_constants(pair, shift):
    f, _ = pair
    assert grad_norm2_h(f + shift) == pytest.approx(grad_norm2_h(f), rel=1e-9, abs=1e-9)
