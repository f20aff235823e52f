import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from machcombust.grid import (
    DirichletConst,
    GridError,
    LocationError,
    NeumannZero,
    ScalarField,
    VectorField,
    apply_bc,
    center_to_corner,
    curl2d,
    divergence,
    gradient,
    inner,
    laplacian,
    lp_norm,
    make_grid,
    mean,
    perp_gradient,
    read_snapshot,
    sample_scalar,
    write_snapshot,
)

sizes = st.integers(min_value=4, max_value=9)
values = st.floats(min_value=-10, max_value=10, allow_nan=False)


def random_center(grid, rng):
    f = ScalarField(grid, "center", np.zeros(grid.shape("center")))
    return f.with_interior(rng.standard_normal((grid.nx, grid.ny)))


def test_layout_shapes():
    g = make_grid(4, 6, 2.0, 3.0, "A")
    assert g.shape("center") == (6, 8)
    assert g.shape("xface") == (5, 8)
    assert g.shape("yface") == (6, 7)
    assert g.shape("corner") == (5, 7)
    assert g.hx == pytest.approx(0.5) and g.hy == pytest.approx(0.5)


@pytest.mark.parametrize("args", [(1, 4, 1.0, 1.0, "A"), (4, 4, 0.0, 1.0, "A"), (4, 4, 1.0, 1.0, "D")])
def test_make_grid_rejects_bad_input(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_shape_mismatch_is_a_location_error():
    g = make_grid(4, 4, 1.0, 1.0)
    with pytest.raises(LocationError):
        ScalarField(g, "center", np.zeros((4, 4)))
    with pytest.raises(LocationError):
        ScalarField(g, "xface", np.zeros(g.shape("xface")))


def test_quadrature_of_constant():
    g = make_grid(5, 7, 2.0, 3.0)
    one = sample_scalar(g, lambda x, y: 1.0)
    assert mean(one) == pytest.approx(1.0)
    assert lp_norm(one, 2) == pytest.approx(math.sqrt(6.0))
    assert inner(one, one) == pytest.approx(6.0)


def test_neumann_laplacian_of_constant_vanishes():
    g = make_grid(6, 5, 1.0, 1.0)
    f = apply_bc(sample_scalar(g, lambda x, y: 3.0), NeumannZero())
    assert np.max(np.abs(laplacian(f).interior)) < 1e-12


def test_dirichlet_ghost_hits_wall_value():
    g = make_grid(6, 6, 1.0, 1.0, "B")
    f = apply_bc(sample_scalar(g, lambda x, y: 2.0 + 0 * x), DirichletConst(2.0, 1))
    assert np.allclose(0.5 * (f.data[0, 1:-1] + f.data[1, 1:-1]), 2.0)


@settings(max_examples=30, deadline=None)
@given(nx=sizes, ny=sizes, seed=st.integers(0, 2**31 - 1))
def test_summation_by_parts(nx, ny, seed):
    # <grad f, F> = -<f, div F> when F has no normal flux through the walls
    rng = np.random.default_rng(seed)
    g = make_grid(nx, ny, 1.0, 1.3, "C")
    f = apply_bc(random_center(g, rng), NeumannZero())
    u1 = np.zeros(g.shape("xface"))
    u2 = np.zeros(g.shape("yface"))
    u1[1:-1, 1:-1] = rng.standard_normal((nx - 1, ny))
    u2[1:-1, 1:-1] = rng.standard_normal((nx, ny - 1))
    F = VectorField(g, u1, u2)
    lhs = inner(gradient(f), F)
    rhs = -inner(f, divergence(F))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(nx=sizes, ny=sizes, seed=st.integers(0, 2**31 - 1))
def test_perp_gradient_is_divergence_free(nx, ny, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(nx, ny, 1.0, 1.0)
    s = ScalarField(g, "corner", rng.standard_normal(g.shape("corner")))
    div = divergence(perp_gradient(s))
    assert np.max(np.abs(div.interior)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(nx=sizes, ny=sizes, seed=st.integers(0, 2**31 - 1))
def test_curl_of_gradient_vanishes_inside(nx, ny, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(nx, ny, 1.0, 1.0)
    f = apply_bc(random_center(g, rng), NeumannZero())
    w = curl2d(gradient(f))
    assert np.max(np.abs(w.data[1:-1, 1:-1])) < 1e-9


@settings(max_examples=20, deadline=None)
@given(c=values, nx=sizes, ny=sizes)
def test_center_to_corner_preserves_constants(c, nx, ny):
    g = make_grid(nx, ny, 1.0, 1.0)
    f = apply_bc(sample_scalar(g, lambda x, y: c), NeumannZero())
    assert np.allclose(center_to_corner(f).data, c)


@settings(max_examples=20, deadline=None)
@given(nx=sizes, ny=sizes, t=values,
       data=arrays(np.float64, 99, elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_snapshot_round_trip_is_bit_exact(nx, ny, t, data):
    g = make_grid(nx, ny, 1.0, 1.0)
    shape = g.shape("xface")
    arr = np.resize(data, shape)
    buf = io.BytesIO()
    write_snapshot(buf, g, "xface", arr, t)
    buf.seek(0)
    rnx, rny, loc, rt, out = read_snapshot(buf)
    assert (rnx, rny, loc, rt) == (nx, ny, "xface", t)
    assert out.tobytes() == arr.tobytes()


def test_truncated_snapshot_raises():
    g = make_grid(4, 4, 1.0, 1.0)
    buf = io.BytesIO()
    write_snapshot(buf, g, "center", np.zeros(g.shape("center")), 0.0)
    with pytest.raises(EOFError):
        read_snapshot(io.BytesIO(buf.getvalue()[:-8]))


def test_gradient_is_second_order():
    errs = []
    for n in (16, 32, 64):
        g = make_grid(n, n, 1.0, 1.0)
        f = apply_bc(sample_scalar(g, lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y)), NeumannZero())
        X, Y = g.coords("xface")
        exact = -np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)
        errs.append(np.max(np.abs((gradient(f).u1 - exact)[:, 1:-1])))
    assert math.log2(errs[1] / errs[2]) > 1.9
