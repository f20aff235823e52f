import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from machcombust.elliptic import (
    IncompatibleDataError,
    SolverSettings,
    bogovskii,
    neumann_poisson_fft,
    solve_poisson,
    solve_stokes,
)
from machcombust.grid import (
    DirichletConst,
    NeumannZero,
    NoSlip,
    ScalarField,
    SlipFriction,
    apply_bc,
    divergence,
    laplacian,
    lp_norm,
    make_grid,
    sample_scalar,
    zeros_vector,
)

PI = np.pi


def zero_mean_center(g, rng):
    v = rng.standard_normal((g.nx, g.ny))
    return ScalarField(g, "center", np.zeros(g.shape("center"))).with_interior(v - v.mean())


@settings(max_examples=15, deadline=None)
@given(n=st.integers(4, 12), m=st.integers(4, 12), seed=st.integers(0, 2**31 - 1))
def test_neumann_poisson_inverts_the_laplacian(n, m, seed):
    g = make_grid(n, m, 1.0, 0.7)
    f = zero_mean_center(g, np.random.default_rng(seed))
    sol, report = solve_poisson(f, NeumannZero())
    assert report.converged
    assert abs(sol.interior.mean()) < 1e-12
    back = laplacian(sol, NeumannZero()).interior
    assert np.max(np.abs(back - f.interior)) < 1e-8 * max(1.0, np.max(np.abs(f.interior)))


def test_fft_and_cg_agree():
    g = make_grid(12, 10, 1.0, 1.0)
    f = zero_mean_center(g, np.random.default_rng(3))
    sol, _ = solve_poisson(f, NeumannZero(), SolverSettings(rel_tol=1e-13))
    fft = -neumann_poisson_fft(g, f.interior)
    assert np.max(np.abs(sol.interior - fft)) < 1e-9


def test_neumann_data_with_nonzero_mean_is_rejected():
    g = make_grid(8, 8, 1.0, 1.0)
    with pytest.raises(IncompatibleDataError):
        solve_poisson(sample_scalar(g, lambda x, y: 1.0), NeumannZero())


@pytest.mark.parametrize("order", [1, 2])
def test_dirichlet_constant_solution(order):
    # lap s = 0 with s = 2 on the walls has the exact discrete solution s = 2
    g = make_grid(8, 6, 1.0, 1.0, "B")
    zero = sample_scalar(g, lambda x, y: 0.0)
    sol, _ = solve_poisson(zero, DirichletConst(2.0, order))
    assert np.allclose(sol.interior, 2.0, atol=1e-10)


def test_dirichlet_poisson_converges_at_second_order():
    errs = []
    for n in (16, 32, 64):
        g = make_grid(n, n, 1.0, 1.0, "B")
        rhs = sample_scalar(g, lambda x, y: -2 * PI**2 * np.sin(PI * x) * np.sin(PI * y))
        sol, _ = solve_poisson(rhs, DirichletConst(0.0, 1))
        exact = sample_scalar(g, lambda x, y: np.sin(PI * x) * np.sin(PI * y))
        errs.append(lp_norm(sol - exact, 2))
    assert np.log2(errs[1] / errs[2]) > 1.9


@pytest.mark.parametrize("bc", [NoSlip(), SlipFriction(0.0), SlipFriction(2.0)])
def test_stokes_meets_divergence_target(bc):
    g = make_grid(12, 12, 1.0, 1.0, "A" if isinstance(bc, SlipFriction) else "C")
    rng = np.random.default_rng(7)
    target = zero_mean_center(g, rng)
    mu = sample_scalar(g, lambda x, y: 1.0 + 0.5 * x * y)
    u, p, report = solve_stokes(mu, zeros_vector(g), target, bc, mass=10.0)
    assert report.converged
    assert np.max(np.abs(divergence(u).interior - target.interior)) < 1e-9
    assert abs(p.interior.mean()) < 1e-12
    assert np.all(u.u1[[0, -1], :] == 0.0) and np.all(u.u2[:, [0, -1]] == 0.0)


def test_stokes_rejects_inconsistent_flux():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    one = sample_scalar(g, lambda x, y: 1.0)
    with pytest.raises(IncompatibleDataError):
        solve_stokes(one, zeros_vector(g), one, NoSlip())


@settings(max_examples=8, deadline=None)
@given(n=st.integers(4, 10), seed=st.integers(0, 2**31 - 1))
def test_bogovskii_solves_divergence_equation(n, seed):
    g = make_grid(n, n, 1.0, 1.0, "C")
    f = zero_mean_center(g, np.random.default_rng(seed))
    Q, _ = bogovskii(f)
    assert np.max(np.abs(divergence(Q).interior - f.interior)) < 1e-9
    Qb = apply_bc(Q, NoSlip())
    assert np.all(Qb.u1[[0, -1], :] == 0.0)
    # zero tangential trace: ghost = -interior
    assert np.allclose(Qb.u1[:, 0], -Qb.u1[:, 1])


def test_bogovskii_rejects_nonzero_mean():
    g = make_grid(6, 6, 1.0, 1.0, "C")
    with pytest.raises(IncompatibleDataError):
        bogovskii(sample_scalar(g, lambda x, y: 1.0))
