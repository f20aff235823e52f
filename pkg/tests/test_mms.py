import math

import numpy as np
import pytest
import sympy as sp

from machcombust.grid import lp_norm
from machcombust.mms import (
    CATALOG,
    StudyError,
    convergence_study,
    discrete_residuals,
    fit_order,
    manufactured_case,
    temporal_study,
)
from machcombust.verify import stokes_mms_fields

x, y, t = sp.symbols("x y t", real=True)
C0 = sp.Rational(1, 10)


def symbolic_fields(case_id):
    """Independent closed forms: (rho, (u1, u2), pi, mu(rho))."""
    if case_id == "const_density_taylor_green":
        A = sp.exp(-t)
        u = (A * sp.sin(sp.pi * x) * sp.cos(sp.pi * y), -A * sp.cos(sp.pi * x) * sp.sin(sp.pi * y))
        pi = A**2 / 4 * (sp.cos(2 * sp.pi * x) + sp.cos(2 * sp.pi * y))
        return sp.Integer(1), u, pi, lambda r: sp.Rational(1, 10)
    trig = sp.cos if case_id == "diffusing_bump_neumann" else sp.sin
    rho = 1 + sp.Rational(1, 5) * sp.exp(-t) * trig(sp.pi * x) * trig(sp.pi * y)
    psi = 1 / rho
    u = (C0 * sp.diff(psi, x), C0 * sp.diff(psi, y))
    pi = sp.Rational(1, 20) * sp.exp(-t) * sp.cos(2 * sp.pi * x) * sp.cos(2 * sp.pi * y)
    return rho, u, pi, lambda r: sp.Rational(1, 2) + sp.Rational(1, 4) * r


def symbolic_sources(case_id):
    rho, u, pi, mu_of = symbolic_fields(case_id)
    mu = mu_of(rho)
    X = (x, y)
    mass = sp.diff(rho, t) + sum(sp.diff(rho * u[i], X[i]) for i in range(2))
    D = [[(sp.diff(u[i], X[j]) + sp.diff(u[j], X[i])) / 2 for j in range(2)] for i in range(2)]
    mom = []
    for i in range(2):
        inertia = rho * (sp.diff(u[i], t) + sum(u[j] * sp.diff(u[i], X[j]) for j in range(2)))
        visc = sum(sp.diff(2 * mu * D[i][j], X[j]) for j in range(2))
        mom.append(inertia - visc + sp.diff(pi, X[i]))
    constraint = sum(sp.diff(u[i], X[i]) for i in range(2)) - C0 * sum(sp.diff(1 / rho, v, 2) for v in X)
    return rho, u, pi, mass, mom, constraint


def sample_points(seed=0, m=25):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, m), rng.uniform(0, 1, m), rng.uniform(0, 1, m)


@pytest.mark.parametrize("case_id", CATALOG)
def test_sources_match_a_symbolic_derivation(case_id):
    case = manufactured_case(case_id)
    rho, u, pi, mass, mom, constraint = symbolic_sources(case_id)
    args = (x, y, t)
    f = {name: sp.lambdify(args, expr, "numpy") for name, expr in
         [("rho", rho), ("u1", u[0]), ("u2", u[1]), ("pi", pi), ("mass", mass), ("m1", mom[0]), ("m2", mom[1]),
          ("con", constraint)]}
    for px, py, pt in zip(*sample_points()):
        assert case.rho(px, py, pt) == pytest.approx(f["rho"](px, py, pt), abs=1e-12)
        assert case.u(px, py, pt) == pytest.approx((f["u1"](px, py, pt), f["u2"](px, py, pt)), abs=1e-12)
        assert case.pi(px, py, pt) == pytest.approx(f["pi"](px, py, pt), abs=1e-12)
        assert case.f_mass(px, py, pt) == pytest.approx(f["mass"](px, py, pt), abs=1e-10)
        assert case.f_mom(px, py, pt) == pytest.approx((f["m1"](px, py, pt), f["m2"](px, py, pt)), abs=1e-10)
        assert abs(f["con"](px, py, pt)) < 1e-10


@pytest.mark.parametrize("case_id", CATALOG)
def test_wall_conditions_hold(case_id):
    case = manufactured_case(case_id)
    s = np.linspace(0, 1, 11)
    for tt in (0.0, 0.5):
        if case.regime == "B":
            # the density is pinned; the normal velocity carries c0 d_n(1/rho)
            assert np.allclose(case.rho(0.0 * s, s, tt), case.params.rho_tilde)
            assert np.allclose(case.rho(s, 1.0 + 0 * s, tt), case.params.rho_tilde)
        else:
            assert np.allclose(case.u(0.0 * s, s, tt)[0], 0, atol=1e-14)
            assert np.allclose(case.u(1.0 + 0 * s, s, tt)[0], 0, atol=1e-14)
            assert np.allclose(case.u(s, 0.0 * s, tt)[1], 0, atol=1e-14)


def test_stokes_force_matches_symbolic():
    u_f, p_f, mu_f, force = stokes_mms_fields()
    s2 = sp.sin(sp.pi * x) ** 2 * sp.sin(sp.pi * y) ** 2
    u = (sp.diff(s2, y), -sp.diff(s2, x))
    p = sp.cos(2 * sp.pi * x) * sp.cos(2 * sp.pi * y)
    mu = 2 + sp.sin(2 * sp.pi * x)
    X = (x, y)
    D = [[(sp.diff(u[i], X[j]) + sp.diff(u[j], X[i])) / 2 for j in range(2)] for i in range(2)]
    F = [sp.lambdify((x, y), -sum(sp.diff(2 * mu * D[i][j], X[j]) for j in range(2)) + sp.diff(p, X[i]))
         for i in range(2)]
    U = [sp.lambdify((x, y), c) for c in u]
    px, py, _ = sample_points(1)
    got = force(px, py)
    assert np.allclose(got[0], F[0](px, py), atol=1e-10) and np.allclose(got[1], F[1](px, py), atol=1e-10)
    assert np.allclose(u_f(px, py)[0], U[0](px, py)) and np.allclose(u_f(px, py)[1], U[1](px, py))


@pytest.mark.parametrize("case_id", CATALOG)
def test_discrete_residuals_shrink_at_second_order(case_id):
    case = manufactured_case(case_id)
    errs = []
    for n in (16, 32):
        mass, mom = discrete_residuals(case, case.grid(n), 0.3)
        errs.append(lp_norm(mass, 2) + lp_norm(mom, 2))
    assert errs[1] < errs[0] / 3.0 or errs[1] < 1e-12


def test_fit_order_recovers_a_power_law():
    hs = [0.1, 0.05, 0.025]
    order, resid = fit_order(hs, [3.0 * h**2 for h in hs])
    assert order == pytest.approx(2.0) and resid < 1e-12


def test_unknown_case():
    with pytest.raises(StudyError):
        manufactured_case("nope")


def test_short_convergence_study():
    table = convergence_study(manufactured_case("diffusing_bump_neumann"), [8, 16, 32], t_end=0.02, dt_coarse=0.01)
    lines = table.to_csv().strip().splitlines()
    assert lines[0] == "case,kind,n,dt,err_rho,err_u,err_pi"
    assert len(lines) == 1 + 3 + 3
    assert table.orders["u"] > 1.5


def test_convergence_study_needs_three_grids():
    with pytest.raises(StudyError):
        convergence_study(manufactured_case("diffusing_bump_neumann"), [8, 16])


def test_successive_temporal_reference_needs_four_steps():
    case = manufactured_case("diffusing_bump_neumann")
    with pytest.raises(StudyError):
        temporal_study(case, 8, [0.02, 0.01, 0.005], 0.04, reference="successive")
