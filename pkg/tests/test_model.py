import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from machcombust.elliptic import IncompatibleDataError
from machcombust.grid import ScalarField, apply_bc, make_grid, mean, perp_gradient, sample_scalar, sample_vector, zeros_vector
from machcombust.initial import InitialSpec, build_initial
from machcombust.model import (
    ModelError,
    ModelParams,
    MuLaw,
    StepControls,
    advance,
    compute_v,
    density_bc,
    init_from_velocity,
    make_state,
    mass_step_linearized,
    picard_step,
    residual_divergence_constraint,
)


def params_for(regime, **kw):
    kw.setdefault("mu_law", MuLaw("affine", 0.5, 0.2))
    return ModelParams(c0=0.1, friction=0.5 if regime == "A" else 0.0, **kw)


def test_parameter_validation():
    with pytest.raises(ModelError):
        MuLaw("quadratic")
    with pytest.raises(ModelError, match="alpha"):
        ModelParams(c0=0.1, alpha=2.0, beta=1.0)
    with pytest.raises(ModelError, match="positive"):
        ModelParams(c0=0.1, mu_law=MuLaw("affine", 0.1, -1.0))
    with pytest.raises(ModelError):
        ModelParams(c0=0.0)
    with pytest.raises(ModelError):
        StepControls(dt=0.0)


def test_viscosity_laws():
    s = np.array([0.5, 1.0, 2.0])
    assert np.allclose(MuLaw("constant", 2.0)(s), 2.0)
    assert np.allclose(MuLaw("affine", 1.0, 0.5)(s), 1.0 + 0.5 * s)
    law = MuLaw("exp", 1.0, k=0.3)
    assert np.allclose(law.derivative(s), 0.3 * law(s))


@pytest.mark.parametrize("regime", ["A", "B", "C"])
def test_rest_state_is_steady(regime):
    g = make_grid(8, 8, 1.0, 1.0, regime)
    p = params_for(regime)
    state = build_initial(g, InitialSpec("rest"), p)
    new, report = picard_step(state, StepControls(dt=0.01), p)
    assert report.converged
    assert np.max(np.abs(new.u.u1)) < 1e-13 and np.max(np.abs(new.u.u2)) < 1e-13
    assert np.allclose(new.rho.interior, p.rho_tilde, atol=1e-13)
    assert new.t == pytest.approx(0.01) and new.step == 1


def swirl_advector(g, rng):
    s = np.zeros(g.shape("corner"))
    s[1:-1, 1:-1] = rng.standard_normal((g.nx - 1, g.ny - 1))
    return perp_gradient(ScalarField(g, "corner", s))


@settings(max_examples=20, deadline=None)
@given(regime=st.sampled_from("ABC"), seed=st.integers(0, 2**31 - 1), dt=st.floats(1e-4, 1.0))
def test_mass_step_maximum_principle(regime, seed, dt):
    rng = np.random.default_rng(seed)
    g = make_grid(8, 8, 1.0, 1.0, regime)
    p = params_for(regime)
    lo, hi = 0.6, 1.8
    rho = ScalarField(g, "center", np.zeros(g.shape("center"))).with_interior(rng.uniform(lo, hi, (8, 8)))
    rho = apply_bc(rho, density_bc(g, p))
    new = mass_step_linearized(rho, swirl_advector(g, rng), rho, dt, p)
    floor = min(lo, p.rho_tilde) if regime == "B" else lo
    ceil = max(hi, p.rho_tilde) if regime == "B" else hi
    assert np.min(new.interior) >= floor - 1e-12
    assert np.max(new.interior) <= ceil + 1e-12
    if regime != "B":
        assert mean(new) == pytest.approx(mean(rho), rel=1e-13)


@pytest.mark.parametrize("regime", ["A", "B", "C"])
def test_picard_step_keeps_the_constraint(regime):
    g = make_grid(12, 12, 1.0, 1.0, regime)
    p = params_for(regime)
    state = build_initial(g, InitialSpec("bump", amplitude=0.1, swirl=0.02), p)
    new, report = picard_step(state, StepControls(dt=2e-3), p)
    assert report.converged
    assert residual_divergence_constraint(new, p) < 1e-10
    if regime != "B":
        assert mean(new.rho) == pytest.approx(mean(state.rho), rel=1e-13)


def test_constant_density_velocity_equals_v():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    p = params_for("C")
    s = sample_scalar(g, lambda x, y: np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) ** 2, "corner")
    rho = sample_scalar(g, lambda x, y: 1.0)
    state = make_state(rho, perp_gradient(s), p)
    v = compute_v(state, p)
    assert np.allclose(v.u1, state.u.u1) and np.allclose(v.u2, state.u.u2)


def test_init_from_velocity_at_rest_gives_the_level():
    g = make_grid(8, 8, 1.0, 1.0, "A")
    p = params_for("A")
    state = init_from_velocity(zeros_vector(g), p, 1.3)
    assert np.allclose(state.rho.interior, 1.3)


def test_init_from_velocity_rejects_wall_flux():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    u0 = sample_vector(g, lambda x, y: (1.0 + 0 * x, 0 * y))
    with pytest.raises(IncompatibleDataError):
        init_from_velocity(u0, params_for("C"), 1.0)


def test_advance_needs_a_later_end_time():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    p = params_for("C")
    state = build_initial(g, InitialSpec("rest"), p)
    with pytest.raises(ModelError):
        advance(state, 0.0, StepControls(dt=0.1), p)


def test_advance_reaches_t_end_and_logs_every_step():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    p = params_for("C")
    state = build_initial(g, InitialSpec("bump", amplitude=0.1), p)
    records = []
    final = advance(state, 0.05, StepControls(dt=0.01), p, records.append)
    assert final.t == pytest.approx(0.05)
    assert final.step == 5 and len(records) == 5
