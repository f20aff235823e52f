import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from machcombust.grid import divergence, make_grid, mean
from machcombust.initial import InitialSpec, build_initial
from machcombust.model import ModelError, ModelParams, residual_divergence_constraint


@settings(max_examples=15, deadline=None)
@given(regime=st.sampled_from("ABC"), amp=st.floats(0.0, 0.4), swirl=st.floats(-0.1, 0.1),
       mx=st.integers(1, 3), my=st.integers(1, 3))
def test_bump_states_are_compatible(regime, amp, swirl, mx, my):
    g = make_grid(10, 10, 1.0, 1.0, regime)
    p = ModelParams(c0=0.1)
    state = build_initial(g, InitialSpec("bump", amplitude=amp, swirl=swirl, mode_x=mx, mode_y=my), p)
    assert residual_divergence_constraint(state, p) < 1e-9
    assert np.min(state.rho.interior) >= p.alpha and np.max(state.rho.interior) <= p.beta


def test_swirl_alone_is_solenoidal():
    g = make_grid(12, 12, 1.0, 1.0, "C")
    state = build_initial(g, InitialSpec("rest", swirl=0.3), ModelParams(c0=0.1))
    assert np.max(np.abs(divergence(state.u).interior)) < 1e-12
    assert np.max(np.abs(state.u.u1)) > 0.1


def test_cosine_bump_has_the_level_as_mean():
    g = make_grid(12, 12, 1.0, 1.0, "A")
    state = build_initial(g, InitialSpec("bump", level=1.2, amplitude=0.3), ModelParams(c0=0.1))
    assert mean(state.rho) == pytest.approx(1.2, abs=1e-14)


def test_zero_mode_gives_a_one_dimensional_bump():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    state = build_initial(g, InitialSpec("bump", amplitude=0.3, mode_y=0), ModelParams(c0=0.1))
    rho = state.rho.interior
    assert np.allclose(rho, rho[:, :1])


@pytest.mark.parametrize("spec, regime, needle", [
    (InitialSpec("bump", amplitude=1.0), "A", "amplitude"),
    (InitialSpec("rest", level=1.5), "B", "rho_tilde"),
    (InitialSpec("bump", amplitude=0.1, mode_x=0), "B", "positive mode"),
    (InitialSpec("vortex"), "C", "unknown kind"),
])
def test_inconsistent_specs_are_rejected(spec, regime, needle):
    p = ModelParams(c0=0.1)
    assert any(needle in msg for msg in spec.problems(regime, p))
    with pytest.raises(ModelError):
        build_initial(make_grid(8, 8, 1.0, 1.0, regime), spec, p)
