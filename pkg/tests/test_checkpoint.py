import numpy as np
import pytest

from machcombust.checkpoint import CheckpointError, checkpoint_restore, checkpoint_save
from machcombust.diagnostics import SerrinMonitor
from machcombust.grid import make_grid
from machcombust.initial import InitialSpec, build_initial
from machcombust.model import ModelParams, MuLaw, StepControls, picard_step


@pytest.fixture(params=["A", "B", "C"])
def stepped(request):
    regime = request.param
    g = make_grid(8, 8, 1.0, 1.0, regime)
    p = ModelParams(c0=0.1, mu_law=MuLaw("affine", 0.5, 0.2), friction=0.5 if regime == "A" else 0.0)
    state = build_initial(g, InitialSpec("bump", amplitude=0.1, swirl=0.02), p)
    monitor = SerrinMonitor()
    controls = StepControls(dt=0.003)
    for _ in range(2):
        state, _ = picard_step(state, controls, p)
        monitor.accumulate(state, p, controls.dt)
    return state, monitor, p, controls


def same_state(a, b):
    return (a.t == b.t and a.step == b.step and np.array_equal(a.rho.data, b.rho.data)
            and np.array_equal(a.u.u1, b.u.u1) and np.array_equal(a.u.u2, b.u.u2)
            and np.array_equal(a.pi.data, b.pi.data))


def test_round_trip_then_step_is_bit_exact(stepped, tmp_path):
    state, monitor, p, controls = stepped
    path = tmp_path / "s.ckpt"
    checkpoint_save(state, monitor, path, config_hash="abc", config_text="x = 1\n")
    ck = checkpoint_restore(path, p, expect_hash="abc")
    assert same_state(ck.state, state)
    assert ck.monitor.to_dict() == monitor.to_dict()
    assert ck.config_text == "x = 1\n"
    a, _ = picard_step(state, controls, p)
    b, _ = picard_step(ck.state, controls, p)
    assert same_state(a, b)


def test_initial_state_is_reproduced(tmp_path):
    g = make_grid(8, 8, 1.0, 1.0, "C")
    p = ModelParams(c0=0.1)
    state = build_initial(g, InitialSpec("bump", amplitude=0.2), p)
    checkpoint_save(state, SerrinMonitor(), tmp_path / "0.ckpt")
    assert same_state(checkpoint_restore(tmp_path / "0.ckpt", p).state, state)


def test_hash_mismatch_is_refused(stepped, tmp_path):
    state, monitor, *_ = stepped
    checkpoint_save(state, monitor, tmp_path / "s.ckpt", config_hash="abc")
    with pytest.raises(CheckpointError, match="hash"):
        checkpoint_restore(tmp_path / "s.ckpt", expect_hash="def")


def test_corrupt_files(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        checkpoint_restore(bad)
    g = make_grid(4, 4, 1.0, 1.0, "C")
    state = build_initial(g, InitialSpec("rest"), ModelParams(c0=0.1))
    good = tmp_path / "good.ckpt"
    checkpoint_save(state, SerrinMonitor(), good)
    cut = tmp_path / "cut.ckpt"
    cut.write_bytes(good.read_bytes()[:-16])
    with pytest.raises(CheckpointError):
        checkpoint_restore(cut)
