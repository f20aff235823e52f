import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from machcombust.diagnostics import (
    DiagnosticsRecord,
    ExponentError,
    SerrinAccumulator,
    SerrinMonitor,
    blowup_monitor,
    energy_record,
    estimate_ledger,
    serrin_accumulate,
    validate_exponents,
)
from machcombust.grid import make_grid
from machcombust.initial import InitialSpec, build_initial
from machcombust.model import ModelParams, MuLaw, StepControls, advance

exponent = st.one_of(st.floats(min_value=1.0, max_value=100.0), st.just(math.inf))


@given(r=exponent, s=exponent)
def test_exponent_validation_matches_the_inequality(r, s):
    admissible = r > 2 and 2.0 / s + 2.0 / r <= 1.0
    if admissible:
        validate_exponents(r, s)
    else:
        with pytest.raises(ExponentError):
            validate_exponents(r, s)


@pytest.mark.parametrize("pair", [(4, 4), (math.inf, 2), (3, 6)])
def test_admissible_pairs(pair):
    validate_exponents(*pair)


@pytest.mark.parametrize("pair", [(2, math.inf), (1.5, 10), (3, 4)])
def test_inadmissible_pairs(pair):
    with pytest.raises(ExponentError):
        validate_exponents(*pair)


def test_unknown_target_rejected():
    with pytest.raises(ExponentError):
        SerrinAccumulator(4, 4, "pressure")


@pytest.fixture(scope="module")
def bump_run():
    g = make_grid(12, 12, 1.0, 1.0, "C")
    params = ModelParams(c0=0.1, mu_law=MuLaw("affine", 0.5, 0.2))
    state = build_initial(g, InitialSpec("bump", amplitude=0.1, swirl=0.02), params)
    records = [energy_record(state, None, 0.0, params)]
    final = advance(state, 0.02, StepControls(dt=2e-3), params, records.append)
    return state, final, records, params, advance.last_monitor


def test_frozen_state_accumulates_linearly(bump_run):
    state, _, _, params, _ = bump_run
    acc = SerrinAccumulator(4, 4, "velocity")
    totals = []
    for _ in range(4):
        acc = serrin_accumulate(acc, state, 0.1, params)
        totals.append(acc.total)
    steps = np.diff([0.0] + totals)
    assert np.allclose(steps, steps[0], rtol=1e-14)


def test_sup_norm_in_time_takes_the_maximum(bump_run):
    state, _, _, params, _ = bump_run
    acc = serrin_accumulate(SerrinAccumulator(4, math.inf, "grad_rho"), state, 0.1, params)
    again = serrin_accumulate(acc, state, 0.1, params)
    assert again.total == acc.total == acc.value


def test_monitor_trips_at_threshold():
    acc = SerrinAccumulator(4, 4, "v", total=16.0)
    assert blowup_monitor(acc, 2.0).tripped
    assert not blowup_monitor(acc, 2.5).tripped


def test_monitor_round_trips_through_dict(bump_run):
    monitor = bump_run[4]
    clone = SerrinMonitor.from_dict(monitor.to_dict())
    assert clone.to_dict() == monitor.to_dict()


def test_records_follow_the_column_schema(bump_run):
    records = bump_run[2]
    cols = DiagnosticsRecord.columns()
    assert cols[:3] == ["t", "step", "dt"]
    assert len(records[-1].row()) == len(cols)
    assert [r.step for r in records] == list(range(len(records)))


def test_records_track_density_bounds(bump_run):
    state, final, records, _, _ = bump_run
    assert records[0].min_rho == pytest.approx(float(np.min(state.rho.interior)))
    assert all(r.min_rho >= records[0].min_rho - 1e-12 for r in records)
    assert records[-1].mean_rho == pytest.approx(records[0].mean_rho, rel=1e-12)


def test_ledger_on_a_smooth_run_has_no_violations(bump_run):
    _, _, records, params, _ = bump_run
    report = estimate_ledger(records, params)
    assert report.violations == []
    assert set(report.inequalities) == {"grad_rho", "kinetic", "higher"}


def test_ledger_flags_a_jump():
    g = make_grid(8, 8, 1.0, 1.0, "C")
    params = ModelParams(c0=0.1)
    state = build_initial(g, InitialSpec("bump", amplitude=0.1), params)
    rec = energy_record(state, None, 0.0, params)
    jumped = dataclasses.replace(rec, t=0.01, step=1, grad_rho_l2=10 * rec.grad_rho_l2)
    report = estimate_ledger([rec, jumped], params, C_max=1.0)
    assert report.violations
