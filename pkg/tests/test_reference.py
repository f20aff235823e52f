import numpy as np

from machcombust.reference import ReferenceStepper
from machcombust.verify import check_constant_density


def test_reference_keeps_rest():
    ref = ReferenceStepper(6, 6, 1.0, 1.0, 0.1, 0.01)
    u1, u2, p, its = ref.step(np.zeros((5, 6)), np.zeros((6, 5)))
    assert not u1.any() and not u2.any() and its == 1


def test_reference_output_is_discretely_solenoidal():
    n = 8
    rng = np.random.default_rng(0)
    ref = ReferenceStepper(n, n, 1.0, 1.0, 0.1, 0.01)
    u1, u2, _, _ = ref.step(0.1 * rng.standard_normal((n - 1, n)), 0.1 * rng.standard_normal((n, n - 1)))
    U1 = np.zeros((n + 1, n))
    U2 = np.zeros((n, n + 1))
    U1[1:-1], U2[:, 1:-1] = u1, u2
    div = (U1[1:] - U1[:-1]) * n + (U2[:, 1:] - U2[:, :-1]) * n
    assert np.max(np.abs(div)) < 1e-10


def test_main_stepper_matches_reference_at_unit_density():
    result = check_constant_density(n=8, steps=5)
    assert result.passed, result.details
