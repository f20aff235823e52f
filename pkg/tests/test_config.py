import math

import pytest

from machcombust.config import ConfigError, load_config, parse_config

MINIMAL = """\
grid.nx = 16
grid.regime = C
model.c0 = 0.1
model.mu_law = constant
model.mu0 = 1.0
time.t_end = 0.1
time.dt = 0.01
"""


def problems_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.problems


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.grid.nx == cfg.grid.ny == 16
    assert cfg.params.alpha == 0.5 and cfg.params.beta == 2.0
    assert cfg.controls.pic_tol == 1e-9 and cfg.controls.pic_max == 50
    assert cfg.serrin_r == cfg.serrin_s == 4.0
    assert cfg.csv_path == "diagnostics.csv"
    assert cfg.initial.kind == "rest"


def test_comments_and_order_do_not_change_the_hash():
    shuffled = "# a comment\n" + "\n".join(reversed(MINIMAL.splitlines())) + "  # trailing\n"
    assert parse_config(shuffled).hash() == parse_config(MINIMAL).hash()
    assert parse_config(MINIMAL + "time.pic_max = 7\n").hash() != parse_config(MINIMAL).hash()


def test_alpha_above_beta_names_both_keys():
    probs = problems_of(MINIMAL + "model.alpha = 3\nmodel.beta = 2\n")
    assert any("model.alpha" in p and "model.beta" in p for p in probs)


def test_serrin_pair_outside_the_admissible_range():
    probs = problems_of(MINIMAL + "serrin.r = 2\n")
    assert any(p.startswith("serrin.r, serrin.s") for p in probs)


def test_serrin_accepts_infinity():
    cfg = parse_config(MINIMAL + "serrin.r = inf\nserrin.s = 2\n")
    assert math.isinf(cfg.serrin_r)


def test_unknown_and_missing_keys_are_all_reported():
    text = MINIMAL.replace("model.c0 = 0.1\n", "") + "grid.nz = 4\nmodel.color = red\n"
    probs = problems_of(text)
    assert any("grid.nz" in p for p in probs)
    assert any("model.color" in p for p in probs)
    assert any("model.c0" in p and "missing" in p for p in probs)


@pytest.mark.parametrize("extra, needle", [
    ("grid.regime = D\n", "duplicate"),
    ("model.friction = constant\nmodel.friction_b0 = 1\n", "regime A"),
    ("model.alpha = nan\n", "NaN"),
    ("output.snapshot_every = -1\n", "snapshot_every"),
])
def test_individual_violations(extra, needle):
    assert any(needle in p for p in problems_of(MINIMAL + extra))


def test_malformed_value_and_line():
    probs = problems_of(MINIMAL.replace("grid.nx = 16", "grid.nx = sixteen") + "just words\n")
    assert any("grid.nx" in p for p in probs)
    assert any("expected 'section.key = value'" in p for p in probs)


def test_affine_law_needs_mu1():
    probs = problems_of(MINIMAL.replace("model.mu_law = constant", "model.mu_law = affine"))
    assert any("model.mu1" in p for p in probs)


def test_undersized_grid():
    probs = problems_of(MINIMAL.replace("grid.nx = 16", "grid.nx = 3"))
    assert any("grid.nx" in p for p in probs)


def test_load_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL)
    assert load_config(path).hash() == parse_config(MINIMAL).hash()
