import csv

import pytest

from machcombust.cli import EXIT_BLOWUP, EXIT_FAIL, EXIT_OK, csv_header, main

BASE = """\
grid.nx = 8
grid.regime = {regime}
model.c0 = 0.1
model.mu_law = affine
model.mu0 = 0.5
model.mu1 = 0.2
time.t_end = 0.05
time.dt = 0.01
output.csv = {csv}
"""


def write_config(tmp_path, extra="", regime="C", csv_name="out.csv"):
    path = tmp_path / "run.cfg"
    path.write_text(BASE.format(regime=regime, csv=tmp_path / csv_name) + extra)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("regime", ["A", "B", "C"])
def test_rest_state_gives_constant_rows(tmp_path, regime):
    cfg = write_config(tmp_path, regime=regime)
    assert main(["run", str(cfg)]) == EXIT_OK
    rows = read_rows(tmp_path / "out.csv")
    assert [int(r["step"]) for r in rows] == list(range(6))
    assert {float(r["u_l2"]) for r in rows} == {0.0}
    assert {r["mean_rho"] for r in rows} == {rows[0]["mean_rho"]}


def test_header_matches_the_schema(tmp_path):
    cfg = write_config(tmp_path)
    main(["run", str(cfg)])
    assert (tmp_path / "out.csv").read_text().splitlines()[0] + "\n" == csv_header()


def test_missing_output_directory_fails(tmp_path, capsys):
    cfg = write_config(tmp_path, csv_name="nowhere/out.csv")
    assert main(["run", str(cfg)]) == EXIT_FAIL
    assert "does not exist" in capsys.readouterr().err


def test_invalid_config_fails_with_every_problem(tmp_path, capsys):
    cfg = write_config(tmp_path, "model.alpha = 3\nbogus.key = 1\n")
    assert main(["run", str(cfg)]) == EXIT_FAIL
    err = capsys.readouterr().err
    assert "model.alpha" in err and "bogus.key" in err


def test_blowup_threshold_trips(tmp_path):
    cfg = write_config(tmp_path, "initial.kind = bump\ninitial.amplitude = 0.2\ninitial.swirl = 0.5\n"
                                 "serrin.threshold = 1e-12\n")
    assert main(["run", str(cfg)]) == EXIT_BLOWUP
    rows = read_rows(tmp_path / "out.csv")
    assert rows[-1]["blowup_tripped"] == "1"


def test_snapshots_are_written(tmp_path):
    cfg = write_config(tmp_path, f"output.snapshot_every = 2\noutput.snapshot_dir = {tmp_path / 'snaps'}\n")
    assert main(["run", str(cfg)]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "snaps").iterdir())
    assert names == ["snap_000000.mcf", "snap_000002.mcf", "snap_000004.mcf"]


def test_resume_refuses_a_different_config(tmp_path, capsys):
    ckpt = tmp_path / "run.ckpt"
    cfg = write_config(tmp_path, f"output.checkpoint_every = 2\noutput.checkpoint_path = {ckpt}\n")
    assert main(["run", str(cfg)]) == EXIT_OK
    other = tmp_path / "other.cfg"
    other.write_text(cfg.read_text().replace("time.dt = 0.01", "time.dt = 0.005"))
    assert main(["resume", str(ckpt), "--config", str(other)]) == EXIT_FAIL
    assert "hash mismatch" in capsys.readouterr().err


def test_resume_with_the_same_config(tmp_path):
    ckpt = tmp_path / "run.ckpt"
    cfg = write_config(tmp_path, "initial.kind = bump\ninitial.amplitude = 0.1\n"
                                 f"output.checkpoint_every = 2\noutput.checkpoint_path = {ckpt}\n")
    assert main(["run", str(cfg)]) == EXIT_OK
    before = (tmp_path / "out.csv").read_text()
    # the last checkpoint is at step 4, so resuming redoes step 5 and must rewrite it identically
    assert main(["resume", str(ckpt), "--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "out.csv").read_text() == before


def test_unknown_suite_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "everything"])
    assert info.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_missing_verb_is_a_usage_error():
    with pytest.raises(SystemExit):
        main([])
