"""Acceptance criteria 1-12, one test each.

Every test prints its pass/fail line and the per-item details straight to
the terminal, so the verbose log doubles as the acceptance report.
"""

from machcombust import verify


def report(result, capsys):
    with capsys.disabled():
        print()
        print(result.line())
        for line in result.details:
            print("    " + line)
    assert result.passed, "\n".join(result.details)


def test_criterion_01_stencil_orders(capsys):
    report(verify.check_operators(), capsys)


def test_criterion_02_elliptic_solvers(capsys):
    report(verify.check_elliptic(), capsys)


def test_criterion_03_maximum_principle(capsys):
    report(verify.check_maximum_principle(), capsys)


def test_criterion_04_conservation_and_decay(capsys):
    report(verify.check_conservation(), capsys)


def test_criterion_05_constraint_residuals(capsys):
    report(verify.check_constraints(), capsys)


def test_criterion_06_constant_density_reduction(capsys):
    report(verify.check_constant_density(), capsys)


def test_criterion_07_initialization_round_trip(capsys):
    report(verify.check_round_trip(), capsys)


def test_criterion_08_manufactured_convergence(capsys, tmp_path):
    csv_path = tmp_path / "rates.csv"
    report(verify.check_mms(str(csv_path)), capsys)
    assert csv_path.read_text().startswith("case,kind,n,dt")


def test_criterion_09_picard_contraction(capsys):
    report(verify.check_contraction(), capsys)


def test_criterion_10_gronwall_ledger(capsys):
    report(verify.check_ledger(), capsys)


def test_criterion_11_serrin_monitor(capsys):
    report(verify.check_serrin(), capsys)


def test_criterion_12_determinism_and_checkpointing(capsys):
    report(verify.check_determinism(), capsys)

