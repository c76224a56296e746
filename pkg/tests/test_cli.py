import json

import pytest
from typer.testing import CliRunner

from hirotalax.main import CSV_FIELDS, app

runner = CliRunner()

OPEN1 = ["-N", "1", "--topology", "open", "--alpha", "0.7", "--beta", "1.3", "--xi", "0.5"]


@pytest.mark.integration
def test_verify_passes_with_exit_code_zero():
    result = runner.invoke(app, ["verify", "hirota", "-N", "2", "--kmax", "2", "--samples", "10"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["schema"] == 1
    assert payload["summary"]["failed"] == 0
    assert payload["config"]["command"] == "verify"


@pytest.mark.integration
def test_negative_control_exits_one():
    result = runner.invoke(app, ["verify", "tq", *OPEN1, "--kmax", "1", "--delta-scale", "1.5"])
    assert result.exit_code == 1
    payload = json.loads(result.stdout)
    assert payload["summary"]["failed"] > 0
    assert payload["records"][0]["passed"] is False


@pytest.mark.integration
@pytest.mark.parametrize(
    "args",
    [
        ["verify", "hirota", "-N", "2", "--topology", "open", "--alpha", "0"],
        ["verify", "hirota", "-N", "2", "--samples", "0"],
        ["verify", "hirota", "-N", "9"],
        ["spectrum", "-N", "2", "--kmax", "7"],
    ],
)
def test_configuration_errors_exit_two(args):
    result = runner.invoke(app, args)
    assert result.exit_code == 2


@pytest.mark.integration
def test_unknown_suite_is_rejected():
    result = runner.invoke(app, ["verify", "everything", "-N", "2"])
    assert result.exit_code == 2


@pytest.mark.integration
def test_output_is_deterministic():
    args = ["verify", "identities", "-N", "2", "--kmax", "2", "--model", "exact", "--seed", "11"]
    first = runner.invoke(app, args)
    second = runner.invoke(app, args)
    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout


@pytest.mark.integration
def test_csv_format():
    result = runner.invoke(app, ["verify", "hirota", "-N", "2", "--kmax", "1", "--format", "csv"])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert len(lines) > 1


@pytest.mark.integration
def test_text_format_for_spectrum():
    result = runner.invoke(app, ["spectrum", "-N", "2", "--kmax", "1", "--format", "text"])
    assert result.exit_code == 0
    assert result.stdout.startswith("spectrum: periodic N=2")
    assert "state s0 E=-2.0000000000 degeneracy=1" in result.stdout
    assert result.stdout.rstrip().endswith("0 failed")


@pytest.mark.integration
def test_solve_q_writes_report_file(tmp_path):
    out = tmp_path / "q.json"
    result = runner.invoke(app, ["solve-q", *OPEN1, "--out", str(out)])
    assert result.exit_code == 0
    assert result.stdout == ""
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["config"]["command"] == "solve-q"
    assert all(len(state["Q"]["roots"]) == 2 for state in payload["states"])
