import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from ukzb import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_group_list(runner):
    res = runner.invoke(cli.main, ["--list"])
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert len(lines) == len(cli.REGISTRY)
    assert any("(experimental)" in l for l in lines)


def test_suite_list(runner):
    res = runner.invoke(cli.main, ["associator", "--list"])
    assert res.exit_code == 0
    assert all(l.startswith("associator") for l in res.output.strip().splitlines())


def test_check_ids_unique():
    ids = [c.id for c in cli.REGISTRY]
    assert len(ids) == len(set(ids))
    assert {c.suite for c in cli.REGISTRY} == set(cli.SUITES)


def test_suite_passes_and_writes_json(runner, tmp_path):
    out = tmp_path / "r.json"
    res = runner.invoke(cli.main, ["verify-theta", "--json", str(out)])
    assert res.exit_code == 0, res.output
    rep = json.loads(out.read_text())
    assert rep["schema"] == cli.SCHEMA
    assert rep["summary"]["failed"] == []
    for r in rep["records"]:
        assert set(r) >= {"id", "anchor", "residual", "tolerance", "pass"}
        assert r["pass"] is True


def test_zero_tolerance_fails(runner):
    res = runner.invoke(cli.main, ["verify-theta", "--tol", "0"])
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_negative_tolerance_rejected(runner):
    res = runner.invoke(cli.main, ["verify-theta", "--tol", "-1"])
    assert res.exit_code == 2


def test_unknown_command(runner):
    res = runner.invoke(cli.main, ["verify-nothing"])
    assert res.exit_code == 2


def test_deterministic_output(runner, tmp_path):
    reps = []
    for k in range(2):
        out = tmp_path / ("r%d.json" % k)
        assert runner.invoke(cli.main, ["verify-realization", "--seed", "3", "--json", str(out)]).exit_code == 0
        rep = json.loads(out.read_text())
        rep.pop("wall_time")
        reps.append(rep)
    assert reps[0] == reps[1]


def test_crashing_check_is_a_failed_record():
    c = cli.Check("associator", "x.crash", "raises", 1.0, lambda cfg: 1 / 0)
    r = cli.run_check(c, cli.RunConfig("associator"))
    assert not r.passed and "ZeroDivisionError" in r.error
    assert r.as_dict()["residual"] == "inf"


def test_experimental_failures_do_not_set_exit_code(monkeypatch):
    bad = cli.Check("daha-check", "x.exp", "always fails", 1e-3, lambda cfg: 1.0, experimental=True)
    monkeypatch.setattr(cli, "REGISTRY", [bad])
    rep, records, code = cli.run(cli.RunConfig("daha-check"))
    assert code == 0
    assert rep["summary"]["warnings"] == ["x.exp"]


def test_all_quick_via_module_entry(tmp_path):
    out = tmp_path / "all.json"
    proc = subprocess.run([sys.executable, "-m", "ukzb", "all", "--quick", "--json", str(out)],
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stdout[-2000:] + proc.stderr[-2000:]
    rep = json.loads(out.read_text())
    assert len(rep["records"]) >= 40
    assert rep["summary"]["failed"] == []
