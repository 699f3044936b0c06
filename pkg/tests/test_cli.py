import json

import pytest

from blockmedc.cli import main

from conftest import scenario_path


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    export, cas = d / "ledger.jsonl", d / "cas"
    assert main(["run", str(scenario_path("lifecycle.jsonl")), "--export", str(export), "--cas-dir", str(cas)]) == 0
    return export, cas


def test_run_summary(exported, capsys, tmp_path):
    assert main(["run", str(scenario_path("governance.jsonl")), "--export", str(tmp_path / "g.jsonl")]) == 0
    assert "0 expectation failures" in capsys.readouterr().out


def test_expectation_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"op": "deploy", "sender": "a", "args": {"kind": "Authority"}, "expect": {"eventCount": 9}}\n')
    assert main(["run", str(p)]) == 1
    assert "FAIL line 1" in capsys.readouterr().err


def test_parse_and_path_errors(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text("{oops\n")
    assert main(["run", str(p)]) == 2
    assert main(["run", str(tmp_path / "absent.jsonl")]) == 2
    assert main(["inspect", "events", "--export", str(tmp_path / "absent.jsonl")]) == 2
    assert main(["run", str(scenario_path("lifecycle.jsonl")), "--seed", "zz"]) == 2


def test_seed_env_overrides_flag(tmp_path, monkeypatch):
    scen = str(scenario_path("lifecycle.jsonl"))
    a, b, c = (tmp_path / n for n in ("a.jsonl", "b.jsonl", "c.jsonl"))
    assert main(["run", scen, "--seed", "01", "--export", str(a)]) == 0
    monkeypatch.setenv("BLOCKMEDC_SEED", "01")
    assert main(["run", scen, "--seed", "02", "--export", str(b)]) == 0
    monkeypatch.delenv("BLOCKMEDC_SEED")
    assert main(["run", scen, "--export", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


def test_inspect_events(exported, capsys):
    export, _ = exported
    assert main(["inspect", "events", "--export", str(export), "--name", "Certified"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 1 and "Certified" in rows[0]


def test_inspect_gas_report(exported, capsys):
    export, _ = exported
    assert main(["inspect", "gas-report", "--export", str(export)]) == 0
    out = capsys.readouterr().out
    for row in ("transcript", "diploma", "other certificate", "document storage"):
        assert row in out


def test_inspect_portfolio_and_certificate(exported, capsys):
    export, cas = exported
    assert main(["inspect", "portfolio", "--export", str(export), "--cas-dir", str(cas), "--subject", "student1", "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert len(summary["items"]) == 5
    assert all(i["result"]["verdict"] == "Valid" for i in summary["items"])
    inst = summary["items"][0]["instance"]
    assert main(["inspect", "certificate", "--export", str(export), "--cas-dir", str(cas), "--instance", inst]) == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["instance"] == inst and cert["verification"]["verdict"] == "Valid"
    assert main(["inspect", "portfolio", "--export", str(export), "--subject", "nobody"]) == 1
