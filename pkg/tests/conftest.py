from __future__ import annotations

from importlib import resources

import pytest

from blockmedc.config import load_config
from blockmedc.crypto import generate_account, sign
from blockmedc.ledger import Ledger
from blockmedc.scenario import load_scenario, run_scenario

T0 = 1659815412
YEAR = 365 * 86400


def scenario_path(name: str):
    return resources.files("blockmedc.data").joinpath("scenarios", name)


class Campus:
    """A bootstrapped authority / university / institution with named actors."""

    def __init__(self, ledger: Ledger | None = None, expiry: int = T0 + 4 * YEAR):
        cfg = load_config()
        self.ledger = ledger or Ledger(cfg.gas, cfg.policy)
        self.keys = {}
        L = self.ledger
        self.authority, _ = L.deploy_contract(self.addr("mca"), "Authority", [], timestamp=T0 - 10)
        r = L.transact(self.addr("mca"), self.authority, "register_cert", self.addr("ump"), self.pk("ump"), expiry, timestamp=T0)
        assert r.ok, r.revert_reason
        self.uni, _ = L.deploy_contract(self.addr("ump"), "University", [self.authority])
        self.inst, _ = L.deploy_contract(self.addr("fpn"), "Institution", [self.uni])
        r = L.transact(self.addr("ump"), self.uni, "add_institution", self.inst, self.addr("fpn"), self.addr("vice"))
        assert r.ok, r.revert_reason

    def account(self, alias: str):
        if alias not in self.keys:
            self.keys[alias] = generate_account(alias.encode())
        return self.keys[alias]

    def addr(self, alias: str):
        return self.account(alias)[0]

    def pk(self, alias: str) -> bytes:
        return self.account(alias)[1].public_key

    def tx(self, alias: str, target, op: str, *args, **kwargs):
        return self.ledger.transact(self.addr(alias), target, op, *args, **kwargs)

    def ok(self, alias: str, target, op: str, *args, **kwargs):
        r = self.tx(alias, target, op, *args, **kwargs)
        assert r.ok, f"{op}: {r.revert_reason}"
        return r

    def sign_as(self, alias: str, instance, role: str):
        d = self.ledger.view(instance, "payload_digest")
        return self.tx(alias, instance, "sign_payload", role, self.pk(alias), sign(self.account(alias)[1], d))

    def professor(self, alias="prof1", **info):
        self.ok("fpn", self.inst, "register_member", "Professor", self.addr(alias), info)

    def student(self, alias="student1", modules=None, **info):
        info = dict(info, modules=modules or {})
        self.ok("fpn", self.inst, "register_member", "Student", self.addr(alias), info)

    def grades(self, student: str, semester: str, values, session="Normal", prof="prof1"):
        for i, v in enumerate(values):
            self.ok(prof, self.inst, "submit_grade", self.addr(student), f"M{semester[1]}{i + 1}", semester, session, v)

    def validated_semester(self, student: str, semester: str, values=("12.00",) * 4):
        self.grades(student, semester, values)
        self.ok("prof1", self.inst, "deliberate", semester, "Normal")

    def issue_transcript(self, student: str, semester: str, anchor=True):
        inst = self.ok("fpn", self.inst, "add_transcript", self.addr(student), semester).return_value
        assert self.sign_as("fpn", inst, "Dean").ok
        self.ok("fpn", inst, "emit_certificate")
        if anchor:
            d = self.ledger.view(inst, "payload_digest")
            self.ok("fpn", self.uni, "anchor_certificate", self.addr(student), "Student", inst, d)
        return inst

    def finish_dual(self, instance, subject: str, kind="Student"):
        assert self.sign_as("fpn", instance, "Dean").ok
        assert self.sign_as("ump", instance, "President").ok
        self.ok("ump", instance, "emit_certificate")
        d = self.ledger.view(instance, "payload_digest")
        self.ok("ump", self.uni, "anchor_certificate", self.addr(subject), kind, instance, d)
        return instance


def modules_for(*semesters, n=4):
    return {s: [f"M{s[1]}{i + 1}" for i in range(n)] for s in semesters}


@pytest.fixture
def config():
    return load_config()


@pytest.fixture
def campus():
    return Campus()


@pytest.fixture(scope="session")
def golden():
    """The shipped full-lifecycle scenario, run once per session."""
    commands = load_scenario(scenario_path("lifecycle.jsonl"))
    runner = run_scenario(commands, load_config())
    assert runner.failures == []
    return runner
