import hashlib
import re
import json

import pytest
from hypothesis import given, settings, strategies as st

from blockmedc.config import load_config
from blockmedc.contracts import KINDS
from blockmedc.crypto import Address, generate_account
from blockmedc.errors import (
    ArityMismatch,
    BadNonce,
    BadTimestamp,
    ContractDestroyed,
    UnknownContract,
    UnknownKind,
    UnknownOperation,
)
from blockmedc.gas import GasMeter, GasSchedule
from blockmedc.ledger import DEPLOY, Context, Contract, Ledger, Transaction, external, view

from conftest import Campus


class Scratch(Contract):
    """Minimal contract for exercising the ledger itself."""

    kind = "Scratch"
    code_words = 10

    def constructor(self, ctx: Context, label: str = "x") -> None:
        ctx.require(isinstance(label, str), "BadLabel")
        self.set("label", label)

    @external
    def write_n(self, ctx: Context, n: int) -> int:
        for i in range(n):
            self.set(("slot", i), i)
        ctx.emit("Wrote", n=n)
        return n

    @external
    def write_then_fail(self, ctx: Context, n: int) -> None:
        self.write_n(ctx, n)
        ctx.revert("Nope")

    @external
    def spawn(self, ctx: Context) -> Address:
        return ctx.create("Scratch", "child")

    @external
    def die(self, ctx: Context) -> None:
        ctx.destroy()

    @view
    def slot(self, ctx: Context, i: int):
        return self.get(("slot", i))


def scratch_ledger():
    cfg = load_config()
    return Ledger(cfg.gas, cfg.policy, registry=dict(KINDS, Scratch=Scratch))


ALICE = generate_account(b"alice")[0]


def test_deploy_address_oracle():
    L = scratch_ledger()
    for n in range(3):
        addr, receipt = L.deploy_contract(ALICE, "Scratch", [])
        expected = hashlib.sha256(ALICE.raw + n.to_bytes(8, "big")).digest()[:20]
        assert addr.raw == expected
        assert receipt.created_contract == addr
    assert L.nonce(ALICE) == 3


def test_internal_create_uses_contract_nonce():
    L = scratch_ledger()
    parent, _ = L.deploy_contract(ALICE, "Scratch", [])
    r = L.transact(ALICE, parent, "spawn")
    child = r.return_value
    assert child.raw == hashlib.sha256(parent.raw + bytes(8)).digest()[:20]
    assert r.creations[0][:2] == (child, "Scratch")
    assert L.nonce(parent) == 1


def test_bad_nonce_and_timestamp_rejected_without_receipt():
    L = scratch_ledger()
    addr, _ = L.deploy_contract(ALICE, "Scratch", [], timestamp=100)
    n = len(L.receipts)
    with pytest.raises(BadNonce):
        L.submit(Transaction(ALICE, addr, "write_n", (1,), 101, 7))
    with pytest.raises(BadTimestamp):
        L.transact(ALICE, addr, "write_n", 1, timestamp=99)
    assert len(L.receipts) == n


@pytest.mark.parametrize("call, exc", [
    (lambda L, a: L.deploy_contract(ALICE, "Nothing", []), UnknownKind),
    (lambda L, a: L.transact(ALICE, a, "no_such_op"), UnknownOperation),
    (lambda L, a: L.transact(ALICE, a, "slot", 1), UnknownOperation),  # views are not transactions
    (lambda L, a: L.transact(ALICE, a, "write_n"), ArityMismatch),
    (lambda L, a: L.transact(ALICE, Address(b"\x09" * 20), "write_n", 1), UnknownContract),
])
def test_precheck_errors(call, exc):
    L = scratch_ledger()
    addr, _ = L.deploy_contract(ALICE, "Scratch", [])
    with pytest.raises(exc):
        call(L, addr)
    assert len(L.receipts) == 1


def test_revert_is_atomic_and_consumes_nonce():
    L = scratch_ledger()
    addr, _ = L.deploy_contract(ALICE, "Scratch", [])
    before = L.state_hash()
    r = L.transact(ALICE, addr, "write_then_fail", 5)
    assert not r.ok and r.revert_reason == "Nope"
    assert r.events == () and r.gas_used > 0
    assert r.to_json()["status"] == "Reverted:Nope"
    # nonce moved, storage did not
    assert L.nonce(ALICE) == 2
    assert L.view(addr, "slot", 0) is None
    L2 = scratch_ledger()
    L2.deploy_contract(ALICE, "Scratch", [])
    assert before == L2.state_hash()


def test_reverted_constructor_leaves_no_contract():
    L = scratch_ledger()
    addr, receipt = L.deploy_contract(ALICE, "Scratch", [123])
    assert not receipt.ok and receipt.revert_reason == "BadLabel"
    assert addr is None and L.contracts("Scratch") == []
    assert L.nonce(ALICE) == 1


def test_destroyed_contract_rejects_calls():
    L = scratch_ledger()
    addr, _ = L.deploy_contract(ALICE, "Scratch", [])
    assert L.transact(ALICE, addr, "die").ok
    assert L.tombstone(addr).destroyed_by == ALICE
    with pytest.raises(ContractDestroyed):
        L.transact(ALICE, addr, "write_n", 1)
    with pytest.raises(ContractDestroyed):
        L.view(addr, "slot", 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20))
def test_gas_monotone_in_state_words(a, b):
    L = scratch_ledger()
    addr, _ = L.deploy_contract(ALICE, "Scratch", [])
    ga = L.transact(ALICE, addr, "write_n", a).gas_used
    L2 = scratch_ledger()
    addr2, _ = L2.deploy_contract(ALICE, "Scratch", [])
    gb = L2.transact(ALICE, addr2, "write_n", b).gas_used
    assert ga > 0 and gb > 0
    if a < b:
        assert ga < gb


def test_gas_formula_matches_counters():
    L = scratch_ledger()
    addr, _ = L.deploy_contract(ALICE, "Scratch", [])
    r = L.transact(ALICE, addr, "write_n", 3)
    s, c = L.schedule, r.counters
    expected = (
        s.base_tx + s.per_arg_word * c["argWords"] + s.per_state_word_read * c["reads"]
        + s.per_state_word_write * c["writes"] + s.per_event * c["events"]
        + s.per_contract_deploy * c["deploys"] + s.per_code_word * c["codeWords"]
        + s.per_cas_byte * c["casBytes"]
    )
    assert r.gas_used == expected
    assert c["writes"] == 3 and c["events"] == 1


def test_gas_schedule_validation():
    good = load_config().gas.to_json()
    assert GasSchedule.from_json(good).to_json() == good
    with pytest.raises(ValueError):
        GasSchedule.from_json({k: v for k, v in good.items() if k != "baseTx"})
    with pytest.raises(ValueError):
        GasSchedule.from_json(dict(good, perEvent=0))
    assert GasMeter(GasSchedule.from_json(good)).used == good["baseTx"]


def test_export_key_order_and_determinism():
    c1, c2 = Campus(), Campus()
    assert c1.ledger.export_ledger() == c2.ledger.export_ledger()
    lines = c1.ledger.export_ledger().decode().splitlines()
    for line in lines:
        rec = json.loads(line)
        assert list(rec) == ["txHash", "status", "gasUsed", "createdContract", "events"]
        for ev in rec["events"]:
            assert list(ev) == ["contract", "name", "args", "date"]
        for hexstr in re.findall(r"0x[0-9a-fA-F]+", line):
            assert hexstr == hexstr.lower()


def test_replay_reproduces_state_and_export():
    c = Campus()
    c.professor()
    c.student(modules={"S1": ["M11"]})
    c.ok("prof1", c.inst, "submit_grade", c.addr("student1"), "M11", "S1", "Normal", "11.00")
    cfg = load_config()
    again = Ledger.replay(c.ledger.transactions, cfg.gas, cfg.policy)
    assert again.state_hash() == c.ledger.state_hash()
    assert again.export_ledger() == c.ledger.export_ledger()


def test_query_events_filters():
    c = Campus()
    assert len(c.ledger.query_events(name="Certified")) == 1
    assert len(c.ledger.query_events(contract=c.uni)) == 2  # UniversityDeployed, InstitutionAdded
    assert c.ledger.query_events(name="Certified", range=(0, 1)) == []
    ev = c.ledger.query_events(name="InstitutionAdded")[0]
    assert ev["institution"] == c.inst


def test_deploy_charges_more_than_plain_call():
    L = scratch_ledger()
    addr, dep = L.deploy_contract(ALICE, "Scratch", [])
    call = L.transact(ALICE, addr, "write_n", 1)
    assert dep.gas_used > call.gas_used
    assert dep.to_json()["createdContract"] == addr.hex
    assert L.transactions[0].target == DEPLOY
