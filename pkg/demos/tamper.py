"""Flip bytes in an issued transcript and watch verification reject it."""

from importlib import resources

from blockmedc.config import load_config
from blockmedc.crypto import Address
from blockmedc.scenario import load_scenario, run_scenario
from blockmedc.verification import LedgerView, verify_document

path = resources.files("blockmedc.data").joinpath("scenarios", "lifecycle.jsonl")
runner = run_scenario(load_scenario(path), load_config())
view = LedgerView.from_ledger(runner.ledger)
instance = next(iter(view.emitted))
doc = runner.ledger.view(Address.from_hex(instance), "document")
student = runner.address("student1")

print("original        ", verify_document(view, doc, student, "Student").verdict)
for pos in (0, 40, 120, len(doc) - 1):
    mutated = bytearray(doc)
    mutated[pos] ^= 0x01
    res = verify_document(view, bytes(mutated), student, "Student")
    print(f"flip byte {pos:>4}  ", res.verdict, res.reason)
print("wrong subject   ", verify_document(view, doc, runner.address("student2"), "Student").reason)
