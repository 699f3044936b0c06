"""Run the shipped lifecycle scenario and show what a checker sees.

    python3 demos/walkthrough.py
"""

from importlib import resources

from blockmedc.cas import MemoryCas
from blockmedc.config import load_config
from blockmedc.scenario import load_scenario, run_scenario
from blockmedc.verification import LedgerView, verify_by_id


def main():
    path = resources.files("blockmedc.data").joinpath("scenarios", "lifecycle.jsonl")
    cas = MemoryCas()
    runner = run_scenario(load_scenario(path), load_config(), cas=cas)
    print(f"{len(runner.outcomes)} commands, {len(runner.ledger.receipts)} receipts, failures: {runner.failures}")

    # a checker only needs the exported log and the document store
    view = LedgerView.from_jsonl(runner.ledger.export_ledger())
    for alias, kind in (("student1", "Student"), ("prof1", "Professor")):
        summary = verify_by_id(view, cas, runner.address(alias), kind)
        print(f"\n{alias} ({summary.subject})")
        for item in summary.items:
            r = item.result
            print(f"  {item.kind:<15} {item.instance[:14]}..  {r.verdict}")
        for f in summary.files:
            print(f"  file {f['label']!r:<28} intact={f['intact']}")


if __name__ == "__main__":
    main()
