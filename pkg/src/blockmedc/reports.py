"""Read-only reports over an exported receipt log."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

# pending event that opens a flow -> report row
FLOW_OPENERS = {
    "TranscriptPending": "transcript",
    "DiplomaPending": "diploma",
    "ProfessorDiplomaPending": "other certificate",
}
FLOW_STEPS = set(FLOW_OPENERS) | {"CertificateSigned", "CertificateEmitted", "CertificateAnchored"}
ROWS = ("transcript", "diploma", "other certificate", "document storage")

# relative costs from the published per-student table (Gwei), used as the calibration target
PUBLISHED_GWEI = {
    "transcript": 590.460,
    "diploma": 413.092,
    "other certificate": 394.174,
    "document storage": 100.434,
}


@dataclass(frozen=True)
class FlowRow:
    name: str
    instances: int
    total: int

    @property
    def mean(self) -> float:
        return self.total / self.instances if self.instances else 0.0


def flow_totals(records: list[dict]) -> dict[str, dict[str, int]]:
    """Gas per certificate instance, summed over every receipt that advanced it.

    A receipt advances an instance when it carries a pending, signed, emitted
    or anchored event naming that instance.  Document stores are one flow each.
    """
    kind_of: dict[str, str] = {}
    per_instance: dict[str, int] = defaultdict(int)
    stores: dict[str, int] = {}
    for rec in records:
        touched = set()
        for ev in rec.get("events", ()):
            name = ev["name"]
            if name in FLOW_OPENERS:
                kind_of[ev["args"]["instance"]] = FLOW_OPENERS[name]
            if name in FLOW_STEPS:
                touched.add(ev["args"]["instance"])
            if name == "FileStored":
                stores[rec["txHash"]] = rec["gasUsed"]
        for inst in touched:
            per_instance[inst] += rec["gasUsed"]
    out: dict[str, dict[str, int]] = {r: {} for r in ROWS}
    for inst, gas in per_instance.items():
        if inst in kind_of:
            out[kind_of[inst]][inst] = gas
    out["document storage"] = stores
    return out


def gas_report(records: list[dict]) -> list[FlowRow]:
    flows = flow_totals(records)
    return [FlowRow(name, len(flows[name]), sum(flows[name].values())) for name in ROWS]


def format_gas_report(rows: list[FlowRow]) -> str:
    head = rows[0].mean or 1.0
    lines = [f"{'flow':<20}{'n':>4}{'mean gas':>14}{'ratio':>8}{'target':>8}"]
    for r in rows:
        target = PUBLISHED_GWEI[r.name] / PUBLISHED_GWEI["transcript"]
        lines.append(f"{r.name:<20}{r.instances:>4}{r.mean:>14.1f}{r.mean / head:>8.3f}{target:>8.3f}")
    return "\n".join(lines)


def deployment_gas(records: list[dict]) -> dict[str, int]:
    """Deployment cost per contract address (top-level deploys only)."""
    return {rec["createdContract"]: rec["gasUsed"] for rec in records if rec.get("createdContract")}


def format_events(records: list[dict], name: str | None = None, contract: str | None = None) -> list[str]:
    rows = []
    for i, rec in enumerate(records):
        for ev in rec.get("events", ()):
            if name and ev["name"] != name:
                continue
            if contract and ev["contract"] != contract.lower():
                continue
            args = " ".join(f"{k}={v}" for k, v in ev["args"].items())
            rows.append(f"{i:>5} {ev['date']} {ev['contract']} {ev['name']} {args}")
    return rows
