"""Checker-facing verification, driven purely by the ledger's event log and the CAS.

The same code path serves a live :class:`~blockmedc.ledger.Ledger` and a
re-imported JSON Lines export, because both are first turned into a
:class:`LedgerView` of rendered events.  Issuer-chain checks replay the log up
to the certificate's emission so that later revocations do not retroactively
void a credential.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from blockmedc.contracts.certificates import (
    MalformedDocument,
    Role,
    issuer_for,
    parse_document,
    required_roles,
)
from blockmedc.contracts.university import ANCHORABLE, SubjectKind
from blockmedc.crypto import SCHEME_ID, address_of, digest, verify
from blockmedc.errors import IntegrityViolation, ObjectNotFound, UnknownSubject

CHECKS = ("digest-match", "anchor-present", "signatures-valid", "issuer-chain", "not-tombstoned")
REASONS = {
    "digest-match": "digest-mismatch",
    "anchor-present": "anchor-missing",
    "signatures-valid": "signatures-invalid",
    "issuer-chain": "issuer-chain-broken",
    "not-tombstoned": "tombstoned",
}


@dataclass(frozen=True)
class LogEvent:
    seq: int
    contract: str
    name: str
    args: dict
    date: int


class LedgerView:
    """Indexes over an exported receipt log (only successful receipts carry events)."""

    def __init__(self, records: list[dict]):
        self.records = list(records)
        self.events: list[LogEvent] = []
        for rec in records:
            for ev in rec.get("events", ()):
                self.events.append(LogEvent(len(self.events), ev["contract"], ev["name"], dict(ev["args"]), int(ev["date"])))
        self.emitted: dict[str, LogEvent] = {}
        self.revoked: dict[str, LogEvent] = {}
        self.anchors: dict[str, list[LogEvent]] = defaultdict(list)
        self.institutions: dict[str, LogEvent] = {}
        self.universities: dict[str, LogEvent] = {}
        self.institution_added: dict[tuple[str, str], LogEvent] = {}
        self.authority_log: dict[str, list[LogEvent]] = defaultdict(list)
        self.members: dict[str, list[LogEvent]] = defaultdict(list)
        self.files: dict[str, list[LogEvent]] = defaultdict(list)
        for e in self.events:
            a = e.args
            if e.name == "CertificateEmitted":
                self.emitted[e.contract] = e
            elif e.name == "CertificateRevoked":
                self.revoked[e.contract] = e
            elif e.name == "CertificateAnchored":
                self.anchors[a["digest"]].append(e)
            elif e.name == "InstitutionDeployed":
                self.institutions[e.contract] = e
            elif e.name == "UniversityDeployed":
                self.universities[e.contract] = e
            elif e.name == "InstitutionAdded":
                self.institution_added.setdefault((e.contract, a["institution"]), e)
            elif e.name in ("CertificateRegistered", "Revoked"):
                self.authority_log[e.contract].append(e)
            elif e.name == "MemberAdded":
                self.members[a["member"]].append(e)
            elif e.name == "FileStored":
                self.files[a["user"]].append(e)

    @classmethod
    def from_ledger(cls, ledger) -> LedgerView:
        return cls(ledger.export_records())

    @classmethod
    def from_jsonl(cls, data: bytes | str | Path) -> LedgerView:
        if isinstance(data, Path):
            data = data.read_bytes()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return cls([json.loads(line) for line in data.splitlines() if line.strip()])

    def authority_state(self, authority: str, university: str, before_seq: int) -> dict | None:
        state = None
        for e in self.authority_log.get(authority, ()):
            if e.seq >= before_seq:
                break
            if e.name == "CertificateRegistered" and e.args["university"] == university:
                state = {"publicKey": e.args["publicKey"], "expiry": int(e.args["expiry"]), "revoked": False}
            elif e.name == "Revoked" and e.args["to"] == university and state is not None:
                state = dict(state, revoked=True)
        return state


def _as_view(source) -> LedgerView:
    if isinstance(source, LedgerView):
        return source
    return LedgerView.from_ledger(source)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    skipped: bool = False  # not evaluated because an earlier check already failed


@dataclass(frozen=True)
class VerificationResult:
    checks: tuple[Check, ...]
    reason_override: str | None = None

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return "Valid" if self.valid else "Invalid"

    @property
    def reason(self) -> str | None:
        if self.valid:
            return None
        if self.reason_override:
            return self.reason_override
        return next(REASONS[c.name] for c in self.checks if not c.passed)

    def check(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail, "skipped": c.skipped} for c in self.checks
            ],
        }


def _fail_all(detail: str, override: str | None = None) -> VerificationResult:
    return VerificationResult(tuple(Check(n, False, detail) for n in CHECKS), override)


def verify_document(source, doc_bytes: bytes, subject, kind) -> VerificationResult:
    """Run the five chain-of-trust checks for a presented document.  Never raises."""
    view = _as_view(source)
    subject = subject if isinstance(subject, str) else subject.hex
    try:
        kind = SubjectKind(kind)
    except ValueError:
        return _fail_all(f"unknown subject kind {kind!r}")
    try:
        doc = parse_document(bytes(doc_bytes))
    except MalformedDocument as exc:
        return _fail_all(f"unparseable document body: {exc}", "digest-mismatch")

    d = digest(doc.body)
    dhex = "0x" + d.hex()
    instance = doc.instance.hex
    emitted = view.emitted.get(instance)
    inst_ev = view.institutions.get(doc.issuer_contract.hex)
    uni_ev = view.universities.get(inst_ev.args["university"]) if inst_ev else None

    # 1. the presented body is exactly what was emitted on the ledger
    if emitted is None:
        c_digest = Check("digest-match", False, f"no emission recorded for {instance} with digest {dhex}")
    else:
        ok = (
            emitted.args["payloadDigest"] == dhex
            and emitted.args["kind"] == doc.kind
            and emitted.args["institution"] == doc.issuer_contract.hex
        )
        c_digest = Check("digest-match", ok, "" if ok else f"document digest {dhex} differs from emitted {emitted.args['payloadDigest']}")

    # 2. a university anchored this digest for this subject
    anchored = [
        e for e in view.anchors.get(dhex, ())
        if e.args["subject"] == subject and e.args["kind"] == kind.value and e.args["instance"] == instance
        and (inst_ev is None or e.contract == inst_ev.args["university"])
    ]
    kind_ok = doc.kind in ANCHORABLE[kind] and doc.record.receiver.hex == subject
    c_anchor = Check(
        "anchor-present",
        bool(anchored) and kind_ok,
        "" if anchored and kind_ok else f"no {kind.value} anchor for {subject} with digest {dhex}",
    )

    # 3. every required signature verifies and binds to the right issuer; a body
    # that matches no emission cannot be made valid by its signatures, so the
    # costly curve operations are skipped
    if c_digest.passed:
        c_sigs = _check_signatures(view, doc, d, emitted, inst_ev, uni_ev)
    else:
        c_sigs = Check("signatures-valid", False, "not evaluated: digest mismatch", skipped=True)

    # 4. issuer chain as it stood when the certificate was emitted
    c_chain = _check_chain(view, doc, emitted, inst_ev, uni_ev)

    # 5. instance not refused
    tomb = view.revoked.get(instance)
    c_tomb = Check("not-tombstoned", tomb is None, "" if tomb is None else f"revoked at {tomb.date}")

    return VerificationResult((c_digest, c_anchor, c_sigs, c_chain, c_tomb))


def _check_signatures(view, doc, d, emitted, inst_ev, uni_ev) -> Check:
    name = "signatures-valid"
    if doc.scheme != SCHEME_ID:
        return Check(name, False, f"unsupported scheme {doc.scheme!r}")
    if doc.signatures is None:
        return Check(name, False, "signature block unparseable")
    roles = required_roles(doc.kind)
    got = {}
    for s in doc.signatures:
        if s.role in got or s.role not in roles:
            return Check(name, False, f"unexpected or duplicate {s.role.value} signature")
        got[s.role] = s
    for role in roles:
        s = got.get(role)
        if s is None:
            return Check(name, False, f"missing {role.value} signature")
        if address_of(s.public_key) != issuer_for(doc.record, role):
            return Check(name, False, f"{role.value} key does not belong to the issuer")
        if not verify(s.public_key, d, s.signature):
            return Check(name, False, f"{role.value} signature does not verify")
    if Role.PRESIDENT in roles:
        if emitted is None or uni_ev is None:
            return Check(name, False, "cannot resolve the president's registered key")
        state = view.authority_state(uni_ev.args["authority"], uni_ev.args["owner"], emitted.seq)
        if state is None or state["publicKey"] != "0x" + got[Role.PRESIDENT].public_key.hex():
            return Check(name, False, "president key differs from the authority registration")
    return Check(name, True)


def _check_chain(view, doc, emitted, inst_ev, uni_ev) -> Check:
    name = "issuer-chain"
    if emitted is None:
        return Check(name, False, "certificate was never emitted")
    if inst_ev is None or uni_ev is None:
        return Check(name, False, "issuing institution or university unknown")
    added = view.institution_added.get((uni_ev.contract, inst_ev.contract))
    if added is None or added.seq > emitted.seq:
        return Check(name, False, "institution not registered with the university at emission")
    owner = uni_ev.args["owner"]
    state = view.authority_state(uni_ev.args["authority"], owner, emitted.seq)
    if state is None or state["revoked"] or not emitted.date < state["expiry"]:
        return Check(name, False, "university certificate not valid at emission")
    if issuer_for(doc.record, Role.DEAN).hex != inst_ev.args["head"]:
        return Check(name, False, "dean/issuer is not the institution head")
    if Role.PRESIDENT in required_roles(doc.kind) and issuer_for(doc.record, Role.PRESIDENT).hex != owner:
        return Check(name, False, "president is not the university owner")
    return Check(name, True)


@dataclass
class PortfolioItem:
    instance: str
    kind: str
    emitted_at: int
    cid: str | None
    result: VerificationResult

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "kind": self.kind,
            "emittedAt": self.emitted_at,
            "cid": self.cid,
            "result": self.result.to_json(),
        }


@dataclass
class PortfolioSummary:
    subject: str
    kind: str
    items: list[PortfolioItem] = field(default_factory=list)
    files: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "subject": self.subject,
            "kind": self.kind,
            "items": [i.to_json() for i in self.items],
            "files": self.files,
        }


def verify_by_id(source, cas, subject, kind) -> PortfolioSummary:
    """Everything issued to a BlockMEDC id, each item verified against its stored document."""
    view = _as_view(source)
    subject = subject if isinstance(subject, str) else subject.hex
    kind = SubjectKind(kind)
    if subject not in view.members:
        raise UnknownSubject(subject)

    docs: dict[str, tuple[bytes, str]] = {}
    files = []
    for e in view.files.get(subject, ()):
        cid = e.args["cid"]
        entry = {"storage": e.contract, "id": int(e.args["id"]), "cid": cid, "label": e.args["label"], "intact": False}
        try:
            content = cas.fetch(cid)
            entry["intact"] = True
        except (ObjectNotFound, IntegrityViolation):
            content = None
        files.append(entry)
        if content is None:
            continue
        try:
            doc = parse_document(content)
        except MalformedDocument:
            continue
        docs.setdefault(doc.instance.hex, (content, cid))

    summary = PortfolioSummary(subject, kind.value, files=files)
    for instance, ev in view.emitted.items():
        if ev.args["receiver"] != subject or ev.args["kind"] not in ANCHORABLE[kind]:
            continue
        stored = docs.get(instance)
        if stored is None:
            result = _fail_all("no stored document for this certificate", "document-missing")
            summary.items.append(PortfolioItem(instance, ev.args["kind"], ev.date, None, result))
        else:
            result = verify_document(view, stored[0], subject, kind)
            summary.items.append(PortfolioItem(instance, ev.args["kind"], ev.date, stored[1], result))
    return summary
