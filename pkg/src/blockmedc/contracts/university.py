from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from blockmedc.crypto import Address
from blockmedc.ledger import Context, Contract, external, view


class SubjectKind(str, Enum):
    STUDENT = "Student"
    PROFESSOR = "Professor"


# certificate instance kinds that may be anchored under each subject kind
ANCHORABLE = {
    SubjectKind.STUDENT: ("CertStudent", "TranscriptCert"),
    SubjectKind.PROFESSOR: ("CertProf",),
}


@dataclass(frozen=True)
class InstitutionRecord:
    institution: Address
    head: Address
    vice_head: Address
    registered: bool = True


@dataclass(frozen=True)
class AnchorRecord:
    subject: Address
    kind: SubjectKind
    instance: Address


class University(Contract):
    """A university registered with the authority.

    Every mutating call first checks that the owner's certificate is still
    valid at the authority.
    """

    kind = "University"
    code_words = 240

    def constructor(self, ctx: Context, authority: Address) -> None:
        self.set("owner", ctx.sender)
        self.set("authority", authority)
        ctx.emit("UniversityDeployed", owner=ctx.sender, authority=authority)

    def _cert_valid(self, ctx: Context) -> bool:
        return ctx.call(self.get("authority"), "is_certificate_valid", self.get("owner"), ctx.now)

    def _gate(self, ctx: Context) -> None:
        ctx.require(ctx.sender == self.get("owner"), "NotOwner")
        ctx.require(self._cert_valid(ctx), "UniversityCertInvalid")

    @external
    def add_institution(self, ctx: Context, institution: Address, head: Address, vice_head: Address) -> None:
        self._gate(ctx)
        ctx.require(head != institution, "InvalidHead")
        ctx.require(not self.has(("institution", institution)), "Institution already exists")
        self.set(("institution", institution), InstitutionRecord(institution, head, vice_head))
        ctx.emit("InstitutionAdded", institution=institution, head=head, viceHead=vice_head)

    @external
    def add_administrator(self, ctx: Context, admin: Address) -> None:
        self._gate(ctx)
        ctx.require(not self.has(("admin", admin)), "AlreadyAdmin")
        self.set(("admin", admin), True)
        ctx.emit("AdministratorAdded", admin=admin)

    @external
    def anchor_certificate(self, ctx: Context, subject: Address, kind: str, instance: Address, payload_digest: bytes) -> None:
        owner = self.get("owner")
        try:
            kind = SubjectKind(kind)
        except ValueError:
            ctx.revert("UnknownSubjectKind")
        info = ctx.call(instance, "info")
        record = self.get(("institution", info["institution"]))
        is_head = record is not None and record.head == ctx.sender
        ctx.require(ctx.sender == owner or is_head or self.has(("admin", ctx.sender)), "NotAuthorizedSigner")
        ctx.require(self._cert_valid(ctx), "UniversityCertInvalid")
        ctx.require(record is not None, "ForeignInstitution")
        ctx.require(info["kind"] in ANCHORABLE[kind], "KindMismatch")
        ctx.require(info["receiver"] == subject, "SubjectMismatch")
        ctx.require(info["digest"] == payload_digest, "DigestMismatch")
        ctx.require(info["complete"], "MissingSignatures")
        ctx.require(info["emitted"], "NotEmitted")
        ctx.require(not self.has(("anchor", payload_digest)), "AlreadyAnchored")
        slot = ("studentCertificates" if kind is SubjectKind.STUDENT else "professorCertificates", subject)
        previous = self.get(slot)
        self.set(slot, payload_digest)
        self.set(("anchor", payload_digest), AnchorRecord(subject, kind, instance))
        ctx.emit("CertificateAnchored", subject=subject, kind=kind, instance=instance, digest=payload_digest)
        if previous is not None:
            ctx.emit("AnchorUpdated", subject=subject, kind=kind, previous=previous, digest=payload_digest)

    def _validate(self, ctx: Context, subject: Address, payload_digest: bytes, kind: SubjectKind) -> bool:
        rec = self.get(("anchor", payload_digest))
        if rec is None or rec.subject != subject or rec.kind is not kind:
            return False
        return not ctx.is_destroyed(rec.instance)

    @view
    def validate_cert_student(self, ctx: Context, subject: Address, payload_digest: bytes) -> bool:
        return self._validate(ctx, subject, payload_digest, SubjectKind.STUDENT)

    @view
    def validate_cert_prof(self, ctx: Context, subject: Address, payload_digest: bytes) -> bool:
        return self._validate(ctx, subject, payload_digest, SubjectKind.PROFESSOR)

    @view
    def check_institution(self, ctx: Context, institution: Address) -> bool:
        rec = self.get(("institution", institution))
        return rec is not None and rec.registered

    @view
    def institution_record(self, ctx: Context, institution: Address) -> InstitutionRecord | None:
        return self.get(("institution", institution))

    @view
    def is_administrator(self, ctx: Context, admin: Address) -> bool:
        return self.has(("admin", admin))

    @view
    def is_owner_valid(self, ctx: Context) -> bool:
        return self._cert_valid(ctx)

    @view
    def owner(self, ctx: Context) -> Address:
        return self.get("owner")

    @view
    def student_certificate(self, ctx: Context, subject: Address) -> bytes | None:
        return self.get(("studentCertificates", subject))

    @view
    def professor_certificate(self, ctx: Context, subject: Address) -> bytes | None:
        return self.get(("professorCertificates", subject))
