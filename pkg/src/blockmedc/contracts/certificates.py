"""Certificate instances: academic diplomas, transcripts and professor diplomas.

Each instance moves pending -> signed -> emitted and can be tombstoned by its
trusted issuer at any point.  The signed document layout (all integers
big-endian)::

    body  = b"BMEDC\\x01"
            u8 len(scheme) | scheme id (ascii)
            u8 kind code   (1 diploma, 2 transcript, 3 professor diploma)
            instance address (20) | issuing contract address (20)
            record bytes   (fixed layout per kind, see *_record_bytes)
    sigs  = u8 count | count x (u8 role | public key (32) | signature (64))
    document = body | sigs

The payload digest is SHA-256(body); signatures are over that digest.
``date`` and ``status`` are set at emission and are therefore not part of
the body.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from blockmedc.crypto import (
    ADDRESS_SIZE,
    SCHEME_ID,
    SIGNATURE_SIZE,
    Address,
    address_of,
    digest,
    verify,
)
from blockmedc.encoding import pad32, u64, unpad32
from blockmedc.grading import SEMESTERS
from blockmedc.ledger import Context, Contract, external, view

MAGIC = b"BMEDC\x01"


class Role(str, Enum):
    DEAN = "Dean"
    PRESIDENT = "President"


ROLE_CODES = {Role.DEAN: 1, Role.PRESIDENT: 2}
KIND_CODES = {"CertStudent": 1, "TranscriptCert": 2, "CertProf": 3}
CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


@dataclass(frozen=True)
class AcademicDiploma:
    issuer_dean: Address
    issuer_president: Address
    receiver: Address
    degree: str
    date: int = 0
    note: int = 0
    status: bool = False


@dataclass(frozen=True)
class TranscriptRecord:
    issuer: Address
    receiver: Address
    degree: str
    semester: str
    score: int
    date: int = 0
    note: int = 0
    status: bool = False


@dataclass(frozen=True)
class ProfessorDiploma:
    issuer_head: Address
    issuer_institution: Address
    receiver: Address
    degree: str
    subject: str
    department: str
    period: int
    status: bool = False
    date: int = 0


@dataclass(frozen=True)
class Signature:
    role: Role
    public_key: bytes
    signature: bytes


def record_bytes(record) -> bytes:
    if isinstance(record, AcademicDiploma):
        return (
            record.issuer_dean.raw + record.issuer_president.raw + record.receiver.raw
            + pad32(record.degree) + u64(record.note)
        )
    if isinstance(record, TranscriptRecord):
        return (
            record.issuer.raw + record.receiver.raw + pad32(record.degree)
            + pad32(record.semester) + u64(record.score) + u64(record.note)
        )
    if isinstance(record, ProfessorDiploma):
        return (
            record.issuer_head.raw + record.issuer_institution.raw + record.receiver.raw
            + pad32(record.degree) + pad32(record.subject) + pad32(record.department)
            + u64(record.period)
        )
    raise TypeError(type(record).__name__)


RECORD_SIZES = {"CertStudent": 3 * 20 + 32 + 8, "TranscriptCert": 2 * 20 + 2 * 32 + 16, "CertProf": 3 * 20 + 3 * 32 + 8}


def _addr(b: bytes, off: int) -> Address:
    return Address(b[off:off + ADDRESS_SIZE])


def _u64(b: bytes, off: int) -> int:
    return int.from_bytes(b[off:off + 8], "big")


def parse_record(kind: str, b: bytes):
    if len(b) != RECORD_SIZES[kind]:
        raise ValueError("record length")
    if kind == "CertStudent":
        return AcademicDiploma(_addr(b, 0), _addr(b, 20), _addr(b, 40), unpad32(b[60:92]), note=_u64(b, 92))
    if kind == "TranscriptCert":
        return TranscriptRecord(
            _addr(b, 0), _addr(b, 20), unpad32(b[40:72]), unpad32(b[72:104]), _u64(b, 104), note=_u64(b, 112)
        )
    return ProfessorDiploma(
        _addr(b, 0), _addr(b, 20), _addr(b, 40), unpad32(b[60:92]), unpad32(b[92:124]), unpad32(b[124:156]), _u64(b, 156)
    )


def issuer_for(record, role: Role) -> Address | None:
    if isinstance(record, AcademicDiploma):
        return record.issuer_dean if role is Role.DEAN else record.issuer_president
    if isinstance(record, TranscriptRecord):
        return record.issuer if role is Role.DEAN else None
    return record.issuer_institution if role is Role.DEAN else record.issuer_head


def required_roles(kind: str) -> tuple[Role, ...]:
    return (Role.DEAN,) if kind == "TranscriptCert" else (Role.DEAN, Role.PRESIDENT)


def encode_body(kind: str, instance: Address, issuer_contract: Address, record, scheme: str = SCHEME_ID) -> bytes:
    s = scheme.encode("ascii")
    return MAGIC + bytes([len(s)]) + s + bytes([KIND_CODES[kind]]) + instance.raw + issuer_contract.raw + record_bytes(record)


def encode_signatures(sigs: list[Signature]) -> bytes:
    out = bytes([len(sigs)])
    for s in sorted(sigs, key=lambda s: ROLE_CODES[s.role]):
        out += bytes([ROLE_CODES[s.role]]) + s.public_key + s.signature
    return out


@dataclass(frozen=True)
class Document:
    """A parsed certificate document as presented to a checker."""

    scheme: str
    kind: str
    instance: Address
    issuer_contract: Address
    record: object
    body: bytes
    signatures: tuple[Signature, ...] | None  # None when the signature block is unparseable

    @property
    def payload_digest(self) -> bytes:
        return digest(self.body)


class MalformedDocument(ValueError):
    pass


def parse_document(data: bytes) -> Document:
    """Split a document into body and signature block.

    A malformed body raises :class:`MalformedDocument`; a malformed signature
    block yields ``signatures=None`` so the body can still be matched.
    """
    try:
        if not data.startswith(MAGIC):
            raise ValueError("magic")
        off = len(MAGIC)
        n = data[off]
        scheme = data[off + 1:off + 1 + n].decode("ascii")
        off += 1 + n
        kind = CODE_KINDS[data[off]]
        off += 1
        instance = _addr(data, off)
        issuer_contract = _addr(data, off + 20)
        off += 40
        size = RECORD_SIZES[kind]
        record = parse_record(kind, data[off:off + size])
        off += size
    except (ValueError, KeyError, IndexError, UnicodeDecodeError) as exc:
        raise MalformedDocument(str(exc)) from None
    body, rest = data[:off], data[off:]
    return Document(scheme, kind, instance, issuer_contract, record, body, _parse_sigs(rest))


def _parse_sigs(rest: bytes) -> tuple[Signature, ...] | None:
    if not rest:
        return None
    count = rest[0]
    entry = 1 + 32 + SIGNATURE_SIZE
    if len(rest) != 1 + count * entry:
        return None
    codes = {v: k for k, v in ROLE_CODES.items()}
    out = []
    for i in range(count):
        chunk = rest[1 + i * entry:1 + (i + 1) * entry]
        role = codes.get(chunk[0])
        if role is None:
            return None
        out.append(Signature(role, chunk[1:33], chunk[33:]))
    return tuple(out)


class CertificateInstance(Contract):
    code_words = 150

    def _init(self, ctx: Context, record) -> None:
        try:
            record_bytes(record)
        except ValueError:
            ctx.revert("FieldTooLong")
        self.set("record", record)
        self.set("creator", ctx.sender)

    def _record(self):
        return self.get("record")

    def body(self) -> bytes:
        return encode_body(self.kind, self.address, self.get("creator"), self._record())

    def _signatures(self) -> list[Signature]:
        return [s for s in (self.get(("sig", r)) for r in required_roles(self.kind)) if s is not None]

    def _complete(self) -> bool:
        return all(self.has(("sig", r)) for r in required_roles(self.kind))

    def _trusted(self, record) -> Address:
        # the entity allowed to refuse (revoke) the instance
        if isinstance(record, TranscriptRecord):
            return record.issuer
        return issuer_for(record, Role.PRESIDENT)

    @external
    def sign_payload(self, ctx: Context, role: str, public_key: bytes, signature: bytes) -> None:
        record = self._record()
        try:
            role = Role(role)
        except ValueError:
            ctx.revert("WrongSigner")
        ctx.require(role in required_roles(self.kind), "WrongSigner")
        ctx.require(ctx.sender == issuer_for(record, role), "WrongSigner")
        ctx.require(not self.has(("sig", role)), "AlreadySigned")
        ctx.require(not record.status, "AlreadyEmitted")
        ok = (
            isinstance(public_key, bytes) and isinstance(signature, bytes)
            and address_of(public_key) == ctx.sender
            and verify(public_key, digest(self.body()), signature)
        )
        ctx.require(ok, "BadSignature")
        self.set(("sig", role), Signature(role, public_key, signature))
        ctx.emit("CertificateSigned", instance=self.address, role=role, signer=ctx.sender)

    @external
    def emit_certificate(self, ctx: Context) -> None:
        record = self._record()
        issuers = {issuer_for(record, r) for r in required_roles(self.kind)} | {self.get("creator")}
        ctx.require(ctx.sender in issuers, "NotIssuer")
        ctx.require(not record.status, "AlreadyEmitted")
        ctx.require(self._complete(), "MissingSignatures")
        self.set("record", replace(record, date=ctx.now, status=True))
        ctx.emit(
            "CertificateEmitted",
            instance=self.address,
            kind=self.kind,
            receiver=record.receiver,
            institution=self.get("creator"),
            payloadDigest=digest(self.body()),
        )

    @external
    def revoke_instance(self, ctx: Context) -> None:
        ctx.require(ctx.sender == self._trusted(self._record()), "NotIssuer")
        ctx.destroy()
        ctx.emit("CertificateRevoked", instance=self.address, by=ctx.sender)

    @view
    def info(self, ctx: Context) -> dict:
        record = self._record()
        return {
            "kind": self.kind,
            "receiver": record.receiver,
            "institution": self.get("creator"),
            "digest": digest(self.body()),
            "complete": self._complete(),
            "emitted": record.status,
        }

    @view
    def payload_digest(self, ctx: Context) -> bytes:
        return digest(self.body())

    @view
    def document(self, ctx: Context) -> bytes:
        return self.body() + encode_signatures(self._signatures())

    @view
    def read_certificate(self, ctx: Context) -> dict:
        body = self.body()
        return {
            "kind": self.kind,
            "record": self._record(),
            "canonicalBytes": body,
            "schemeId": SCHEME_ID,
            "payloadDigest": digest(body),
            "signatures": {s.role.value: s for s in self._signatures()},
            "complete": self._complete(),
            "document": body + encode_signatures(self._signatures()),
        }


class CertStudent(CertificateInstance):
    kind = "CertStudent"
    code_words = 74

    def constructor(self, ctx: Context, receiver: Address, issuer_president: Address, issuer_dean: Address, degree: str, note: int = 0) -> None:
        self._init(ctx, AcademicDiploma(issuer_dean, issuer_president, receiver, degree, note=note))


class TranscriptCert(CertificateInstance):
    kind = "TranscriptCert"
    code_words = 480

    def constructor(self, ctx: Context, receiver: Address, issuer: Address, degree: str, semester: str, score: int, note: int = 0) -> None:
        ctx.require(semester in SEMESTERS, "UnknownSemester")
        ctx.require(0 <= score <= 2000, "ScoreOutOfRange")
        self._init(ctx, TranscriptRecord(issuer, receiver, degree, semester, score, note=note))


class CertProf(CertificateInstance):
    kind = "CertProf"
    code_words = 37

    def constructor(self, ctx: Context, receiver: Address, issuer_head: Address, issuer_institution: Address, degree: str, subject: str, department: str, period: int) -> None:
        ctx.require(isinstance(period, int) and period > 0, "InvalidPeriod")
        self._init(ctx, ProfessorDiploma(issuer_head, issuer_institution, receiver, degree, subject, department, period))
