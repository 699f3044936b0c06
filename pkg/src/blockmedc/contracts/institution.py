"""Institution state machine: members, grades, deliberation, sanctions, claims and issuance."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from blockmedc.crypto import Address, digest
from blockmedc.encoding import pad32, u64
from blockmedc.grading import (
    DEGREE_LABELS,
    MAX_GRADE,
    SEMESTERS,
    GradeError,
    Session,
    deliberation_rule,
    format_grade,
    parse_grade,
    semester_average,
)
from blockmedc.ledger import Context, Contract, external, view


class MemberRole(str, Enum):
    PROFESSOR = "Professor"
    ADMIN = "Admin"
    STUDENT = "Student"


SESSION_CODES = {Session.NORMAL: 0, Session.CATCH_UP: 1}
REQUEST_KINDS = ("ExtraModule", "PathChange", "ExtraCertificate")


@dataclass(frozen=True)
class MemberRecord:
    address: Address
    role: MemberRole
    name: str = ""
    national_id: str = ""
    degree: str = ""
    path: str = ""
    department_head: bool = False
    active: bool = True


@dataclass(frozen=True)
class GradeEntry:
    student: Address
    module: str
    semester: str
    session: Session
    value: int
    professor: Address
    submitted_at: int
    locked: bool = True

    def canonical_bytes(self) -> bytes:
        return (
            self.student.raw + pad32(self.module) + pad32(self.semester)
            + bytes([SESSION_CODES[self.session]]) + u64(self.value)
            + self.professor.raw + u64(self.submitted_at)
        )

    @property
    def digest(self) -> bytes:
        return digest(self.canonical_bytes())


@dataclass(frozen=True)
class FlaggedStudent:
    student: Address
    current_average: int
    target: str
    required_delta: int


@dataclass(frozen=True)
class DeliberationReport:
    semester: str
    session: Session
    flagged: tuple[FlaggedStudent, ...]
    deliberated: int


@dataclass(frozen=True)
class SemesterResult:
    average: int
    adjustment: int = 0

    @property
    def final(self) -> int:
        return min(MAX_GRADE, self.average + self.adjustment)


@dataclass(frozen=True)
class Sanction:
    student: Address
    kind: str
    modules: tuple = ()
    semester: str | None = None
    session: Session | None = None
    decided_at: int = 0


@dataclass(frozen=True)
class Claim:
    id: int
    student: Address
    module: str
    semester: str
    session: Session
    status: str = "Open"
    new_value: int | None = None


@dataclass(frozen=True)
class Request:
    id: int
    requester: Address
    kind: str
    payload: dict
    status: str = "Open"


@dataclass(frozen=True)
class TranscriptRef:
    instance: Address
    score: int
    note: int


class Institution(Contract):
    kind = "Institution"
    code_words = 760

    def constructor(self, ctx: Context, university: Address) -> None:
        self.set("university", university)
        self.set("head", ctx.sender)
        ctx.emit("InstitutionDeployed", head=ctx.sender, university=university)

    # ---- guards ---------------------------------------------------------

    def _gate(self, ctx: Context) -> None:
        university = self.get("university")
        ctx.require(ctx.call(university, "is_owner_valid"), "UniversityCertInvalid")
        ctx.require(ctx.call(university, "check_institution", self.address), "InstitutionNotRegistered")

    def _authorized(self, who: Address) -> bool:
        return who == self.get("head") or self.get(("authorized", who), False)

    def _require_authorized(self, ctx: Context) -> None:
        ctx.require(self._authorized(ctx.sender), "NotAuthorizedCaller")
        self._gate(ctx)

    def _member(self, who: Address) -> MemberRecord | None:
        return self.get(("member", who))

    def _require_role(self, ctx: Context, who: Address, role: MemberRole, reason: str) -> MemberRecord:
        m = self._member(who)
        ctx.require(m is not None and m.role is role and m.active, reason)
        return m

    def _session(self, ctx: Context, session) -> Session:
        try:
            return Session(session)
        except ValueError:
            ctx.revert("UnknownSession")

    def _semester(self, ctx: Context, semester: str) -> str:
        ctx.require(semester in SEMESTERS, "UnknownSemester")
        return semester

    def _grade(self, ctx: Context, value) -> int:
        try:
            cents = parse_grade(value)
        except GradeError:
            ctx.revert("InvalidGrade")
        ctx.require(0 <= cents <= MAX_GRADE, "GradeOutOfRange")
        return cents

    # ---- authorized administrators -------------------------------------

    @external
    def add_authorized(self, ctx: Context, admin: Address) -> None:
        ctx.require(ctx.sender == self.get("head"), "NotHead")
        self._gate(ctx)
        ctx.require(not self.get(("authorized", admin), False), "AlreadyAuthorized")
        self.set(("authorized", admin), True)
        ctx.emit("AuthorizedAdded", admin=admin)

    @external
    def remove_authorized(self, ctx: Context, admin: Address) -> None:
        ctx.require(ctx.sender == self.get("head"), "NotHead")
        self._gate(ctx)
        ctx.require(self.get(("authorized", admin), False), "NotAuthorized")
        self.delete(("authorized", admin))
        ctx.emit("AuthorizedRemoved", admin=admin)

    # ---- members --------------------------------------------------------

    @external
    def register_member(self, ctx: Context, role: str, member: Address, info: dict | None = None) -> None:
        self._require_authorized(ctx)
        try:
            role = MemberRole(role)
        except ValueError:
            ctx.revert("UnknownRole")
        ctx.require(not self.has(("member", member)), "RoleConflict")
        info = dict(info or {})
        record = MemberRecord(
            member,
            role,
            name=str(info.get("name", "")),
            national_id=str(info.get("nationalId", "")),
            degree=str(info.get("degree", "")),
            path=str(info.get("path", "")),
            department_head=bool(info.get("departmentHead", False)),
        )
        self.set(("member", member), record)
        self.push("members", member)
        ctx.emit("MemberAdded", member=member, role=role)
        if role is MemberRole.STUDENT:
            modules = info.get("modules", {}) or {}
            for semester in SEMESTERS:
                if semester in modules:
                    self.set(("enrolled", member, semester), tuple(str(m) for m in modules[semester]))
            self.push("students", member)
            cert_id = self.push("registrationCertificates", (member, "Pending")) + 1
            ctx.emit("RegistrationCertificatePending", student=member, id=cert_id)

    def _modules(self, student: Address, semester: str) -> tuple[str, ...]:
        removed = self.get(("removed", student), frozenset())
        return tuple(m for m in self.get(("enrolled", student, semester), ()) if m not in removed)

    # ---- grades ---------------------------------------------------------

    @external
    def submit_grade(self, ctx: Context, student: Address, module: str, semester: str, session: str, value) -> None:
        self._require_role(ctx, ctx.sender, MemberRole.PROFESSOR, "NotProfessor")
        self._gate(ctx)
        session = self._session(ctx, session)
        semester = self._semester(ctx, semester)
        self._require_role(ctx, student, MemberRole.STUDENT, "UnknownStudent")
        ctx.require(not self.get(("bar", student, semester, session), False), "StudentBarred")
        cents = self._grade(ctx, value)
        ctx.require(module in self._modules(student, semester), "NotEnrolled")
        key = (student, module, semester, session)
        ctx.require(not self.has(("grade",) + key), "GradeAlreadyLocked")
        entry = GradeEntry(student, module, semester, session, cents, ctx.sender, ctx.now)
        self.set(("grade",) + key, entry)
        self.push(("hist",) + key, entry)
        ctx.emit(
            "GradeSubmitted",
            student=student, module=module, semester=semester, session=session,
            value=format_grade(cents), professor=ctx.sender, entryDigest=entry.digest,
        )

    def _effective_grades(self, student: Address, semester: str, session: Session) -> list[int] | None:
        values = []
        for module in self._modules(student, semester):
            entry = None
            if session is Session.CATCH_UP:
                entry = self.get(("grade", student, module, semester, Session.CATCH_UP))
            if entry is None:
                entry = self.get(("grade", student, module, semester, Session.NORMAL))
            if entry is None:
                return None
            values.append(entry.value)
        return values

    # ---- deliberation ---------------------------------------------------

    @external
    def deliberate(self, ctx: Context, semester: str, session: str) -> DeliberationReport:
        self._require_role(ctx, ctx.sender, MemberRole.PROFESSOR, "NotProfessor")
        self._gate(ctx)
        semester = self._semester(ctx, semester)
        session = self._session(ctx, session)
        flagged = []
        count = 0
        for student in self.items("students"):
            member = self._member(student)
            if not member.active or self.get(("bar", student, semester, session), False):
                continue
            if not self._modules(student, semester):
                continue
            grades = self._effective_grades(student, semester, session)
            ctx.require(grades is not None, "GradesIncomplete")
            avg = semester_average(grades)
            count += 1
            self.set(("result", student, semester, session), SemesterResult(avg))
            if self.get(("stale", student, semester), False):
                self.delete(("stale", student, semester))
            hit = deliberation_rule(avg, session, ctx.policy)
            if hit is not None:
                flagged.append(FlaggedStudent(student, avg, hit[0], hit[1]))
        report = DeliberationReport(semester, session, tuple(flagged), count)
        self.set(("report", semester, session), report)
        ctx.emit("DeliberationClosed", semester=semester, session=session, deliberated=count, flagged=len(flagged))
        return report

    @external
    def apply_deliberation(self, ctx: Context, semester: str, session: str, awards: list) -> None:
        self._require_role(ctx, ctx.sender, MemberRole.PROFESSOR, "NotProfessor")
        self._gate(ctx)
        semester = self._semester(ctx, semester)
        session = self._session(ctx, session)
        report = self.get(("report", semester, session))
        ctx.require(report is not None, "NoReport")
        rows = {f.student: f for f in report.flagged}
        for award in awards:
            if isinstance(award, dict):
                student, delta = award.get("student"), award.get("delta")
            else:
                student, delta = award
            row = rows.get(student)
            ctx.require(row is not None, "NotFlagged")
            try:
                cents = parse_grade(delta)
            except GradeError:
                ctx.revert("InvalidGrade")
            ctx.require(cents > 0, "InvalidGrade")
            result = self.get(("result", student, semester, session))
            ctx.require(result.adjustment + cents <= row.required_delta, "DeltaTooLarge")
            result = replace(result, adjustment=result.adjustment + cents)
            self.set(("result", student, semester, session), result)
            ctx.emit(
                "DeliberationAdjusted",
                student=student, semester=semester, session=session,
                delta=format_grade(cents), average=format_grade(result.final),
            )

    def _result(self, student: Address, semester: str) -> SemesterResult | None:
        if self.get(("stale", student, semester), False):
            return None
        result = self.get(("result", student, semester, Session.CATCH_UP))
        if result is None:
            result = self.get(("result", student, semester, Session.NORMAL))
        return result

    def _validated(self, ctx: Context, student: Address, semester: str) -> SemesterResult | None:
        result = self._result(student, semester)
        if result is None or not ctx.policy.validated(result.final):
            return None
        return result

    # ---- issuance -------------------------------------------------------

    @external
    def add_transcript(self, ctx: Context, student: Address, semester: str) -> Address:
        self._require_authorized(ctx)
        semester = self._semester(ctx, semester)
        member = self._require_role(ctx, student, MemberRole.STUDENT, "UnknownStudent")
        ctx.require(not self.has(("transcript", student, semester)), "Transcript already exists")
        result = self._validated(ctx, student, semester)
        ctx.require(result is not None, "SemesterNotValidated")
        score = result.final
        note = ctx.policy.mention(score)
        instance = ctx.create("TranscriptCert", student, self.get("head"), member.degree, semester, score, note)
        self.set(("transcript", student, semester), TranscriptRef(instance, score, note))
        ctx.emit("TranscriptPending", instance=instance, student=student, semester=semester)
        return instance

    @external
    def add_diploma(self, ctx: Context, student: Address, degree: str) -> Address:
        self._require_authorized(ctx)
        self._require_role(ctx, student, MemberRole.STUDENT, "UnknownStudent")
        needed = ctx.policy.semesters_per_degree.get(degree)
        ctx.require(needed is not None, "UnknownDegree")
        semesters = SEMESTERS[:needed]
        refs = [self.get(("transcript", student, s)) for s in semesters]
        label = DEGREE_LABELS.get(degree, degree)
        ctx.require(all(r is not None for r in refs), f"The student has not validated the {label}")
        ctx.require(not self.has(("diploma", student, degree)), "Diploma already exists")
        final_year = refs[-2:]
        note = ctx.policy.mention(semester_average([r.score for r in final_year]))
        return self._issue_student_diploma(ctx, student, degree, note)

    def _issue_student_diploma(self, ctx: Context, student: Address, degree: str, note: int) -> Address:
        president = ctx.call(self.get("university"), "owner")
        instance = ctx.create("CertStudent", student, president, self.get("head"), degree, note)
        self.set(("diploma", student, degree), instance)
        self.push(("diplomas", student), instance)
        ctx.emit("DiplomaPending", instance=instance, student=student, degree=degree)
        return instance

    @external
    def issue_doc_diploma(self, ctx: Context, student: Address, degree: str = "Doctorate", note: int = 0) -> Address:
        self._require_authorized(ctx)
        m = self._member(student)
        ctx.require(m is not None and m.role is MemberRole.STUDENT, "UnknownMember")
        ctx.require(not self.has(("diploma", student, degree)), "Diploma already exists")
        return self._issue_student_diploma(ctx, student, degree, note)

    def _issue_professor(self, ctx: Context, professor: Address, degree: str, subject: str, department: str, period: int) -> Address:
        president = ctx.call(self.get("university"), "owner")
        instance = ctx.create("CertProf", professor, president, self.get("head"), degree, subject, department, period)
        self.push(("profCerts", professor), instance)
        ctx.emit("ProfessorDiplomaPending", instance=instance, professor=professor, degree=degree)
        return instance

    @external
    def issue_professor_diploma(self, ctx: Context, professor: Address, degree: str, subject: str, department: str, period: int) -> Address:
        self._require_authorized(ctx)
        m = self._member(professor)
        ctx.require(m is not None and m.role is MemberRole.PROFESSOR, "UnknownMember")
        return self._issue_professor(ctx, professor, degree, subject, department, period)

    # ---- discipline -----------------------------------------------------

    @external
    def apply_sanction(self, ctx: Context, student: Address, kind: str, modules: list | None = None, semester: str | None = None, session: str | None = None) -> None:
        self._require_authorized(ctx)
        m = self._member(student)
        ctx.require(m is not None and m.role is MemberRole.STUDENT, "UnknownStudent")
        if kind == "GradeRemoval":
            modules = tuple(str(x) for x in (modules or ()))
            ctx.require(len(modules) > 0, "EmptySanction")
            removed = set(self.get(("removed", student), frozenset()))
            for module in modules:
                for sem in SEMESTERS:
                    if module not in self.get(("enrolled", student, sem), ()):
                        continue
                    for sess in Session:
                        entry = self.get(("grade", student, module, sem, sess))
                        if entry is None:
                            continue
                        self.delete(("grade", student, module, sem, sess))
                        ctx.emit(
                            "GradeRemoved",
                            student=student, module=module, semester=sem, session=sess, entryDigest=entry.digest,
                        )
                    self.set(("stale", student, sem), True)
                removed.add(module)
            self.set(("removed", student), frozenset(removed))
            sanction = Sanction(student, kind, modules=modules, decided_at=ctx.now)
            detail = ",".join(modules)
        elif kind == "SessionBar":
            semester = self._semester(ctx, semester)
            session = self._session(ctx, session)
            self.set(("bar", student, semester, session), True)
            sanction = Sanction(student, kind, semester=semester, session=session, decided_at=ctx.now)
            detail = f"{semester}/{session.value}"
        else:
            ctx.revert("UnknownSanction")
        self.push("sanctions", sanction)
        ctx.emit("SanctionApplied", student=student, kind=kind, detail=detail)

    # ---- claims ---------------------------------------------------------

    @external
    def submit_claim(self, ctx: Context, module: str, semester: str, session: str) -> int:
        self._gate(ctx)
        session = self._session(ctx, session)
        m = self._member(ctx.sender)
        ctx.require(m is not None and m.role is MemberRole.STUDENT, "NotGradeOwner")
        ctx.require(self.has(("grade", ctx.sender, module, semester, session)), "NoSuchGrade")
        claim_id = self.length("claims") + 1
        self.push("claims", Claim(claim_id, ctx.sender, module, semester, session))
        ctx.emit("ClaimOpened", id=claim_id, student=ctx.sender, module=module, semester=semester, session=session)
        return claim_id

    @external
    def resolve_claim(self, ctx: Context, claim_id: int, outcome: str, new_value=None) -> None:
        self._gate(ctx)
        ctx.require(isinstance(claim_id, int) and 1 <= claim_id <= self.length("claims"), "NoSuchClaim")
        claim = self.get(("claims", claim_id - 1))
        ctx.require(claim.status == "Open", "ClaimClosed")
        key = (claim.student, claim.module, claim.semester, claim.session)
        entry = self.get(("grade",) + key)
        ctx.require(entry is not None, "NoSuchGrade")
        ctx.require(entry.professor == ctx.sender, "NotGradeProfessor")
        if outcome == "Accepted":
            cents = self._grade(ctx, new_value)
            corrected = replace(entry, value=cents, submitted_at=ctx.now)
            self.set(("grade",) + key, corrected)
            self.push(("hist",) + key, corrected)
            self.set(("stale", claim.student, claim.semester), True)
            self.set(("claims", claim_id - 1), replace(claim, status="Accepted", new_value=cents))
            ctx.emit(
                "GradeCorrected",
                student=claim.student, module=claim.module, semester=claim.semester, session=claim.session,
                value=format_grade(cents), entryDigest=corrected.digest,
            )
        elif outcome == "Rejected":
            self.set(("claims", claim_id - 1), replace(claim, status="Rejected"))
        else:
            ctx.revert("UnknownOutcome")
        ctx.emit("ClaimResolved", id=claim_id, outcome=outcome)

    # ---- requests -------------------------------------------------------

    @external
    def submit_request(self, ctx: Context, kind: str, payload: dict | None = None) -> int:
        self._gate(ctx)
        m = self._member(ctx.sender)
        ctx.require(m is not None and m.active, "UnknownMember")
        ctx.require(kind in REQUEST_KINDS, "UnknownRequestKind")
        if kind in ("ExtraModule", "PathChange"):
            ctx.require(m.role is MemberRole.STUDENT, "UnknownRequestKind")
        request_id = self.length("requests") + 1
        self.push("requests", Request(request_id, ctx.sender, kind, dict(payload or {})))
        ctx.emit("RequestSubmitted", id=request_id, requester=ctx.sender, kind=kind)
        return request_id

    def _is_approver(self, who: Address) -> bool:
        if self._authorized(who):
            return True
        m = self._member(who)
        return m is not None and m.role is MemberRole.PROFESSOR and m.department_head

    @external
    def approve_request(self, ctx: Context, request_id: int, verdict: str) -> Address | None:
        ctx.require(self._is_approver(ctx.sender), "NotApprover")
        self._gate(ctx)
        ctx.require(isinstance(request_id, int) and 1 <= request_id <= self.length("requests"), "NoSuchRequest")
        request = self.get(("requests", request_id - 1))
        ctx.require(request.status == "Open", "RequestClosed")
        ctx.require(verdict in ("Approved", "Rejected"), "UnknownVerdict")
        self.set(("requests", request_id - 1), replace(request, status=verdict))
        ctx.emit("RequestResolved", id=request_id, verdict=verdict)
        if verdict == "Rejected":
            return None
        who, p = request.requester, request.payload
        if request.kind == "ExtraModule":
            semester = self._semester(ctx, p.get("semester"))
            modules = self.get(("enrolled", who, semester), ())
            if p.get("module") not in modules:
                self.set(("enrolled", who, semester), modules + (str(p.get("module")),))
            return None
        if request.kind == "PathChange":
            self.set(("member", who), replace(self._member(who), path=str(p.get("path", ""))))
            return None
        member = self._member(who)
        if member.role is MemberRole.PROFESSOR:
            return self._issue_professor(
                ctx, who, str(p.get("degree", "")), str(p.get("subject", "")),
                str(p.get("department", "")), int(p.get("period", 1)),
            )
        ctx.require(member.role is MemberRole.STUDENT, "UnknownRequestKind")
        degree = str(p.get("degree", "Certificate"))
        ctx.require(not self.has(("diploma", who, degree)), "Diploma already exists")
        return self._issue_student_diploma(ctx, who, degree, 0)

    # ---- queries --------------------------------------------------------

    @view
    def query_registry(self, ctx: Context, kind: str, subject: Address, args: dict | None = None):
        args = args or {}
        m = self._member(subject)
        if kind == "isStudentAuthorized":
            return m is not None and m.role is MemberRole.STUDENT and m.active
        if kind == "getStudentInfo":
            if m is None or m.role is not MemberRole.STUDENT:
                return {"registered": False}
            return {
                "registered": True,
                "name": m.name,
                "nationalId": m.national_id,
                "degree": m.degree,
                "path": m.path,
                "active": m.active,
                "enrollment": {s: list(self._modules(subject, s)) for s in SEMESTERS if self._modules(subject, s)},
            }
        if kind == "isAdminAuthorized":
            return self._authorized(subject)
        if kind == "isProfessorRegistered":
            return m is not None and m.role is MemberRole.PROFESSOR
        if kind == "areStudentTranscriptsExist":
            semesters = args.get("semesters")
            if semesters:
                return all(self.has(("transcript", subject, s)) for s in semesters)
            return any(self.has(("transcript", subject, s)) for s in SEMESTERS)
        if kind == "isStudentDiplomaExist":
            degree = args.get("degree")
            if degree:
                return self.has(("diploma", subject, degree))
            return self.length(("diplomas", subject)) > 0
        ctx.revert("UnknownQueryKind")

    @view
    def head(self, ctx: Context) -> Address:
        return self.get("head")

    @view
    def university(self, ctx: Context) -> Address:
        return self.get("university")

    @view
    def member(self, ctx: Context, who: Address) -> MemberRecord | None:
        return self._member(who)

    @view
    def members(self, ctx: Context) -> list[Address]:
        return self.items("members")

    @view
    def is_authorized(self, ctx: Context, who: Address) -> bool:
        return self.get(("authorized", who), False)

    @view
    def current_grade(self, ctx: Context, student: Address, module: str, semester: str, session: str) -> GradeEntry | None:
        return self.get(("grade", student, module, semester, Session(session)))

    @view
    def grade_history(self, ctx: Context, student: Address, module: str, semester: str, session: str) -> list[GradeEntry]:
        return self.items(("hist", student, module, semester, Session(session)))

    @view
    def report(self, ctx: Context, semester: str, session: str) -> DeliberationReport | None:
        return self.get(("report", semester, Session(session)))

    @view
    def semester_result(self, ctx: Context, student: Address, semester: str) -> dict:
        result = self._result(student, semester)
        return {
            "deliberated": result is not None,
            "average": None if result is None else result.final,
            "validated": result is not None and ctx.policy.validated(result.final),
        }

    @view
    def is_barred(self, ctx: Context, student: Address, semester: str, session: str) -> bool:
        return self.get(("bar", student, semester, Session(session)), False)

    @view
    def enrolled_modules(self, ctx: Context, student: Address, semester: str) -> tuple[str, ...]:
        return self._modules(student, semester)

    @view
    def transcript(self, ctx: Context, student: Address, semester: str) -> TranscriptRef | None:
        return self.get(("transcript", student, semester))

    @view
    def diploma(self, ctx: Context, student: Address, degree: str) -> Address | None:
        return self.get(("diploma", student, degree))

    @view
    def claim(self, ctx: Context, claim_id: int) -> Claim | None:
        if not 1 <= claim_id <= self.length("claims"):
            return None
        return self.get(("claims", claim_id - 1))

    @view
    def request(self, ctx: Context, request_id: int) -> Request | None:
        if not 1 <= request_id <= self.length("requests"):
            return None
        return self.get(("requests", request_id - 1))

    @view
    def registration_certificates(self, ctx: Context) -> list:
        return self.items("registrationCertificates")

    @view
    def sanctions(self, ctx: Context) -> list[Sanction]:
        return self.items("sanctions")
