import pytest

from blockmedc.crypto import digest

from conftest import T0, YEAR, Campus, modules_for


@pytest.fixture
def grad():
    """Campus with a student whose S1 and S2 transcripts are signed and emitted but not anchored."""
    c = Campus()
    c.professor()
    c.student(modules=modules_for("S1", "S2"))
    c.validated_semester("student1", "S1")
    c.validated_semester("student1", "S2")
    c.t1 = c.issue_transcript("student1", "S1", anchor=False)
    c.t2 = c.issue_transcript("student1", "S2", anchor=False)
    return c


def anchor(c, who, instance, subject="student1", kind="Student", d=None):
    d = c.ledger.view(instance, "payload_digest") if d is None else d
    return c.tx(who, c.uni, "anchor_certificate", c.addr(subject), kind, instance, d)


def test_add_institution_rules(campus):
    c = campus
    assert c.tx("fpn", c.uni, "add_institution", c.addr("x"), c.addr("h"), c.addr("v")).revert_reason == "NotOwner"
    dup = c.tx("ump", c.uni, "add_institution", c.inst, c.addr("fpn"), c.addr("vice"))
    assert dup.revert_reason == "Institution already exists"
    assert c.tx("ump", c.uni, "add_institution", c.addr("i2"), c.addr("i2"), c.addr("v")).revert_reason == "InvalidHead"
    assert c.ledger.view(c.uni, "check_institution", c.inst)
    assert not c.ledger.view(c.uni, "check_institution", c.addr("i2"))
    rec = c.ledger.view(c.uni, "institution_record", c.inst)
    assert rec.head == c.addr("fpn") and rec.vice_head == c.addr("vice")


def test_administrators(campus):
    c = campus
    c.ok("ump", c.uni, "add_administrator", c.addr("admin1"))
    assert c.tx("ump", c.uni, "add_administrator", c.addr("admin1")).revert_reason == "AlreadyAdmin"
    assert c.ledger.view(c.uni, "is_administrator", c.addr("admin1"))
    assert not c.ledger.view(c.uni, "is_administrator", c.addr("fpn"))


def test_gate_closes_after_revocation_and_expiry():
    c = Campus()
    c.ok("mca", c.authority, "revoke", c.addr("ump"))
    assert not c.ledger.view(c.uni, "is_owner_valid")
    r = c.tx("ump", c.uni, "add_administrator", c.addr("admin1"))
    assert r.revert_reason == "UniversityCertInvalid"

    c2 = Campus(expiry=T0 + 100)
    r = c2.tx("ump", c2.uni, "add_administrator", c2.addr("admin1"), timestamp=T0 + 100)
    assert r.revert_reason == "UniversityCertInvalid"


def test_anchor_and_validate(grad):
    c = grad
    r = anchor(c, "fpn", c.t1)
    assert r.ok and [e.name for e in r.events] == ["CertificateAnchored"]
    r = anchor(c, "fpn", c.t2)
    assert [e.name for e in r.events] == ["CertificateAnchored", "AnchorUpdated"]
    d1, d2 = (c.ledger.view(t, "payload_digest") for t in (c.t1, c.t2))
    # both transcripts validate, not only the most recent one
    assert c.ledger.view(c.uni, "validate_cert_student", c.addr("student1"), d1)
    assert c.ledger.view(c.uni, "validate_cert_student", c.addr("student1"), d2)
    assert c.ledger.view(c.uni, "student_certificate", c.addr("student1")) == d2
    assert not c.ledger.view(c.uni, "validate_cert_student", c.addr("prof1"), d1)
    assert not c.ledger.view(c.uni, "validate_cert_prof", c.addr("student1"), d1)
    assert not c.ledger.view(c.uni, "validate_cert_student", c.addr("student1"), digest(b"other"))


def test_anchor_by_admin_and_owner(grad):
    c = grad
    c.ok("ump", c.uni, "add_administrator", c.addr("admin1"))
    assert anchor(c, "admin1", c.t1).ok
    assert anchor(c, "ump", c.t2).ok


@pytest.mark.parametrize("who, mutate, reason", [
    ("student1", {}, "NotAuthorizedSigner"),
    ("fpn", {"kind": "Professor"}, "KindMismatch"),
    ("fpn", {"subject": "prof1"}, "SubjectMismatch"),
    ("fpn", {"d": digest(b"forged")}, "DigestMismatch"),
])
def test_anchor_reverts(grad, who, mutate, reason):
    assert anchor(grad, who, grad.t1, **mutate).revert_reason == reason


def test_anchor_already_anchored(grad):
    assert anchor(grad, "fpn", grad.t1).ok
    assert anchor(grad, "fpn", grad.t1).revert_reason == "AlreadyAnchored"


def test_anchor_requires_signatures_and_emission(campus):
    c = campus
    c.professor()
    c.student(modules=modules_for("S1"))
    c.validated_semester("student1", "S1")
    t = c.ok("fpn", c.inst, "add_transcript", c.addr("student1"), "S1").return_value
    assert anchor(c, "fpn", t).revert_reason == "MissingSignatures"
    assert c.sign_as("fpn", t, "Dean").ok
    assert anchor(c, "fpn", t).revert_reason == "NotEmitted"


def test_anchor_foreign_institution(grad):
    c = grad
    # a second, independently registered university with its own institution
    c.ok("mca", c.authority, "register_cert", c.addr("ump2"), c.pk("ump2"), T0 + YEAR)
    uni2, _ = c.ledger.deploy_contract(c.addr("ump2"), "University", [c.authority])
    inst2, _ = c.ledger.deploy_contract(c.addr("fpn2"), "Institution", [uni2])
    c.ok("ump2", uni2, "add_institution", inst2, c.addr("fpn2"), c.addr("vice2"))
    c.ok("fpn2", inst2, "register_member", "Professor", c.addr("p2"), {})
    c.ok("fpn2", inst2, "register_member", "Student", c.addr("student1"), {"modules": modules_for("S1")})
    for m in modules_for("S1")["S1"]:
        c.ok("p2", inst2, "submit_grade", c.addr("student1"), m, "S1", "Normal", "13.00")
    c.ok("p2", inst2, "deliberate", "S1", "Normal")
    t = c.ok("fpn2", inst2, "add_transcript", c.addr("student1"), "S1").return_value
    assert c.sign_as("fpn2", t, "Dean").ok
    c.ok("fpn2", t, "emit_certificate")
    assert anchor(c, "ump", t).revert_reason == "ForeignInstitution"


def test_revoked_instance_no_longer_validates(grad):
    c = grad
    anchor(c, "fpn", c.t1)
    d1 = c.ledger.view(c.t1, "payload_digest")
    c.ok("fpn", c.t1, "revoke_instance")
    assert not c.ledger.view(c.uni, "validate_cert_student", c.addr("student1"), d1)
