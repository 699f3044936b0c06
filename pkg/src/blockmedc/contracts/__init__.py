from blockmedc.contracts.authority import Authority, PkiCertificate
from blockmedc.contracts.certificates import CertProf, CertStudent, TranscriptCert
from blockmedc.contracts.institution import Institution
from blockmedc.contracts.storage import Storage
from blockmedc.contracts.university import University

KINDS = {
    cls.kind: cls
    for cls in (Authority, University, Institution, CertStudent, CertProf, TranscriptCert, Storage)
}

__all__ = [
    "KINDS",
    "Authority",
    "PkiCertificate",
    "University",
    "Institution",
    "CertStudent",
    "CertProf",
    "TranscriptCert",
    "Storage",
]
