"""Root certificate authority: registers, revokes and attests university certificates."""

from __future__ import annotations

from dataclasses import dataclass, replace

from blockmedc.crypto import Address
from blockmedc.ledger import Context, Contract, external, view


@dataclass(frozen=True)
class PkiCertificate:
    identity: Address
    public_key: bytes
    expiry: int
    revoked: bool = False
    registered: bool = False


def certificate_valid(cert: PkiCertificate | None, now: int) -> bool:
    return cert is not None and cert.registered and not cert.revoked and now < cert.expiry


class Authority(Contract):
    kind = "Authority"
    code_words = 170

    def constructor(self, ctx: Context) -> None:
        self.set("owner", ctx.sender)

    def _only_owner(self, ctx: Context) -> None:
        ctx.require(ctx.sender == self.get("owner"), "only MCA")

    @external
    def register_cert(self, ctx: Context, university: Address, public_key: bytes, expiry: int) -> None:
        self._only_owner(ctx)
        ctx.require(isinstance(public_key, bytes) and len(public_key) == 32, "BadPublicKey")
        current = self.get(("cert", university))
        ctx.require(not certificate_valid(current, ctx.now), "AlreadyRegistered")
        ctx.require(expiry > ctx.now, "ExpiryInPast")
        if current is not None and current.revoked:
            # renewal of a revoked certificate leaves the revocation list
            self._unlist(university)
        self.set(("cert", university), PkiCertificate(university, public_key, expiry, False, True))
        ctx.emit("Certified", **{"from": ctx.sender, "to": university, "date": ctx.now})
        ctx.emit("CertificateRegistered", university=university, publicKey=public_key, expiry=expiry)

    @external
    def revoke(self, ctx: Context, university: Address) -> None:
        self._only_owner(ctx)
        cert = self.get(("cert", university))
        ctx.require(cert is not None and cert.registered, "NotRegistered")
        ctx.require(not cert.revoked, "AlreadyRevoked")
        self.set(("cert", university), replace(cert, revoked=True))
        self.push("revoked", university)
        ctx.emit("Revoked", **{"from": ctx.sender, "to": university, "date": ctx.now})

    def _unlist(self, university: Address) -> None:
        kept = [a for a in self.items("revoked") if a != university]
        n = self.length("revoked")
        for i, a in enumerate(kept):
            self.set(("revoked", i), a)
        for i in range(len(kept), n):
            self.delete(("revoked", i))
        self.set(("revoked", "len"), len(kept))

    @view
    def is_certificate_valid(self, ctx: Context, university: Address, now: int | None = None) -> bool:
        return certificate_valid(self.get(("cert", university)), ctx.now if now is None else now)

    @view
    def cert_revo_list(self, ctx: Context) -> list[Address]:
        return self.items("revoked")

    @view
    def get_certificate(self, ctx: Context, university: Address) -> PkiCertificate | None:
        return self.get(("cert", university))

    @view
    def owner(self, ctx: Context) -> Address:
        return self.get("owner")
