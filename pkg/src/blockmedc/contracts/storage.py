from __future__ import annotations

from dataclasses import dataclass

from blockmedc.crypto import Address
from blockmedc.ledger import Context, Contract, external, view


@dataclass(frozen=True)
class StoredFile:
    id: int
    cid: str
    stored_at: int
    label: str


class Storage(Contract):
    """Links ledger accounts to documents held in the content-addressed store."""

    kind = "Storage"
    code_words = 130

    def constructor(self, ctx: Context) -> None:
        self.set("owner", ctx.sender)

    def _only_owner(self, ctx: Context) -> None:
        ctx.require(ctx.sender == self.get("owner"), "NotOwner")

    @external
    def set_user(self, ctx: Context, user: Address) -> None:
        self._only_owner(ctx)
        ctx.require(not self.get(("isSet", user), False), "AlreadySet")
        self.set(("isSet", user), True)
        self.set(("lastID", user), 0)
        ctx.emit("UserSet", user=user)

    @external
    def update_user(self, ctx: Context, user: Address, meta: str) -> None:
        self._only_owner(ctx)
        ctx.require(self.get(("isSet", user), False), "NotSet")
        self.set(("meta", user), meta)
        ctx.emit("UserUpdated", user=user, meta=meta)

    @external
    def store(self, ctx: Context, user: Address, content: bytes, label: str) -> tuple[str, int]:
        self._only_owner(ctx)
        ctx.require(self.get(("isSet", user), False), "UserNotSet")
        ctx.require(isinstance(content, bytes) and len(content) > 0, "EmptyContent")
        cid = ctx.cas.put(content)
        ctx.charge_cas(len(content))
        file_id = self.get(("lastID", user)) + 1
        self.set(("UserFiles", user, file_id), StoredFile(file_id, cid, ctx.now, label))
        self.set(("lastID", user), file_id)
        ctx.emit("FileStored", user=user, id=file_id, cid=cid, label=label)
        return cid, file_id

    def _require_set(self, ctx: Context, user: Address) -> int:
        ctx.require(self.get(("isSet", user), False), "UserNotSet")
        return self.get(("lastID", user))

    @view
    def get_last_user_id(self, ctx: Context, user: Address) -> int:
        return self._require_set(ctx, user)

    @view
    def get_last(self, ctx: Context, user: Address) -> StoredFile:
        last = self._require_set(ctx, user)
        ctx.require(last >= 1, "NoFiles")
        return self.get(("UserFiles", user, last))

    @view
    def get_all(self, ctx: Context, user: Address) -> list[StoredFile]:
        last = self._require_set(ctx, user)
        return [self.get(("UserFiles", user, i)) for i in range(1, last + 1)]

    @view
    def get_meta(self, ctx: Context, user: Address) -> str | None:
        return self.get(("meta", user))
