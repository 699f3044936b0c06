"""Content-addressed object store standing in for IPFS.

Objects live at ``objects/<cid[:2]>/<cid>`` where the CID is the lowercase hex
SHA-256 of the content.  Writes go to a temporary file that is renamed into
place, so a reader never observes a partial object and concurrent writers of
the same content are harmless.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from pathlib import Path

from blockmedc.crypto import compute_cid
from blockmedc.errors import IntegrityViolation, ObjectNotFound


class MemoryCas:
    def __init__(self):
        self._objects: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, content: bytes) -> str:
        cid = compute_cid(content)
        with self._lock:
            self._objects.setdefault(cid, bytes(content))
        return cid

    def fetch(self, cid: str) -> bytes:
        try:
            content = self._objects[cid]
        except KeyError:
            raise ObjectNotFound(cid) from None
        if compute_cid(content) != cid:
            raise IntegrityViolation(cid)
        return content

    def __contains__(self, cid: str) -> bool:
        return cid in self._objects

    def cids(self) -> list[str]:
        return sorted(self._objects)


class CasStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.objects = self.root / "objects"
        self.objects.mkdir(parents=True, exist_ok=True)

    def path_for(self, cid: str) -> Path:
        if len(cid) != 64 or any(c not in "0123456789abcdef" for c in cid):
            raise ValueError(f"malformed CID {cid!r}")
        return self.objects / cid[:2] / cid

    def put(self, content: bytes) -> str:
        cid = compute_cid(content)
        path = self.path_for(cid)
        if path.exists():
            return cid
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(content)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return cid

    def fetch(self, cid: str) -> bytes:
        path = self.path_for(cid)
        try:
            content = path.read_bytes()
        except FileNotFoundError:
            raise ObjectNotFound(cid) from None
        if compute_cid(content) != cid:
            raise IntegrityViolation(f"{cid}: stored bytes do not match their identifier")
        return content

    def __contains__(self, cid: str) -> bool:
        try:
            return self.path_for(cid).exists()
        except ValueError:
            return False

    def cids(self) -> list[str]:
        return sorted(p.name for p in self.objects.glob("*/*") if not p.name.startswith(".tmp-"))


def directory_digest(root: str | os.PathLike) -> str:
    """Digest over every file below ``root``: relative paths and contents, sorted."""
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix().encode("utf-8")
        data = path.read_bytes()
        h.update(len(rel).to_bytes(4, "big") + rel)
        h.update(len(data).to_bytes(8, "big") + data)
    return h.hexdigest()
