class BlockMedcError(Exception):
    pass


class Revert(BlockMedcError):
    """Raised by contract code; the enclosing transaction is rolled back."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class LedgerError(BlockMedcError):
    """A transaction rejected before execution; nothing is recorded."""


class UnknownKind(LedgerError):
    pass


class ArityMismatch(LedgerError):
    pass


class UnknownContract(LedgerError):
    pass


class UnknownOperation(LedgerError):
    pass


class ContractDestroyed(LedgerError):
    pass


class BadNonce(LedgerError):
    pass


class BadTimestamp(LedgerError):
    pass


class ObjectNotFound(BlockMedcError, KeyError):
    pass


class IntegrityViolation(BlockMedcError):
    pass


class UnknownSubject(BlockMedcError, LookupError):
    pass
