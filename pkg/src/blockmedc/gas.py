"""Linear abstract gas model."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


@dataclass(frozen=True)
class GasSchedule:
    base_tx: int
    per_arg_word: int
    per_state_word_write: int
    per_state_word_read: int
    per_event: int
    per_contract_deploy: int
    per_code_word: int
    per_cas_byte: int

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ValueError(f"gas schedule entry {f.name} must be a positive integer")

    _JSON_KEYS = {
        "baseTx": "base_tx",
        "perArgWord": "per_arg_word",
        "perStateWordWrite": "per_state_word_write",
        "perStateWordRead": "per_state_word_read",
        "perEvent": "per_event",
        "perContractDeploy": "per_contract_deploy",
        "perCodeWord": "per_code_word",
        "perCasByte": "per_cas_byte",
    }

    @classmethod
    def from_json(cls, data: dict) -> GasSchedule:
        missing = set(cls._JSON_KEYS) - set(data)
        if missing:
            raise ValueError(f"gas schedule missing keys: {sorted(missing)}")
        return cls(**{cls._JSON_KEYS[k]: data[k] for k in cls._JSON_KEYS})

    def to_json(self) -> dict:
        inv = {v: k for k, v in self._JSON_KEYS.items()}
        return {inv[k]: v for k, v in asdict(self).items()}


@dataclass
class GasMeter:
    """Accumulates the cost drivers of one transaction and prices them."""

    schedule: GasSchedule
    arg_words: int = 0
    reads: int = 0
    writes: int = 0
    events: int = 0
    deploys: int = 0
    code_words: int = 0
    cas_bytes: int = 0
    # per created contract: gas attributable to its creation
    creations: list = field(default_factory=list)

    @property
    def used(self) -> int:
        s = self.schedule
        return (
            s.base_tx
            + s.per_arg_word * self.arg_words
            + s.per_state_word_read * self.reads
            + s.per_state_word_write * self.writes
            + s.per_event * self.events
            + s.per_contract_deploy * self.deploys
            + s.per_code_word * self.code_words
            + s.per_cas_byte * self.cas_bytes
        )

    def counters(self) -> dict:
        return {
            "argWords": self.arg_words,
            "reads": self.reads,
            "writes": self.writes,
            "events": self.events,
            "deploys": self.deploys,
            "codeWords": self.code_words,
            "casBytes": self.cas_bytes,
        }
