from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from blockmedc.gas import GasSchedule
from blockmedc.grading import GradingPolicy


@dataclass(frozen=True)
class Config:
    gas: GasSchedule
    policy: GradingPolicy

    @classmethod
    def from_json(cls, data: dict) -> Config:
        if "gasSchedule" not in data:
            raise ValueError("config is missing the gasSchedule section")
        return cls(
            gas=GasSchedule.from_json(data["gasSchedule"]),
            policy=GradingPolicy.from_json(data.get("gradingPolicy", {})),
        )

    def to_json(self) -> dict:
        return {"gasSchedule": self.gas.to_json(), "gradingPolicy": self.policy.to_json()}


def default_config_text() -> str:
    return resources.files("blockmedc.data").joinpath("default_config.json").read_text(encoding="utf-8")


def load_config(path: str | Path | None = None) -> Config:
    text = default_config_text() if path is None else Path(path).read_text(encoding="utf-8")
    return Config.from_json(json.loads(text))
