from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Any

from modules._platform import get_platform_full
from modules.ensembles import RNG_DESCRIPTION

if TYPE_CHECKING:
    from pathlib import Path


@dataclass
class RunManifest:
    """Everything needed to rerun a command: its arguments, seeds, tolerances and outputs."""

    file_version = "1.0"

    command: str
    label: str | None = None
    seed: int | None = None
    x_max: float | None = None
    parameters: dict[str, Any] = field(default_factory=dict)
    settings: dict[str, Any] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    results: dict[str, Any] = field(default_factory=dict)
    started: datetime = field(default_factory=lambda: datetime.now(tz=timezone.utc))
    wall_clock: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False, compare=False)

    def finish(self):
        self.wall_clock = time.perf_counter() - self._t0

    @classmethod
    def from_dict(cls, dct: dict):
        return cls(
            command=dct["command"],
            label=dct.get("label"),
            seed=dct.get("seed"),
            x_max=dct.get("x_max"),
            parameters=dct.get("parameters", {}),
            settings=dct.get("settings", {}),
            outputs=dct.get("outputs", []),
            results=dct.get("results", {}),
            started=datetime.fromisoformat(dct["started"]),
            wall_clock=dct.get("wall_clock", 0.0),
        )

    def to_dict(self):
        return {
            "file_version": self.__class__.file_version,
            "command": self.command,
            "label": self.label,
            "seed": self.seed,
            "x_max": self.x_max,
            "parameters": self.parameters,
            "settings": self.settings,
            "outputs": self.outputs,
            "results": self.results,
            "rng": RNG_DESCRIPTION,
            "platform": get_platform_full(),
            "started": self.started.isoformat(),
            "wall_clock": self.wall_clock,
        }

    def write_to(self, path: Path):
        data = self.to_dict()
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as file:
            json.dump(data, file, indent=2, default=str)
        return data
