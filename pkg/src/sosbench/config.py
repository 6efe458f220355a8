"""Run configuration shared by the CLI and the scripts."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class RunConfig:
    fuel: int = 30
    max_universe: int = 5000
    max_label_size: int = 2
    max_term_size: int = 5
    samples: int = 200
    seed: int = 0
    json: bool = False

    def __post_init__(self):
        for name in ("fuel", "max_universe", "max_term_size", "samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_label_size < 0 or self.seed < 0:
            raise ValueError("max_label_size and seed must be non-negative")

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("json")
        return d
