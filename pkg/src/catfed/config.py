"""Flat key=value run configuration files.

The format is one ``key = value`` per line; ``#`` starts a comment and blank
lines are skipped.  Unknown or duplicate keys are rejected with the line
number so typos fail loudly instead of silently running defaults.
``parse_config(serialize_config(cfg))`` returns an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .costs import CostModel
from .datasets import DATASET_CLASSES
from .errors import ConfigError
from .federation import STRATEGIES, ExperimentConfig
from .network import TrainConfig
from .partitions import KINDS, DistributionSpec
from .selection import Mode

# Hidden-layer widths per dataset; input is the pixel count and the output
# width is the class count, so only the middle of the net varies.
ARCHITECTURES: dict[str, tuple[int, ...]] = {
    "mnist": (100, 100),
    "fmnist": (512,),
    "kmnist10": (512,),
    "femnist47": (784,),
    "kmnist49": (784,),
}


@dataclass(frozen=True)
class RunConfig:
    dataset: str = "mnist"
    data_root: str | None = None
    distribution: str = "D1"
    strategy: str = "cat_performance"
    mode: str = "B"
    limit: int | None = None
    client_fraction: float = 0.1
    rounds: int = 50
    learning_rate: float = 0.003
    batch_size: int = 32
    local_epochs: int = 1
    num_clients: int = 100
    samples_per_client: int = 600
    seed: int = 0
    client_cost: float = 1.0
    server_cost: float = 0.0
    minority_categories: int = 0
    minority_ratio: float = 0.1
    refresh_metadata: bool = False
    seeds: int = 1
    output: str = "results.csv"

    def __post_init__(self) -> None:
        if self.dataset not in DATASET_CLASSES:
            raise ConfigError(
                f"dataset must be one of {sorted(DATASET_CLASSES)}, got {self.dataset!r}"
            )
        if self.distribution not in KINDS:
            raise ConfigError(f"distribution must be one of {KINDS}, got {self.distribution!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.mode not in ("A", "B"):
            raise ConfigError(f"mode must be A or B, got {self.mode!r}")
        if self.seeds < 1:
            raise ConfigError(f"seeds must be >= 1, got {self.seeds}")

    def selection_mode(self) -> Mode:
        return Mode.A if self.mode == "A" else Mode.B

    def distribution_spec(self) -> DistributionSpec:
        imbalance = None
        if self.minority_categories:
            imbalance = (self.minority_categories, self.minority_ratio)
        return DistributionSpec(
            kind=self.distribution,
            num_clients=self.num_clients,
            samples_per_client=self.samples_per_client,
            imbalance=imbalance,
            seed=self.seed,
        )

    def experiment_config(self, seed: int | None = None) -> ExperimentConfig:
        return ExperimentConfig(
            strategy=self.strategy,
            rounds=self.rounds,
            client_fraction=self.client_fraction,
            mode=self.selection_mode(),
            limit=self.limit,
            hidden=ARCHITECTURES[self.dataset],
            train=TrainConfig(
                learning_rate=self.learning_rate,
                batch_size=self.batch_size,
                local_epochs=self.local_epochs,
            ),
            cost=CostModel(client_cost=self.client_cost, server_cost=self.server_cost),
            seed=self.seed if seed is None else seed,
            refresh_metadata=self.refresh_metadata,
        )


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    raise ValueError(f"expected true or false, got {raw!r}")


def _parse_optional_int(raw: str) -> int | None:
    return None if raw.lower() == "none" else int(raw)


def _parse_optional_str(raw: str) -> str | None:
    return None if raw.lower() == "none" else raw


_PARSERS = {
    "dataset": str,
    "data_root": _parse_optional_str,
    "distribution": str,
    "strategy": str,
    "mode": str.upper,
    "limit": _parse_optional_int,
    "client_fraction": float,
    "rounds": int,
    "learning_rate": float,
    "batch_size": int,
    "local_epochs": int,
    "num_clients": int,
    "samples_per_client": int,
    "seed": int,
    "client_cost": float,
    "server_cost": float,
    "minority_categories": int,
    "minority_ratio": float,
    "refresh_metadata": _parse_bool,
    "seeds": int,
    "output": str,
}

assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](raw_value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    try:
        return RunConfig(**values)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def serialize_config(config: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value is None:
            rendered = "none"
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
