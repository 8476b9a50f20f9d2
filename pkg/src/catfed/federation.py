"""Round-based federated averaging with pluggable client selection.

One experiment runs R rounds against a fixed client partition.  Every round:
the server gathers (client id, category mask) metadata, the strategy picks a
subset, each selected client runs local SGD from the current global weights
on its own samples, and the server replaces the global model with the
sample-count-weighted average of the returned weights.  The global model is
then scored on the held-out test set and the round is logged together with
its communication cost.

Everything is driven by one experiment seed.  Model init, the random
baseline's draws, and each client's shuffling use independent streams derived
from (seed, stream tag, round, client id), so results are reproducible
bit-for-bit regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostLedger, CostModel, check_loss_decomposition
from .datasets import LabeledDataset
from .errors import RoundError
from .network import (
    EvalReport,
    ModelParams,
    TrainConfig,
    client_update,
    evaluate,
    init_model,
)
from .partitions import ClientPartition
from .seeding import (
    STREAM_CLIENT_UPDATE,
    STREAM_MODEL_INIT,
    STREAM_SELECTION,
    derive_rng,
)
from .selection import (
    CategoryMask,
    Mode,
    SelectionConfig,
    SelectionResult,
    select_cost,
    select_performance,
    select_random,
)

STRATEGIES = ("fedavg_random", "cat_performance", "cat_cost")


@dataclass(frozen=True)
class ClientState:
    client_id: int
    indices: np.ndarray
    mask: CategoryMask

    @property
    def num_samples(self) -> int:
        return len(self.indices)


def clients_from_partition(partition: ClientPartition) -> tuple[ClientState, ...]:
    return tuple(
        ClientState(client_id=j, indices=idx, mask=mask)
        for j, (idx, mask) in enumerate(zip(partition.assignments, partition.masks))
    )


@dataclass(frozen=True)
class ExperimentConfig:
    strategy: str
    rounds: int = 50
    client_fraction: float = 0.1
    mode: Mode = Mode.B
    limit: int | None = None
    hidden: tuple[int, ...] = (100, 100)
    train: TrainConfig = field(default_factory=TrainConfig)
    cost: CostModel = field(default_factory=CostModel)
    seed: int = 0
    metadata_pool: tuple[int, ...] | None = None
    refresh_metadata: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be positive, got {self.rounds}")
        if not 0.0 < self.client_fraction <= 1.0:
            raise ValueError(
                f"client_fraction must be in (0, 1], got {self.client_fraction}"
            )
        if not all(h > 0 for h in self.hidden):
            raise ValueError(f"hidden widths must be positive, got {self.hidden}")


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    strategy: str
    selected: tuple[int, ...]
    categories_covered: int
    accuracy: float
    test_loss: float
    round_cost: float
    cumulative_cost: float
    data_seen: int

    @property
    def selected_k(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[RoundRecord, ...]
    model: ModelParams

    @property
    def final_accuracy(self) -> float:
        return self.records[-1].accuracy

    @property
    def cumulative_cost(self) -> float:
        return self.records[-1].cumulative_cost


def metadata_round(
    clients: tuple[ClientState, ...], pool: tuple[int, ...] | None = None
) -> list[tuple[int, CategoryMask]]:
    """Category-mask advertisements, ascending client id (the selection order)."""
    if pool is None:
        chosen = clients
    else:
        by_id = {c.client_id: c for c in clients}
        try:
            chosen = tuple(by_id[j] for j in pool)
        except KeyError as exc:
            raise RoundError(f"metadata pool names unknown client {exc.args[0]}") from exc
    return sorted(((c.client_id, c.mask) for c in chosen), key=lambda item: item[0])


def aggregate_weighted(
    params: list[ModelParams], weights: list[float] | np.ndarray
) -> ModelParams:
    """Elementwise average of parameter sets, weighted and normalized."""
    if not params:
        raise RoundError("nothing to aggregate")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(params),):
        raise RoundError(f"{len(params)} updates but {weights.size} weights")
    if np.any(weights <= 0):
        raise RoundError("aggregation weights must be positive")
    arch = params[0].architecture
    for p in params[1:]:
        if p.architecture != arch:
            raise RoundError(f"architecture mismatch: {p.architecture} != {arch}")
    coef = weights / weights.sum()
    new_weights = tuple(
        sum(c * p.weights[layer] for c, p in zip(coef, params))
        for layer in range(len(arch) - 1)
    )
    new_biases = tuple(
        sum(c * p.biases[layer] for c, p in zip(coef, params))
        for layer in range(len(arch) - 1)
    )
    return ModelParams(weights=new_weights, biases=new_biases)


def _fedavg_k(fraction: float, num_clients: int) -> int:
    # Half rounds up so a 0.1 fraction of 25 clients still fields 3.
    return max(int(np.floor(fraction * num_clients + 0.5)), 1)


def _select(
    config: ExperimentConfig,
    masks: list[CategoryMask],
    num_categories: int,
    round_index: int,
) -> SelectionResult:
    if config.strategy == "fedavg_random":
        k = min(_fedavg_k(config.client_fraction, len(masks)), len(masks))
        rng = derive_rng(config.seed, STREAM_SELECTION, round_index)
        return select_random(len(masks), k, rng, masks=masks)
    sel = SelectionConfig(
        num_categories=num_categories, mode=config.mode, limit=config.limit
    )
    if config.strategy == "cat_performance":
        return select_performance(masks, sel)
    return select_cost(masks, sel)


def run_round(
    config: ExperimentConfig,
    model: ModelParams,
    clients: tuple[ClientState, ...],
    pool: list[tuple[int, CategoryMask]],
    train_dataset: LabeledDataset,
    test_dataset: LabeledDataset,
    ledger: CostLedger,
    round_index: int,
) -> tuple[ModelParams, RoundRecord]:
    masks = [mask for _, mask in pool]
    result = _select(config, masks, train_dataset.num_categories, round_index)
    if result.count == 0:
        raise RoundError(f"round {round_index}: selection came back empty")
    selected_ids = tuple(pool[pos][0] for pos in result.selected)

    by_id = {c.client_id: c for c in clients}
    updates: list[ModelParams] = []
    weights: list[float] = []
    for client_id in sorted(selected_ids):
        client = by_id[client_id]
        rng = derive_rng(config.seed, STREAM_CLIENT_UPDATE, round_index, client_id)
        updates.append(
            client_update(
                model,
                train_dataset.images[client.indices],
                train_dataset.labels[client.indices],
                config.train,
                rng,
            )
        )
        weights.append(float(client.num_samples))

    new_model = aggregate_weighted(updates, weights)
    report = evaluate(new_model, test_dataset.images, test_dataset.labels)
    # Regrouping per-sample losses by label must re-add to the same total.
    decomposition = check_loss_decomposition([report])
    if decomposition.relative_gap > 1e-9:
        raise RoundError(
            f"round {round_index}: loss decomposition gap "
            f"{decomposition.relative_gap:.3e} exceeds 1e-9"
        )

    covered = result.covered_count()
    round_cost, cumulative = ledger.record(
        result.count, sum(by_id[j].num_samples for j in selected_ids)
    )
    record = RoundRecord(
        round_index=round_index,
        strategy=config.strategy,
        selected=tuple(sorted(selected_ids)),
        categories_covered=covered if covered is not None else 0,
        accuracy=report.accuracy,
        test_loss=report.total_loss,
        round_cost=round_cost,
        cumulative_cost=cumulative,
        data_seen=ledger.total_data_seen,
    )
    return new_model, record


def run_experiment(
    config: ExperimentConfig,
    train_dataset: LabeledDataset,
    partition: ClientPartition,
    test_dataset: LabeledDataset,
) -> ExperimentResult:
    """Run the full federated loop and return per-round records plus the model."""
    if train_dataset.num_categories != test_dataset.num_categories:
        raise RoundError(
            f"train/test category counts differ: {train_dataset.num_categories} "
            f"!= {test_dataset.num_categories}"
        )
    clients = clients_from_partition(partition)
    architecture = [
        train_dataset.images.shape[1],
        *config.hidden,
        train_dataset.num_categories,
    ]
    model = init_model(architecture, derive_rng(config.seed, STREAM_MODEL_INIT))
    ledger = CostLedger(config.cost)

    pool = metadata_round(clients, config.metadata_pool)
    records: list[RoundRecord] = []
    for round_index in range(1, config.rounds + 1):
        if config.refresh_metadata and round_index > 1:
            pool = metadata_round(clients, config.metadata_pool)
        model, record = run_round(
            config, model, clients, pool, train_dataset, test_dataset,
            ledger, round_index,
        )
        records.append(record)
    return ExperimentResult(config=config, records=tuple(records), model=model)


def evaluate_clients(
    model: ModelParams,
    dataset: LabeledDataset,
    clients: tuple[ClientState, ...],
) -> list[EvalReport]:
    """Local evaluation of one model on every client's own shard."""
    return [
        evaluate(model, dataset.images[c.indices], dataset.labels[c.indices])
        for c in clients
    ]
