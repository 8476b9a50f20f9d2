"""Communication-cost accounting and loss bookkeeping checks.

The cost of one round is ``K * client_cost + server_cost`` where K is the
number of participating clients: each selected client uploads one update and
the server broadcasts once.  Cumulative cost simply sums rounds, so with a
fixed K it is ``R*K*client_cost + R*server_cost``.  The derivative of the
cumulative cost in the per-client price, averaged over rounds, is the mean
number of clients per round; that quantity is what an N-sweep trades against
coverage.

Data seen is the total number of samples held by the selected clients,
counted every round they participate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .network import EvalReport


@dataclass(frozen=True)
class CostModel:
    client_cost: float = 1.0
    server_cost: float = 0.0

    def __post_init__(self) -> None:
        if self.client_cost < 0 or self.server_cost < 0:
            raise ValueError(
                f"costs must be nonnegative, got client={self.client_cost} "
                f"server={self.server_cost}"
            )


def round_cost(model: CostModel, num_selected: int) -> float:
    if num_selected < 0:
        raise ValueError(f"num_selected must be >= 0, got {num_selected}")
    return num_selected * model.client_cost + model.server_cost


def cumulative_cost(model: CostModel, selection_sizes: Sequence[int]) -> float:
    return sum(round_cost(model, k) for k in selection_sizes)


def marginal_cost_per_client_per_round(
    model: CostModel, selection_sizes: Sequence[int]
) -> float:
    """d(cumulative cost)/d(client_cost), averaged over rounds: the mean K."""
    if not selection_sizes:
        raise ValueError("needs at least one round")
    return sum(selection_sizes) / len(selection_sizes)


def data_seen(sample_counts: Iterable[int]) -> int:
    return int(sum(sample_counts))


class CostLedger:
    """Accumulates per-round costs and data volume for one experiment arm."""

    def __init__(self, model: CostModel) -> None:
        self.model = model
        self.selection_sizes: list[int] = []
        self._cumulative = 0.0
        self._data_seen = 0

    def record(self, num_selected: int, samples_seen: int) -> tuple[float, float]:
        """Log one round; returns (round cost, cumulative cost)."""
        cost = round_cost(self.model, num_selected)
        self.selection_sizes.append(num_selected)
        self._cumulative += cost
        self._data_seen += int(samples_seen)
        return cost, self._cumulative

    @property
    def cumulative(self) -> float:
        return self._cumulative

    @property
    def total_data_seen(self) -> int:
        return self._data_seen

    @property
    def rounds(self) -> int:
        return len(self.selection_sizes)


@dataclass(frozen=True)
class DecompositionReport:
    client_major: float
    category_major: float
    relative_gap: float
    total_samples: int
    undefined_categories: tuple[int, ...]

    @property
    def has_undefined(self) -> bool:
        return bool(self.undefined_categories)


def check_loss_decomposition(
    reports: Sequence[EvalReport], num_categories: int | None = None
) -> DecompositionReport:
    """Cross-check the two ways of summing a population's loss.

    Client-major sums each client's total loss; category-major regroups the
    same per-sample terms by label first.  Both divide by the population
    sample count, so the two totals must agree up to float roundoff.
    Categories that no client holds contribute nothing to either side; they
    are reported as undefined rather than silently treated as zero-loss.
    """
    if not reports:
        raise ValueError("needs at least one client report")
    if num_categories is None:
        num_categories = reports[0].num_categories
    for r in reports:
        if r.num_categories != num_categories:
            raise ValueError(
                f"mixed category counts: {r.num_categories} != {num_categories}"
            )

    total_n = sum(r.num_samples for r in reports)
    if total_n == 0:
        raise ValueError("no samples across the client reports")

    client_major = sum(r.summed_loss for r in reports) / total_n

    category_totals = [0.0] * num_categories
    category_counts = [0] * num_categories
    for r in reports:
        for c, (loss_sum, count) in r.per_category_loss.items():
            category_totals[c] += loss_sum
            category_counts[c] += count
    category_major = sum(category_totals) / total_n

    gap = abs(client_major - category_major)
    scale = max(abs(client_major), abs(category_major), 1e-300)
    return DecompositionReport(
        client_major=client_major,
        category_major=category_major,
        relative_gap=gap / scale,
        total_samples=total_n,
        undefined_categories=tuple(
            c for c in range(num_categories) if category_counts[c] == 0
        ),
    )
