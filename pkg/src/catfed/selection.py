"""Category bitmasks and the three client-selection strategies.

Clients advertise which label categories they hold as a C-bit mask (bit i set
means at least one sample of category i).  The server picks a round's clients
either uniformly at random (the averaging baseline), one client per category
tolerating redundant coverage (performance strategy), or greedily keeping only
clients that enlarge the covered set (cost strategy).

All functions here are pure: given the same masks and config they return
bit-identical results, and the random baseline draws only from a caller-owned
Generator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

MODE_A_LIMIT = 10


class Mode(enum.Enum):
    """Selection-limit regimes: A caps the pick at 10 clients, B at one per category."""

    A = "A"
    B = "B"


@dataclass(frozen=True)
class CategoryMask:
    """Fixed-width bitset over category ids; bit i (LSB first) is category i."""

    bits: int
    num_categories: int

    def __post_init__(self) -> None:
        if self.num_categories < 1:
            raise ValueError(f"num_categories must be >= 1, got {self.num_categories}")
        if self.bits < 0 or self.bits >> self.num_categories:
            raise ValueError(
                f"bits 0x{self.bits:x} do not fit in {self.num_categories} categories"
            )

    @classmethod
    def from_categories(cls, categories, num_categories: int) -> "CategoryMask":
        bits = 0
        for c in categories:
            c = int(c)
            if not 0 <= c < num_categories:
                raise ValueError(f"category {c} out of range [0, {num_categories})")
            bits |= 1 << c
        return cls(bits, num_categories)

    def popcount(self) -> int:
        return self.bits.bit_count()

    def has(self, category: int) -> bool:
        return bool(self.bits >> category & 1)

    def categories(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.num_categories) if self.bits >> i & 1)

    def union(self, other: "CategoryMask") -> "CategoryMask":
        self._check_width(other)
        return CategoryMask(self.bits | other.bits, self.num_categories)

    def is_full(self) -> bool:
        return self.bits == (1 << self.num_categories) - 1

    def _check_width(self, other: "CategoryMask") -> None:
        if other.num_categories != self.num_categories:
            raise ValueError(
                f"mask widths differ: {self.num_categories} vs {other.num_categories}"
            )

    def __or__(self, other: "CategoryMask") -> "CategoryMask":
        return self.union(other)


def build_mask(labels, num_categories: int) -> CategoryMask:
    """Mask with bit i set iff label i occurs at least once in ``labels``."""
    return CategoryMask.from_categories(labels, num_categories)


@dataclass(frozen=True)
class SelectionConfig:
    """Resolves the client cap N from a mode (A=10, B=C) or an explicit value."""

    num_categories: int
    mode: Mode | None = Mode.B
    limit: int | None = None

    def __post_init__(self) -> None:
        if self.num_categories < 1:
            raise ValueError(f"num_categories must be >= 1, got {self.num_categories}")
        if self.limit is not None and self.limit < 1:
            raise ValueError(f"limit must be positive, got {self.limit}")
        if self.limit is None and self.mode is None:
            raise ValueError("either mode or an explicit limit is required")


def resolve_limit(config: SelectionConfig) -> int:
    """Maximum number of selectable clients; an explicit limit wins over the mode."""
    if config.limit is not None:
        return config.limit
    if config.mode is Mode.A:
        return MODE_A_LIMIT
    return config.num_categories


@dataclass(frozen=True)
class SelectionResult:
    """Ordered selected client indices, their count, and the covered-category union."""

    selected: tuple[int, ...]
    coverage: CategoryMask | None
    skipped_categories: tuple[int, ...] = field(default=())

    @property
    def count(self) -> int:
        return len(self.selected)

    def covered_count(self) -> int:
        return 0 if self.coverage is None else self.coverage.popcount()


def _sorted_client_order(masks: list[CategoryMask]) -> list[int]:
    # Descending popcount, ties broken by ascending client index.
    return sorted(range(len(masks)), key=lambda j: (-masks[j].popcount(), j))


def _check_masks(masks: list[CategoryMask]) -> int:
    if not masks:
        raise ValueError("at least one client mask is required")
    width = masks[0].num_categories
    for m in masks[1:]:
        if m.num_categories != width:
            raise ValueError("all client masks must share num_categories")
    return width


def _union_coverage(masks: list[CategoryMask], selected, num_categories: int) -> CategoryMask:
    bits = 0
    for j in selected:
        bits |= masks[j].bits
    return CategoryMask(bits, num_categories)


def select_random(
    num_clients: int,
    k: int,
    rng: np.random.Generator,
    masks: list[CategoryMask] | None = None,
) -> SelectionResult:
    """Draw k distinct client indices uniformly without replacement.

    The averaging baseline does not look at masks; pass them anyway when known
    so the result reports the coverage the random pick happened to achieve.
    """
    if num_clients < 1:
        raise ValueError(f"num_clients must be positive, got {num_clients}")
    if not 1 <= k <= num_clients:
        raise ValueError(f"k={k} must be in [1, {num_clients}]")
    selected = tuple(int(j) for j in rng.choice(num_clients, size=k, replace=False))
    coverage = None
    if masks is not None:
        width = _check_masks(masks)
        if len(masks) != num_clients:
            raise ValueError(f"expected {num_clients} masks, got {len(masks)}")
        coverage = _union_coverage(masks, selected, width)
    return SelectionResult(selected=selected, coverage=coverage)


def select_performance(
    masks: list[CategoryMask], config: SelectionConfig
) -> SelectionResult:
    """One client per category, in ascending category order.

    Clients are ranked by descending mask popcount (ties by ascending client
    index).  Each category claims the first ranked client that holds it and is
    not yet selected; redundant coverage from earlier picks is deliberately not
    checked, so popular clients soak up multiple categories.  Categories whose
    holders are all taken (or that no client holds) are skipped and reported.
    """
    width = _check_masks(masks)
    if width != config.num_categories:
        raise ValueError(
            f"mask width {width} != config num_categories {config.num_categories}"
        )
    limit = resolve_limit(config)
    order = _sorted_client_order(masks)

    # Ranked positions of the holders of each category, so the per-category
    # scan touches only plausible clients.
    holders: list[list[int]] = [[] for _ in range(width)]
    for rank, j in enumerate(order):
        for c in masks[j].categories():
            holders[c].append(rank)

    selected: list[int] = []
    taken = [False] * len(masks)
    skipped: list[int] = []
    for category in range(width):
        if len(selected) == limit:
            break
        chosen = -1
        for rank in holders[category]:
            j = order[rank]
            if not taken[j]:
                chosen = j
                break
        if chosen < 0:
            skipped.append(category)
            continue
        taken[chosen] = True
        selected.append(chosen)

    return SelectionResult(
        selected=tuple(selected),
        coverage=_union_coverage(masks, selected, width),
        skipped_categories=tuple(skipped),
    )


def select_cost(masks: list[CategoryMask], config: SelectionConfig) -> SelectionResult:
    """Greedy coverage: keep a ranked client only if it adds an uncovered category.

    Scans clients by descending popcount (ties by ascending index) and selects
    a client iff its mask has at least one bit outside the running union; the
    scan stops once the cap is reached or every category is covered.  Every
    selected client therefore strictly grows coverage.
    """
    width = _check_masks(masks)
    if width != config.num_categories:
        raise ValueError(
            f"mask width {width} != config num_categories {config.num_categories}"
        )
    limit = resolve_limit(config)
    full = (1 << width) - 1

    selected: list[int] = []
    psi = 0
    for j in _sorted_client_order(masks):
        if len(selected) == limit or psi == full:
            break
        if psi & masks[j].bits != masks[j].bits:
            selected.append(j)
            psi |= masks[j].bits

    return SelectionResult(
        selected=tuple(selected), coverage=CategoryMask(psi, width)
    )


def trace_selection(
    masks: list[CategoryMask], config: SelectionConfig, strategy: str
) -> list[str]:
    """Human-readable trace of a selection pass: ranked order, then per-step union."""
    width = _check_masks(masks)
    limit = resolve_limit(config)
    order = _sorted_client_order(masks)
    lines = [
        f"strategy={strategy} num_categories={width} limit={limit}",
        "rank order (client: popcount categories):",
    ]
    for rank, j in enumerate(order):
        cats = ",".join(str(c) for c in masks[j].categories())
        lines.append(f"  #{rank}: client {j}: {masks[j].popcount()} [{cats}]")

    if strategy == "cat_performance":
        result = select_performance(masks, config)
    elif strategy == "cat_cost":
        result = select_cost(masks, config)
    else:
        raise ValueError(f"no trace for strategy {strategy!r}")

    lines.append("steps:")
    psi = 0
    for step, j in enumerate(result.selected):
        psi |= masks[j].bits
        covered = ",".join(str(c) for c in CategoryMask(psi, width).categories())
        lines.append(f"  step {step}: select client {j} -> covered [{covered}]")
    if result.skipped_categories:
        skipped = ",".join(str(c) for c in result.skipped_categories)
        lines.append(f"skipped categories (no eligible client): [{skipped}]")
    lines.append(
        f"selected {result.count} clients, covered "
        f"{result.covered_count()}/{width} categories"
    )
    return lines
