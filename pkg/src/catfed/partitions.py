"""Synthesis of non-IID client partitions from a labeled dataset.

Ten distribution families are supported.  The first five pair a per-client
category-count range with a per-category client-presence range and a shape for
how presence falls across category ids:

  D1  10 classes, counts 1-5,  presence 3-70, presence decays with category id
  D2  47 classes, counts 1-15, presence 6-30, bell over intermediate ids
  D3  49 classes, counts 1-15, presence 6-30, deformed (asymmetric) bell
  D4  47 classes, counts 1-4,  presence 1-13, skewed with a scarce tail
  D5  49 classes, counts 1-4,  presence 1-18, roughly half the ids very scarce

D6-D10 fix the exact category count per client: 1/3/5/7/9 for the 10-class
datasets and 1/3/10/25/35 for the 47- and 49-class ones.

Generation is two-phase: first realize an integer presence profile inside the
bounds (summing to the drawn total of per-client counts), then assign
categories to clients with a largest-remaining-capacity bipartite fill, which
succeeds whenever the margins are realizable.  Scarce categories are placed
first so they land on high-capacity clients.  Samples are then drawn without
replacement from per-category pools, split as evenly as possible across each
client's categories; exhausted pools fall back to drawing with replacement and
the event is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import LabeledDataset
from .errors import GenerationError
from .seeding import STREAM_IMBALANCE, STREAM_PARTITION, derive_rng
from .selection import CategoryMask, build_mask

KINDS = tuple(f"D{i}" for i in range(1, 11))

# kind -> (expected class count, count bounds, presence bounds)
_RANGE_KINDS = {
    "D1": (10, (1, 5), (3, 70)),
    "D2": (47, (1, 15), (6, 30)),
    "D3": (49, (1, 15), (6, 30)),
    "D4": (47, (1, 4), (1, 13)),
    "D5": (49, (1, 4), (1, 18)),
}

# class-count family -> categories per client for D6..D10
_FIXED_COUNTS = {
    10: (1, 3, 5, 7, 9),
    47: (1, 3, 10, 25, 35),
    49: (1, 3, 10, 25, 35),
}

_MAX_ATTEMPTS = 20


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    num_clients: int = 100
    samples_per_client: int = 600
    imbalance: tuple[int, float] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.num_clients < 1:
            raise ValueError(f"num_clients must be positive, got {self.num_clients}")
        if self.samples_per_client < 1:
            raise ValueError(
                f"samples_per_client must be positive, got {self.samples_per_client}"
            )
        if self.imbalance is not None:
            minority_count, ratio = self.imbalance
            if minority_count < 0:
                raise ValueError(f"minority count must be >= 0, got {minority_count}")
            if minority_count and not 0.0 < ratio < 1.0:
                raise ValueError(f"imbalance ratio must be in (0, 1), got {ratio}")


@dataclass(frozen=True)
class ClientPartition:
    """Per-client sample assignments plus the masks they imply."""

    spec: DistributionSpec
    num_categories: int
    assignments: tuple[np.ndarray, ...]
    masks: tuple[CategoryMask, ...]
    category_presence: np.ndarray
    replacement_events: tuple[tuple[int, int, int], ...] = field(default=())

    @property
    def num_clients(self) -> int:
        return len(self.assignments)

    def client_sample_counts(self) -> np.ndarray:
        return np.array([len(a) for a in self.assignments])


def kind_bounds(kind: str, num_categories: int, num_clients: int,
                samples_per_client: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Effective (count, presence) bounds, clipped to the instance size."""
    if kind in _RANGE_KINDS:
        expected, counts, presence = _RANGE_KINDS[kind]
        if num_categories != expected:
            raise ValueError(
                f"{kind} is defined for {expected}-class datasets, got {num_categories}"
            )
    else:
        if num_categories not in _FIXED_COUNTS:
            raise ValueError(
                f"{kind} is defined for class counts {sorted(_FIXED_COUNTS)}, "
                f"got {num_categories}"
            )
        fixed = _FIXED_COUNTS[num_categories][KINDS.index(kind) - 5]
        counts, presence = (fixed, fixed), (0, num_clients)
    count_hi = min(counts[1], samples_per_client, num_categories)
    count_lo = min(counts[0], count_hi)
    presence_hi = min(presence[1], num_clients)
    presence_lo = min(presence[0], presence_hi)
    return (count_lo, count_hi), (presence_lo, presence_hi)


def _raw_profile(kind: str, num_categories: int, rng: np.random.Generator) -> np.ndarray:
    """Unnormalized presence shape over category ids for D1-D5."""
    ids = np.arange(num_categories, dtype=np.float64)
    if kind == "D1":
        base = np.linspace(1.0, 0.05, num_categories)
        base *= rng.uniform(0.9, 1.1, num_categories)
        return np.sort(base)[::-1]
    if kind in ("D2", "D3"):
        mu = num_categories * (0.5 + rng.uniform(-0.08, 0.08))
        if kind == "D2":
            sigma_left = sigma_right = num_categories * 0.22
        else:
            sigma_left = num_categories * 0.16
            sigma_right = num_categories * 0.30
        sigma = np.where(ids < mu, sigma_left, sigma_right)
        base = np.exp(-0.5 * ((ids - mu) / sigma) ** 2)
        return base * rng.uniform(0.85, 1.15, num_categories)
    if kind == "D4":
        peak = num_categories * 0.25
        base = (ids + 1.0) ** 1.3 * np.exp(-ids / max(peak, 1.0))
        return base * rng.uniform(0.85, 1.15, num_categories)
    raise AssertionError(kind)


def _repair_sum(
    profile: np.ndarray,
    lo: int,
    hi: int,
    target: int,
    rng: np.random.Generator,
    preferred: np.ndarray | None = None,
) -> None:
    """Nudge entries by +-1 (inside [lo, hi]) until the profile sums to target.

    When given, ``preferred`` marks the entries to adjust first; the rest are
    touched only once the preferred ones are saturated.
    """
    while True:
        delta = target - int(profile.sum())
        if delta == 0:
            return
        step = 1 if delta > 0 else -1
        room = profile < hi if step > 0 else profile > lo
        candidates = np.flatnonzero(room & preferred) if preferred is not None else np.array([], int)
        if candidates.size == 0:
            candidates = np.flatnonzero(room)
        if candidates.size == 0:
            raise GenerationError(
                f"presence sum {int(profile.sum())} cannot reach {target} in [{lo}, {hi}]"
            )
        picked = rng.choice(candidates, size=min(abs(delta), candidates.size), replace=False)
        profile[picked] += step


def _repair_sum_monotone(profile: np.ndarray, lo: int, hi: int, target: int) -> None:
    """Like _repair_sum but preserves a non-increasing profile (D1)."""
    while True:
        delta = target - int(profile.sum())
        if delta == 0:
            return
        if delta > 0:
            addable = np.flatnonzero(
                (profile < hi)
                & (np.concatenate(([hi], profile[:-1])) > profile)
            )
            if addable.size == 0:
                raise GenerationError(f"cannot raise monotone profile to {target}")
            profile[addable[0]] += 1
        else:
            droppable = np.flatnonzero(
                (profile > lo)
                & (profile > np.concatenate((profile[1:], [lo])))
            )
            if droppable.size == 0:
                raise GenerationError(f"cannot lower monotone profile to {target}")
            profile[droppable[-1]] -= 1


def effective_presence_lo(lo: int, total_slots: int, num_categories: int) -> int:
    """Presence floor, relaxed when there are too few slots to honor it.

    Degenerate instances (one client, tiny counts) cannot put every category
    on ``lo`` clients; the floor then drops to what the slots support, down to
    zero, leaving the tail categories unassigned.
    """
    if total_slots < num_categories * lo:
        return total_slots // num_categories
    return lo


def _presence_profile(
    kind: str,
    num_categories: int,
    target: int,
    presence_lo: int,
    presence_hi: int,
    rng: np.random.Generator,
) -> np.ndarray:
    presence_lo = effective_presence_lo(presence_lo, target, num_categories)
    if target > num_categories * presence_hi:
        raise GenerationError(
            f"total category slots {target} exceed presence capacity "
            f"{num_categories * presence_hi}"
        )

    if kind == "D5":
        # Scarce tail: the upper half of category ids sits at presence 1-2
        # (clipped to the bounds); the rest follows a skewed bump.
        n_scarce = num_categories // 2
        scarce_ids = np.arange(num_categories - n_scarce, num_categories)
        profile = np.zeros(num_categories, dtype=np.int64)
        profile[scarce_ids] = np.clip(
            rng.integers(1, 3, size=n_scarce), presence_lo, presence_hi
        )
        dense_ids = np.arange(num_categories - n_scarce)
        raw = _raw_profile("D4", dense_ids.size, rng)
        remaining = target - int(profile[scarce_ids].sum())
        dense = np.clip(
            np.round(raw * remaining / raw.sum()).astype(np.int64),
            presence_lo,
            presence_hi,
        )
        profile[dense_ids] = dense
        preferred = np.zeros(num_categories, dtype=bool)
        preferred[dense_ids] = True
        _repair_sum(profile, presence_lo, presence_hi, target, rng, preferred=preferred)
        return profile

    raw = _raw_profile(kind, num_categories, rng)
    profile = np.clip(
        np.round(raw * target / raw.sum()).astype(np.int64), presence_lo, presence_hi
    )
    if kind == "D1":
        profile = np.sort(profile)[::-1]
        _repair_sum_monotone(profile, presence_lo, presence_hi, target)
    else:
        _repair_sum(profile, presence_lo, presence_hi, target, rng)
    return profile


def _assign_categories(
    presence: np.ndarray, counts: np.ndarray, rng: np.random.Generator
) -> list[np.ndarray]:
    """Bipartite fill honoring per-category presence and per-client counts.

    Categories are placed scarcest-first onto the clients with the largest
    remaining capacity (random tie-breaks), which realizes any feasible margin
    pair and naturally stacks rare categories on category-rich clients.
    """
    num_clients = counts.size
    capacity = counts.astype(np.int64).copy()
    members: list[list[int]] = [[] for _ in range(num_clients)]
    order = np.lexsort((np.arange(presence.size), presence))
    for c in order:
        need = int(presence[c])
        if need == 0:
            continue
        eligible = np.flatnonzero(capacity > 0)
        if eligible.size < need:
            raise GenerationError(
                f"category {c} needs {need} clients, only {eligible.size} have capacity"
            )
        tie = rng.random(eligible.size)
        ranked = eligible[np.lexsort((tie, -capacity[eligible]))]
        for j in ranked[:need]:
            members[int(j)].append(int(c))
            capacity[j] -= 1
    return [np.array(sorted(cats), dtype=np.int64) for cats in members]


def _draw_samples(
    client_categories: list[np.ndarray],
    labels: np.ndarray,
    samples_per_client: int,
    num_categories: int,
    rng: np.random.Generator,
):
    pools = []
    for c in range(num_categories):
        pool = np.flatnonzero(labels == c)
        pools.append(rng.permutation(pool) if pool.size else pool)
    cursors = np.zeros(num_categories, dtype=np.int64)

    assignments: list[np.ndarray] = []
    events: list[tuple[int, int, int]] = []
    for j, cats in enumerate(client_categories):
        base, rem = divmod(samples_per_client, len(cats))
        chunks: list[np.ndarray] = []
        for pos, c in enumerate(cats):
            quota = base + (1 if pos < rem else 0)
            pool = pools[c]
            if pool.size == 0:
                raise GenerationError(f"dataset holds no samples of category {c}")
            take = min(quota, pool.size - int(cursors[c]))
            if take > 0:
                chunks.append(pool[cursors[c] : cursors[c] + take])
                cursors[c] += take
            short = quota - take
            if short > 0:
                # Global pool exhausted: fall back to drawing with replacement.
                chunks.append(rng.choice(pool, size=short, replace=True))
                events.append((j, int(c), short))
        assignments.append(np.concatenate(chunks))
    return assignments, events


def generate_partition_from_labels(
    spec: DistributionSpec, labels: np.ndarray, num_categories: int
) -> ClientPartition:
    """Core generator; see generate_partition for the dataset-level entry point."""
    count_bounds, presence_bounds = kind_bounds(
        spec.kind, num_categories, spec.num_clients, spec.samples_per_client
    )
    last_error = "no attempt made"
    for attempt in range(_MAX_ATTEMPTS):
        rng = derive_rng(spec.seed, STREAM_PARTITION, attempt)
        try:
            counts = rng.integers(
                count_bounds[0], count_bounds[1] + 1, size=spec.num_clients
            )
            if spec.kind in _RANGE_KINDS:
                presence = _presence_profile(
                    spec.kind,
                    num_categories,
                    int(counts.sum()),
                    presence_bounds[0],
                    presence_bounds[1],
                    rng,
                )
                client_categories = _assign_categories(presence, counts, rng)
            else:
                client_categories = [
                    np.sort(rng.choice(num_categories, size=int(k), replace=False))
                    for k in counts
                ]
            assignments, events = _draw_samples(
                client_categories, labels, spec.samples_per_client,
                num_categories, rng,
            )
        except GenerationError as exc:
            last_error = str(exc)
            continue

        masks = tuple(
            build_mask(labels[a], num_categories) for a in assignments
        )
        presence_realized = np.zeros(num_categories, dtype=np.int64)
        for m in masks:
            for c in m.categories():
                presence_realized[c] += 1
        return ClientPartition(
            spec=spec,
            num_categories=num_categories,
            assignments=tuple(assignments),
            masks=masks,
            category_presence=presence_realized,
            replacement_events=tuple(events),
        )
    raise GenerationError(
        f"{spec.kind}: no feasible partition after {_MAX_ATTEMPTS} attempts "
        f"(last: {last_error})"
    )


def generate_partition(spec: DistributionSpec, dataset: LabeledDataset) -> ClientPartition:
    """Deterministically partition ``dataset`` according to ``spec``."""
    return generate_partition_from_labels(spec, dataset.labels, dataset.num_categories)


def validate_partition(partition: ClientPartition, labels: np.ndarray) -> list[str]:
    """Check the structural constraints of the partition's kind; [] means valid."""
    spec = partition.spec
    problems: list[str] = []
    count_bounds, presence_bounds = kind_bounds(
        spec.kind, partition.num_categories, spec.num_clients, spec.samples_per_client
    )

    for j, (assigned, mask) in enumerate(zip(partition.assignments, partition.masks)):
        if len(assigned) != spec.samples_per_client:
            problems.append(
                f"client {j}: {len(assigned)} samples != {spec.samples_per_client}"
            )
        expected = build_mask(labels[assigned], partition.num_categories)
        if expected != mask:
            problems.append(f"client {j}: stored mask disagrees with assigned labels")
        k = mask.popcount()
        if not count_bounds[0] <= k <= count_bounds[1]:
            problems.append(
                f"client {j}: {k} categories outside [{count_bounds[0]}, {count_bounds[1]}]"
            )

    if spec.kind in _RANGE_KINDS:
        presence = partition.category_presence
        lo, hi = presence_bounds
        lo = effective_presence_lo(lo, int(presence.sum()), partition.num_categories)
        bad = np.flatnonzero((presence < lo) | (presence > hi))
        for c in bad:
            problems.append(
                f"category {int(c)}: presence {int(presence[c])} outside [{lo}, {hi}]"
            )
        if spec.kind == "D1" and np.any(np.diff(presence) > 0):
            problems.append("D1 presence profile is not non-increasing")
    return problems


@dataclass(frozen=True)
class PartitionStats:
    category_presence: np.ndarray
    client_category_counts: np.ndarray  # index k = number of clients with k categories

    def rows(self) -> list[tuple[str, int, int]]:
        out = [
            ("category_presence", int(c), int(n))
            for c, n in enumerate(self.category_presence)
        ]
        out += [
            ("client_category_count", int(k), int(n))
            for k, n in enumerate(self.client_category_counts)
            if n
        ]
        return out


def partition_stats(partition: ClientPartition) -> PartitionStats:
    """Presence histogram per category and histogram of per-client category counts."""
    sizes = np.array([m.popcount() for m in partition.masks])
    return PartitionStats(
        category_presence=partition.category_presence.copy(),
        client_category_counts=np.bincount(sizes, minlength=partition.num_categories + 1),
    )


def apply_global_imbalance(
    dataset: LabeledDataset,
    minority_count: int = 4,
    ratio: float = 0.1,
    seed: int = 0,
    minority_categories: list[int] | None = None,
) -> LabeledDataset:
    """Subsample ``minority_count`` categories to ``ratio`` of their original size.

    By default the lowest category ids are the minorities; pass
    ``minority_categories`` to override.  Everything else is kept, original
    sample order preserved.
    """
    if minority_count == 0:
        return dataset
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if minority_count >= dataset.num_categories or minority_count < 0:
        raise ValueError(
            f"minority_count must be in [0, {dataset.num_categories}), got {minority_count}"
        )
    chosen = (
        list(range(minority_count))
        if minority_categories is None
        else list(minority_categories)
    )
    if len(chosen) != minority_count:
        raise ValueError(
            f"{len(chosen)} minority categories given, expected {minority_count}"
        )
    rng = derive_rng(seed, STREAM_IMBALANCE)
    keep = np.ones(dataset.num_samples, dtype=bool)
    for c in chosen:
        members = np.flatnonzero(dataset.labels == c)
        retain = int(round(ratio * members.size))
        dropped = rng.choice(members, size=members.size - retain, replace=False)
        keep[dropped] = False
    kept = np.flatnonzero(keep)
    return LabeledDataset(
        images=dataset.images[kept],
        labels=dataset.labels[kept],
        num_categories=dataset.num_categories,
        name=dataset.name,
    )


def save_partition(partition: ClientPartition, path) -> None:
    """Text export: a header with the DistributionSpec fields, then one indices line per client."""
    spec = partition.spec
    imbalance = (
        "none" if spec.imbalance is None else f"{spec.imbalance[0]}:{spec.imbalance[1]!r}"
    )
    header = (
        f"# catfed-partition kind={spec.kind} num_clients={spec.num_clients} "
        f"samples_per_client={spec.samples_per_client} seed={spec.seed} "
        f"num_categories={partition.num_categories} imbalance={imbalance}"
    )
    lines = [header]
    for j, assigned in enumerate(partition.assignments):
        lines.append(f"{j}: " + " ".join(str(int(i)) for i in assigned))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_partition(path, labels: np.ndarray) -> ClientPartition:
    """Rebuild a partition from its export; masks are recomputed from ``labels``."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith("# catfed-partition "):
        raise ValueError(f"{path}: missing partition header")
    fields = dict(
        item.split("=", 1) for item in text[0].removeprefix("# catfed-partition ").split()
    )
    imbalance = None
    if fields["imbalance"] != "none":
        raw_count, raw_ratio = fields["imbalance"].split(":")
        imbalance = (int(raw_count), float(raw_ratio))
    spec = DistributionSpec(
        kind=fields["kind"],
        num_clients=int(fields["num_clients"]),
        samples_per_client=int(fields["samples_per_client"]),
        imbalance=imbalance,
        seed=int(fields["seed"]),
    )
    num_categories = int(fields["num_categories"])

    assignments = []
    for line in text[1:]:
        if not line.strip():
            continue
        _, _, rest = line.partition(":")
        assignments.append(np.array([int(tok) for tok in rest.split()], dtype=np.int64))
    if len(assignments) != spec.num_clients:
        raise ValueError(
            f"{path}: {len(assignments)} client lines, header says {spec.num_clients}"
        )
    masks = tuple(build_mask(labels[a], num_categories) for a in assignments)
    presence = np.zeros(num_categories, dtype=np.int64)
    for m in masks:
        for c in m.categories():
            presence[c] += 1
    return ClientPartition(
        spec=spec,
        num_categories=num_categories,
        assignments=tuple(assignments),
        masks=masks,
        category_presence=presence,
    )
