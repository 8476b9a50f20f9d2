"""
A tour of the partition families
================================

Generates every distribution kind that fits a 10-class dataset against the
bundled fixture and prints its per-category presence profile as a text
histogram, plus how many categories each client ended up with.  The 47- and
49-class kinds are shown at the end from bare label vectors, since building
their masks needs no images.
"""

import os

import numpy as np

from catfed import DistributionSpec, generate_partition, load_dataset
from catfed.datasets import DatasetSpec
from catfed.partitions import generate_partition_from_labels, partition_stats
from catfed.synthetic import FIXTURE_COUNTS, write_fixture

root = os.environ.get("CATFED_DATA_ROOT", "data")
write_fixture("mnist", root, seed=0)  # no-op once the files exist
train = load_dataset(DatasetSpec("mnist", "train", root))


def describe(part) -> None:
    stats = partition_stats(part)
    for c, n in enumerate(stats.category_presence):
        print(f"  category {c}: {int(n):3d} " + "#" * (int(n) // 2 or 1))
    held = np.flatnonzero(stats.client_category_counts)
    print(f"  categories per client: {held.min()}..{held.max()}")
    if part.replacement_events:
        repeated = sum(n for _, _, n in part.replacement_events)
        print(f"  note: {repeated} samples drawn with replacement (pools ran dry)")
    print()


# D1 decays presence with the category id; D6-D10 fix the per-client
# category count at 1/3/5/7/9, which flattens the presence profile.
for kind in ("D1", "D6", "D7", "D8", "D9", "D10"):
    spec = DistributionSpec(kind=kind, num_clients=100, samples_per_client=600, seed=0)
    print(f"--- {kind} on the 10-class fixture ---")
    describe(generate_partition(spec, train))

# D2-D5 are shaped for the 47- and 49-class datasets.  A label vector with
# the right per-class totals is enough to see their profiles: D2/D3 bulge
# in the middle, D4/D5 starve a long tail.
labels49 = np.repeat(np.arange(49), FIXTURE_COUNTS["kmnist49"]["train"])
for kind in ("D3", "D5"):
    spec = DistributionSpec(kind=kind, num_clients=100, samples_per_client=600, seed=0)
    part = generate_partition_from_labels(spec, labels49, 49)
    presence = part.category_presence
    scarce = int(np.sum(presence <= 3))
    print(f"--- {kind} on 49-class labels ---")
    print(f"  presence min/median/max: {int(presence.min())}/"
          f"{int(np.median(presence))}/{int(presence.max())}, "
          f"{scarce} categories on three clients or fewer")
    print()
