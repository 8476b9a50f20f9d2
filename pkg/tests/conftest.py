import numpy as np
import pytest

from catfed import CategoryMask, LabeledDataset


def make_dataset(
    num_classes: int = 10,
    num_samples: int = 1000,
    num_pixels: int = 24,
    seed: int = 0,
    name: str = "mnist",
    proto_seed: int | None = None,
) -> LabeledDataset:
    """Small learnable dataset: noisy class prototypes, roughly balanced.

    Prototypes come from ``proto_seed`` (default: ``seed``); pass the same
    proto_seed with different seeds to get train/test splits of one task.
    """
    rng = np.random.default_rng(seed)
    proto_rng = np.random.default_rng(seed if proto_seed is None else proto_seed)
    protos = proto_rng.standard_normal((num_classes, num_pixels))
    labels = np.concatenate(
        [np.full(num_samples // num_classes, c) for c in range(num_classes)]
    )
    pad = num_samples - labels.size
    labels = np.concatenate([labels, rng.integers(0, num_classes, pad)])
    labels = labels[rng.permutation(num_samples)].astype(np.int64)
    raw = protos[labels] + rng.standard_normal((num_samples, num_pixels))
    images = np.clip(0.5 + 0.17 * raw, 0.0, 1.0)
    return LabeledDataset(
        images=images, labels=labels, num_categories=num_classes, name=name
    )


def make_pair(
    num_classes: int = 10,
    train_samples: int = 900,
    test_samples: int = 300,
    num_pixels: int = 12,
    seed: int = 0,
    name: str = "mnist",
) -> tuple[LabeledDataset, LabeledDataset]:
    """Train/test splits drawn from the same prototypes."""
    train = make_dataset(num_classes, train_samples, num_pixels, seed, name, proto_seed=seed)
    test = make_dataset(
        num_classes, test_samples, num_pixels, seed + 10_000, name, proto_seed=seed
    )
    return train, test


def random_masks(
    rng: np.random.Generator, num_clients: int, num_categories: int,
    allow_empty: bool = True,
) -> list[CategoryMask]:
    masks = []
    for _ in range(num_clients):
        bits = int(rng.integers(0, 2**num_categories))
        if not allow_empty and bits == 0:
            bits = 1 << int(rng.integers(0, num_categories))
        masks.append(CategoryMask(bits=bits, num_categories=num_categories))
    return masks


@pytest.fixture
def tiny_dataset() -> LabeledDataset:
    return make_dataset(num_classes=6, num_samples=480, num_pixels=16, seed=3)
