import numpy as np
import pytest

from relaudio.data import SyntheticSpec, generate_synthetic
from relaudio.experts import ExpertConfig, TrainConfig, train_expert
from relaudio.features import BandSplit


def tiny_config(seed: int = 0, n_hidden: int = 12) -> ExpertConfig:
    """A small but complete network for fast unit tests (16-bin inputs)."""
    return ExpertConfig(band_split=BandSplit(4, 6, 6), f_low=6, f_mid=6, f_high=4,
                        hidden_units=n_hidden, seed=seed)


def tiny_synthetic(num_classes: int = 2, bags_per_class: int = 12, seed: int = 7,
                   segments: int = 8, noise: float = 0.3) -> SyntheticSpec:
    return SyntheticSpec(num_classes=num_classes, bags_per_class=bags_per_class,
                         segments_per_bag=segments, events_per_bag=2,
                         noise_level=noise, seed=seed, bins=16, covered_bins=16,
                         amplitude=2.5)


def fast_train_config(seed: int = 1, epochs: int = 50) -> TrainConfig:
    return TrainConfig(batch_size=8, patience=8, min_delta=0.002, max_epochs=epochs,
                       validation_fraction=0.25, seed=seed)


@pytest.fixture(scope="session")
def tiny_bags():
    return generate_synthetic(tiny_synthetic())


@pytest.fixture(scope="session")
def tiny_experts(tiny_bags):
    """Two trained tiny experts over the two-class synthetic set."""
    models = []
    for class_id in range(2):
        models.append(train_expert(tiny_bags, class_id, tiny_config(seed=3 + class_id),
                                   fast_train_config(), class_name=f"class{class_id}"))
    return models


@pytest.fixture
def rng():
    return np.random.default_rng(0)
