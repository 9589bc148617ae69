"""Segment-relevance toolkit for weakly-labelled audio classification."""

from .data import (Bag, Manifest, SyntheticSpec, batch_iterator, generate_synthetic,
                   load_dataset, load_manifest, save_dataset, split)
from .experts import (ExpertConfig, ExpertModel, TrainConfig, train_expert)
from .features import (AudioClip, BandSplit, MelSpectrogram, log_compress,
                       mel_spectrogram, pad_center, read_wav, resample, segment_bands)
from .fusion import (FusionClassifier, FusionMode, experiment_report, fuse, map_at_3)
from .modelio import (load_expert, load_expert_directory, load_relnet, save_expert,
                      save_relnet)
from .relevance import (ExpertSet, entropy, expert_probabilities, relevance,
                        relevance_profile, weighted_relevance)
from .relnet import ConvnetModel, RelnetModel, train_convnet, train_relnet

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "Bag", "BandSplit", "ConvnetModel", "ExpertConfig", "ExpertModel",
    "ExpertSet", "FusionClassifier", "FusionMode", "Manifest", "MelSpectrogram",
    "RelnetModel", "SyntheticSpec", "TrainConfig", "batch_iterator", "entropy",
    "experiment_report", "expert_probabilities", "fuse", "generate_synthetic",
    "load_dataset", "load_expert", "load_expert_directory", "load_manifest",
    "load_relnet", "log_compress", "map_at_3", "mel_spectrogram", "pad_center",
    "read_wav", "relevance", "relevance_profile", "resample", "save_dataset",
    "save_expert", "save_relnet", "segment_bands", "split", "train_convnet",
    "train_expert", "train_relnet", "weighted_relevance",
]
