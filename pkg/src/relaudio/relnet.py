"""Two-branch clip classifier: a frozen relevance branch weighting a
trainable per-segment classifier branch.

The classifier branch reuses the expert trunk with an N-way head. Its
per-segment distributions are weighted by the relevance branch's scores
and summed per class, then renormalized into a clip distribution. During
stage-2 training the expert weights never change and no gradient flows
through the relevance weights.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .errors import ShapeError
from .experts import (ExpertConfig, SegmentNet, TrainConfig, TrainingMetadata,
                      _padded_values, _values, aggregate_clip, aggregate_clip_grad,
                      fit, stratified_split)
from .relevance import ExpertSet, expert_probabilities, weighted_relevance


@dataclass
class ClipPrediction:
    """Clip distribution plus per-segment diagnostics."""

    distribution: np.ndarray          # [N]
    relevance: np.ndarray             # R_max per segment
    segment_probs: np.ndarray         # Q, [S x N]
    degenerate: bool = False

    def ranking(self) -> np.ndarray:
        scores = self.distribution
        return np.lexsort((np.arange(len(scores)), -scores))


class RelnetModel:
    """Frozen expert set + trainable N-way classifier branch."""

    def __init__(self, experts: ExpertSet, classifier: SegmentNet,
                 metadata: TrainingMetadata | None = None):
        if experts.n < 2:
            raise ValueError("the relevance branch needs at least 2 experts")
        if classifier.n_out != experts.n:
            raise ShapeError(
                f"classifier head width {classifier.n_out} must equal the "
                f"expert count {experts.n}")
        self.experts = experts
        self.classifier = classifier
        self.metadata = metadata or TrainingMetadata()

    @property
    def class_names(self) -> list[str]:
        return self.experts.class_names

    def relevance_weights(self, spec) -> np.ndarray:
        matrix = expert_probabilities(spec, self.experts)
        return np.asarray(weighted_relevance(matrix.values))

    def forward(self, spec) -> ClipPrediction:
        weights = self.relevance_weights(spec)
        segment_probs = self.classifier.forward(_values(spec))
        if segment_probs.shape[0] != weights.shape[0]:
            raise ShapeError(
                f"branch segmentation mismatch: relevance saw {weights.shape[0]} "
                f"segments, classifier {segment_probs.shape[0]}")
        distribution, degenerate = aggregate_clip(segment_probs, weights)
        return ClipPrediction(distribution, weights, segment_probs, degenerate)

    def rank(self, spec) -> np.ndarray:
        return self.forward(spec).ranking()


class ConvnetModel:
    """The classifier branch alone: every segment weighted equally."""

    def __init__(self, classifier: SegmentNet, class_names: list[str],
                 metadata: TrainingMetadata | None = None):
        self.classifier = classifier
        self.class_names = class_names
        self.metadata = metadata or TrainingMetadata()

    def forward(self, spec) -> ClipPrediction:
        segment_probs = self.classifier.forward(_values(spec))
        distribution, degenerate = aggregate_clip(segment_probs)
        return ClipPrediction(distribution, np.ones(segment_probs.shape[0]),
                              segment_probs, degenerate)

    def rank(self, spec) -> np.ndarray:
        return self.forward(spec).ranking()


def _class_targets(bags, class_ids: list[int]) -> list[int]:
    position = {cid: i for i, cid in enumerate(class_ids)}
    present = {bag.label for bag in bags}
    missing = [cid for cid in class_ids if cid not in present]
    if missing:
        raise ValueError(f"training data has no clips for classes {missing}")
    unknown = sorted(present - set(position))
    if unknown:
        raise ValueError(f"training data contains unknown classes {unknown}")
    return [position[bag.label] for bag in bags]


def _fit_classifier(bags, targets: list[int], config: ExpertConfig,
                    train_config: TrainConfig, n_out: int, pad_to: int | None,
                    weights: list[np.ndarray] | None, seed: int | None
                    ) -> tuple[SegmentNet, TrainingMetadata]:
    inputs = _padded_values(bags, pad_to)
    net = SegmentNet(config, n_out=n_out, seed=seed)
    split_rng = np.random.default_rng(train_config.seed)
    train_idx, val_idx = stratified_split([bag.label for bag in bags],
                                          train_config.validation_fraction, split_rng)

    def clip_weights(i: int) -> np.ndarray | None:
        return weights[i] if weights is not None else None

    def step(i: int) -> float:
        probs = net.forward(inputs[i])
        clip, degenerate = aggregate_clip(probs, clip_weights(i))
        loss = nn.cross_entropy(clip, targets[i])
        if not degenerate:
            grad_clip = nn.cross_entropy_grad(clip, targets[i])
            net.backward(aggregate_clip_grad(grad_clip, probs, clip_weights(i)))
        return loss

    def evaluate(i: int) -> float:
        clip, _ = aggregate_clip(net.forward(inputs[i]), clip_weights(i))
        return nn.cross_entropy(clip, targets[i])

    metadata = fit(net.params(), step, evaluate, train_idx, val_idx, train_config)
    return net, metadata


def train_relnet(bags, experts: ExpertSet, train_config: TrainConfig | None = None,
                 pad_to: int | None = None, classifier_seed: int | None = None
                 ) -> RelnetModel:
    """Stage-2 training: only the classifier branch receives updates.

    Relevance weights come from the already-trained (stage-1) experts and
    are computed once per clip up front, which also guarantees no gradient
    can reach the expert parameters.
    """
    train_config = train_config or TrainConfig()
    targets = _class_targets(bags, experts.class_ids)
    inputs = _padded_values(bags, pad_to)
    weights = [np.asarray(weighted_relevance(
        expert_probabilities(x, experts).values)) for x in inputs]
    config = replace(experts.entries[0].config,
                     seed=classifier_seed if classifier_seed is not None
                     else train_config.seed)
    net, metadata = _fit_classifier(bags, targets, config, train_config,
                                    experts.n, pad_to, weights, config.seed)
    return RelnetModel(experts, net, metadata)


def train_convnet(bags, class_names: list[str], config: ExpertConfig | None = None,
                  train_config: TrainConfig | None = None, pad_to: int | None = None,
                  classifier_seed: int | None = None) -> ConvnetModel:
    """Baseline: the same classifier branch trained without relevance weighting."""
    config = config or ExpertConfig()
    train_config = train_config or TrainConfig()
    targets = _class_targets(bags, list(range(len(class_names))))
    seed = classifier_seed if classifier_seed is not None else train_config.seed
    net, metadata = _fit_classifier(bags, targets, replace(config, seed=seed),
                                    train_config, len(class_names), pad_to,
                                    None, seed)
    return ConvnetModel(net, class_names, metadata)
