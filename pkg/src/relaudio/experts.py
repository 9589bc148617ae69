"""One-vs-all expert classifiers over band-split Mel features.

The trunk is three parallel 1-D convolutions (one per frequency band)
whose outputs are concatenated, average-pooled into overlapping segments,
and pushed through a hidden dense layer; a softmax head then emits one
distribution per segment. Experts use a 2-way head whose index 0 is
always the positive class; the same trunk with an N-way head is reused
by the relevance-weighted clip classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import nn
from .errors import InputTooShortError, TrainingDivergedError
from .features import BandSplit, MelSpectrogram

# hidden-layer widths evaluated in the original sweep
HN_SWEEP = (20, 50, 100, 150)

POSITIVE_CLASS = 0
NEGATIVE_CLASS = 1

AGGREGATE_EPS = 1e-12


@dataclass(frozen=True)
class ExpertConfig:
    band_split: BandSplit = field(default_factory=BandSplit)
    f_low: int = 42
    f_mid: int = 42
    f_high: int = 16
    conv_window: int = 4
    pool_window: int = 10
    pool_stride: int = 5
    hidden_units: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")

    @property
    def feature_size(self) -> int:
        return self.f_low + self.f_mid + self.f_high

    @property
    def min_frames(self) -> int:
        return nn.frames_for_segments(1, self.conv_window, self.pool_window,
                                      self.pool_stride)

    def segment_count(self, frames: int) -> int:
        return nn.segment_count(frames, self.conv_window, self.pool_window,
                                self.pool_stride)

    def segment_span(self, k: int) -> tuple[int, int]:
        return nn.segment_span(k, self.conv_window, self.pool_window, self.pool_stride)

    def compatible_with(self, other: "ExpertConfig") -> bool:
        """Same segmentation geometry, so two models see identical segments."""
        return (self.band_split == other.band_split
                and self.conv_window == other.conv_window
                and self.pool_window == other.pool_window
                and self.pool_stride == other.pool_stride)


class SegmentNet:
    """Band convs -> concat -> pool -> dense -> per-segment softmax head."""

    def __init__(self, config: ExpertConfig, n_out: int, seed: int | None = None,
                 dtype=np.float32):
        self.config = config
        self.n_out = n_out
        self.dtype = dtype
        rng = np.random.default_rng(config.seed if seed is None else seed)
        split = config.band_split
        w = config.conv_window
        self.conv_low = nn.Conv1d(split.low, config.f_low, w, rng, dtype)
        self.conv_mid = nn.Conv1d(split.mid, config.f_mid, w, rng, dtype)
        self.conv_high = nn.Conv1d(split.high, config.f_high, w, rng, dtype)
        self.band_relus = [nn.ReLU(), nn.ReLU(), nn.ReLU()]
        self.pool = nn.AvgPool1d(config.pool_window, config.pool_stride)
        self.hidden = nn.Dense(config.feature_size, config.hidden_units, rng, dtype)
        self.hidden_relu = nn.ReLU()
        self.head = nn.Dense(config.hidden_units, n_out, rng, dtype)
        self.softmax = nn.Softmax()

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Per-segment class distributions, [S x n_out]."""
        frames = values.shape[1]
        if frames < self.config.min_frames:
            raise InputTooShortError(
                f"clip has {frames} frames, the network needs at least "
                f"{self.config.min_frames} for one segment")
        split = self.config.band_split
        bands = (values[:split.low],
                 values[split.low:split.low + split.mid],
                 values[split.low + split.mid:split.total])
        convs = (self.conv_low, self.conv_mid, self.conv_high)
        banded = [relu.forward(conv.forward(band))
                  for band, conv, relu in zip(bands, convs, self.band_relus)]
        stacked = np.concatenate(banded, axis=0)
        pooled = self.pool.forward(stacked)
        hidden = self.hidden_relu.forward(self.hidden.forward(pooled.T))
        return self.softmax.forward(self.head.forward(hidden))

    def backward(self, grad_probs: np.ndarray) -> None:
        grad = self.softmax.backward(grad_probs)
        grad = self.head.backward(grad)
        grad = self.hidden_relu.backward(grad)
        grad = self.hidden.backward(grad)
        grad = self.pool.backward(grad.T)
        split = self.config
        sizes = (split.f_low, split.f_mid, split.f_high)
        offset = 0
        for size, conv, relu in zip(sizes, (self.conv_low, self.conv_mid, self.conv_high),
                                    self.band_relus):
            conv.backward(relu.backward(grad[offset:offset + size]))
            offset += size

    def named_params(self) -> list[tuple[str, nn.Param]]:
        out = []
        for prefix, layer in (("conv_low", self.conv_low), ("conv_mid", self.conv_mid),
                              ("conv_high", self.conv_high), ("hidden", self.hidden),
                              ("head", self.head)):
            out.extend((f"{prefix}.{p.name}", p) for p in layer.params())
        return out

    def params(self) -> list[nn.Param]:
        return [p for _, p in self.named_params()]

    def state(self) -> list[np.ndarray]:
        return [p.value.copy() for p in self.params()]

    def load_state(self, state: Sequence[np.ndarray]) -> None:
        for p, value in zip(self.params(), state):
            p.value[...] = value


def aggregate_clip(segment_probs: np.ndarray, weights: np.ndarray | None = None
                   ) -> tuple[np.ndarray, bool]:
    """Weighted per-class sum over segments, renormalized to a distribution.

    Returns (distribution, degenerate); degenerate means the total weight
    vanished and a uniform fallback was emitted.
    """
    if weights is None:
        totals = segment_probs.sum(axis=0)
    else:
        totals = weights @ segment_probs
    z = totals.sum()
    if z <= AGGREGATE_EPS:
        n = segment_probs.shape[1]
        return np.full(n, 1.0 / n, dtype=segment_probs.dtype), True
    return totals / z, False


def aggregate_clip_grad(grad_clip: np.ndarray, segment_probs: np.ndarray,
                        weights: np.ndarray | None = None) -> np.ndarray:
    """Gradient of aggregate_clip w.r.t. segment_probs (weights held constant)."""
    if weights is None:
        totals = segment_probs.sum(axis=0)
    else:
        totals = weights @ segment_probs
    z = totals.sum()
    if z <= AGGREGATE_EPS:
        return np.zeros_like(segment_probs)
    per_class = grad_clip / z - (grad_clip @ totals) / (z * z)
    if weights is None:
        return np.broadcast_to(per_class, segment_probs.shape).copy()
    return np.outer(weights, per_class)


@dataclass
class TrainConfig:
    batch_size: int = 100
    patience: int = 50
    min_delta: float = 0.05
    max_epochs: int = 1000
    validation_fraction: float = 0.2
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class TrainingMetadata:
    epochs_run: int = 0
    best_epoch: int = 0
    best_val_loss: float = float("inf")


def stratified_split(labels: Sequence[int], fraction: float, rng: np.random.Generator
                     ) -> tuple[list[int], list[int]]:
    """Index split keeping the label mix; at least one item stays in training."""
    groups: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)
    train_idx: list[int] = []
    val_idx: list[int] = []
    for label in sorted(groups):
        idx = groups[label]
        order = rng.permutation(len(idx))
        n_val = min(int(round(fraction * len(idx))), len(idx) - 1)
        val_idx.extend(idx[i] for i in order[:n_val])
        train_idx.extend(idx[i] for i in order[n_val:])
    if not val_idx:
        val_idx.append(train_idx.pop())
    return sorted(train_idx), sorted(val_idx)


def fit(params: list[nn.Param],
        step_fn: Callable[[int], float],
        eval_fn: Callable[[int], float],
        train_idx: Sequence[int],
        val_idx: Sequence[int],
        config: TrainConfig) -> TrainingMetadata:
    """Adam training loop with patience-based early stopping.

    step_fn(i) runs forward+backward for item i and returns its loss;
    eval_fn(i) is forward-only. The best-epoch parameter snapshot is
    reloaded before returning. Improvement only counts when validation
    loss drops by at least min_delta (absolute).
    """
    opt = nn.Adam(params, lr=config.learning_rate)
    best = TrainingMetadata()
    best_state = [p.value.copy() for p in params]
    bad_epochs = 0
    for epoch in range(1, config.max_epochs + 1):
        best.epochs_run = epoch
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train_idx))
        for start in range(0, len(order), config.batch_size):
            chunk = order[start:start + config.batch_size]
            opt.zero_grad()
            total = 0.0
            for j in chunk:
                total += step_fn(train_idx[j])
            if not np.isfinite(total):
                raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
            for p in params:
                p.grad /= len(chunk)
            opt.step()
        val_loss = float(np.mean([eval_fn(i) for i in val_idx]))
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        if best.best_val_loss - val_loss >= config.min_delta:
            best.best_val_loss = val_loss
            best.best_epoch = epoch
            best_state = [p.value.copy() for p in params]
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break
    for p, value in zip(params, best_state):
        p.value[...] = value
    return best


class ExpertModel:
    """A trained one-vs-all classifier for a single class."""

    def __init__(self, config: ExpertConfig, class_id: int, class_name: str,
                 net: SegmentNet, metadata: TrainingMetadata | None = None):
        self.config = config
        self.class_id = class_id
        self.class_name = class_name
        self.net = net
        self.metadata = metadata or TrainingMetadata()

    def forward(self, spec) -> tuple[np.ndarray, np.ndarray]:
        """(segment_probs [S x 2], clip_probs [2])."""
        segment_probs = self.net.forward(_values(spec))
        clip_probs, _ = aggregate_clip(segment_probs)
        return segment_probs, clip_probs

    def positive_prob(self, spec) -> np.ndarray:
        """P(segment belongs to this class), per segment."""
        return self.net.forward(_values(spec))[:, POSITIVE_CLASS]


def _values(spec) -> np.ndarray:
    if isinstance(spec, MelSpectrogram):
        return spec.values
    return np.asarray(spec)


def _padded_values(bags, pad_to: int | None) -> list[np.ndarray]:
    from .data import pad_bag_values  # local import avoids a module cycle
    if pad_to is None:
        return [bag.features.values for bag in bags]
    return [pad_bag_values(bag.features.values, pad_to, centered=True) for bag in bags]


def train_expert(bags, class_id: int, expert_config: ExpertConfig | None = None,
                 train_config: TrainConfig | None = None, class_name: str | None = None,
                 pad_to: int | None = None) -> ExpertModel:
    """Train one expert: bags of class_id are positive, all others negative."""
    expert_config = expert_config or ExpertConfig()
    train_config = train_config or TrainConfig()
    targets = [POSITIVE_CLASS if bag.label == class_id else NEGATIVE_CLASS for bag in bags]
    n_pos = targets.count(POSITIVE_CLASS)
    if n_pos == 0 or n_pos == len(targets):
        raise ValueError(
            f"training an expert for class {class_id} needs both positive and "
            f"negative clips, got {n_pos}/{len(targets)} positive")
    inputs = _padded_values(bags, pad_to)
    net = SegmentNet(expert_config, n_out=2)
    split_rng = np.random.default_rng(train_config.seed)
    train_idx, val_idx = stratified_split([bag.label for bag in bags],
                                          train_config.validation_fraction, split_rng)

    def step(i: int) -> float:
        probs = net.forward(inputs[i])
        clip, degenerate = aggregate_clip(probs)
        loss = nn.cross_entropy(clip, targets[i])
        if not degenerate:
            grad_clip = nn.cross_entropy_grad(clip, targets[i])
            net.backward(aggregate_clip_grad(grad_clip, probs))
        return loss

    def evaluate(i: int) -> float:
        clip, _ = aggregate_clip(net.forward(inputs[i]))
        return nn.cross_entropy(clip, targets[i])

    metadata = fit(net.params(), step, evaluate, train_idx, val_idx, train_config)
    name = class_name if class_name is not None else f"class{class_id}"
    return ExpertModel(expert_config, class_id, name, net, metadata)
