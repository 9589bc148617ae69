"""Datasets: manifests, deterministic splits, batching, and the synthetic
event corpus used as a desk-scale oracle.

Synthetic bags are built directly in the network-input feature domain
(log-compressed Mel values). Each class owns a disjoint Mel-band window
and a distinct temporal period, so the band-split architecture can
separate classes by construction, and each bag carries the ground-truth
per-segment event mask.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .errors import DuplicateClipError, EmptyManifestError, ManifestError
from .features import MelSpectrogram, load_features, save_features


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    label: str
    verified: bool = True


@dataclass
class Manifest:
    records: list[ManifestRecord]

    @property
    def vocabulary(self) -> list[str]:
        return sorted({r.label for r in self.records})

    def class_id(self, label: str) -> int:
        return self.vocabulary.index(label)

    def __len__(self) -> int:
        return len(self.records)


def load_manifest(path: str | Path) -> Manifest:
    """Parse a delimited manifest with columns path, label, verified.

    Unknown columns are ignored; the verified column is optional and
    defaults to true.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest {path} does not exist")
    records = []
    seen = set()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "path" not in reader.fieldnames \
                or "label" not in reader.fieldnames:
            raise ManifestError(f"manifest {path} must have 'path' and 'label' columns")
        for row in reader:
            clip_path = row["path"].strip()
            if clip_path in seen:
                raise DuplicateClipError(f"duplicate clip path {clip_path!r} in manifest")
            seen.add(clip_path)
            verified = str(row.get("verified", "true")).strip().lower() in ("1", "true", "yes")
            records.append(ManifestRecord(clip_path, row["label"].strip(), verified))
    if not records:
        raise EmptyManifestError(f"manifest {path} has no records")
    return Manifest(records)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "verified"])
        for r in manifest.records:
            writer.writerow([r.path, r.label, "true" if r.verified else "false"])


def split(manifest: Manifest, fractions: tuple[float, float, float], seed: int
          ) -> tuple[Manifest, Manifest, Manifest]:
    """Stratified, disjoint (train, validation, test) split, deterministic under seed."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    nonzero = sum(1 for f in fractions if f > 0)
    rng = np.random.default_rng(seed)
    by_label: dict[str, list[ManifestRecord]] = {}
    for r in manifest.records:
        by_label.setdefault(r.label, []).append(r)

    parts: tuple[list[ManifestRecord], ...] = ([], [], [])
    for label in sorted(by_label):
        group = by_label[label]
        if len(group) < nonzero:
            raise ValueError(
                f"class {label!r} has {len(group)} clips, fewer than the "
                f"{nonzero} non-empty splits requested")
        order = rng.permutation(len(group))
        counts = _allocate(len(group), fractions)
        offset = 0
        for part, count in zip(parts, counts):
            part.extend(group[i] for i in order[offset:offset + count])
            offset += count
    return tuple(Manifest(p) for p in parts)  # type: ignore[return-value]


def _allocate(n: int, fractions: tuple[float, float, float]) -> list[int]:
    # largest-remainder rounding, then force >=1 into every nonzero split
    raw = [f * n for f in fractions]
    counts = [int(x) for x in raw]
    remainders = sorted(range(3), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in remainders:
        if sum(counts) == n:
            break
        counts[i] += 1
    for i in range(3):
        if fractions[i] > 0 and counts[i] == 0:
            donor = max(range(3), key=lambda j: counts[j])
            counts[donor] -= 1
            counts[i] += 1
    return counts


@dataclass(frozen=True)
class EventSignature:
    """A band-limited tone burst: which Mel bins it fills and how it pulses."""

    band_start: int
    band_width: int
    amplitude: float
    period: int

    def template(self, span: int) -> np.ndarray:
        """[band_width x span] feature values for one event occurrence."""
        i = np.arange(span)
        envelope = 0.25 + 0.75 * np.abs(np.sin(np.pi * (i + 0.5) / self.period))
        return (self.amplitude * envelope)[None, :].repeat(self.band_width, axis=0)


@dataclass
class SyntheticSpec:
    """Generator knobs; events_per_bag may be a fixed count or an inclusive
    (low, high) range sampled per bag."""

    num_classes: int = 4
    bags_per_class: int = 50
    segments_per_bag: int = 20
    events_per_bag: int | tuple[int, int] = 2
    noise_level: float = 0.3
    seed: int = 0
    bins: int = 128
    covered_bins: int = 100
    amplitude: float = 2.5
    amplitude_jitter: float = 0.0
    signatures: list[EventSignature] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    @property
    def event_range(self) -> tuple[int, int]:
        if isinstance(self.events_per_bag, int):
            return self.events_per_bag, self.events_per_bag
        return self.events_per_bag

    def __post_init__(self):
        lo, hi = self.event_range
        if lo < 1 or hi >= self.segments_per_bag:
            raise ValueError("event segments must be sparse: 1 <= events < segments per bag")
        if not self.signatures:
            self.signatures = default_signatures(
                self.num_classes, self.covered_bins, self.amplitude)
        if not self.class_names:
            self.class_names = [f"class{c}" for c in range(self.num_classes)]
        for c, sig in enumerate(self.signatures):
            if sig.band_start < 0 or sig.band_start + sig.band_width > self.bins:
                raise ValueError(
                    f"signature for class {c} spans bins [{sig.band_start}, "
                    f"{sig.band_start + sig.band_width}), outside 0..{self.bins}")


def default_signatures(num_classes: int, covered_bins: int, amplitude: float
                       ) -> list[EventSignature]:
    """Disjoint band windows evenly spread over the covered bins."""
    if covered_bins < num_classes:
        raise ValueError(f"{covered_bins} bins cannot host {num_classes} disjoint bands")
    slot = covered_bins / num_classes
    width = max(1, min(int(slot) // 2, covered_bins - num_classes + 1)) \
        if slot >= 2 else 1
    sigs = []
    for c in range(num_classes):
        start = int(round(c * slot + (slot - width) / 2))
        start = min(max(start, 0), covered_bins - width)
        sigs.append(EventSignature(start, width, amplitude, period=6 + 2 * c))
    return sigs


@dataclass
class Bag:
    """One weakly-labelled clip: features, its bag label, and (synthetic
    only) the ground-truth per-segment event mask."""

    clip_id: str
    features: MelSpectrogram
    label: int
    mask: np.ndarray | None = None

    @property
    def frames(self) -> int:
        return self.features.frames


def generate_synthetic(spec: SyntheticSpec) -> list[Bag]:
    """Build the synthetic event corpus with ground-truth masks."""
    rng = np.random.default_rng(spec.seed)
    frames = nn.frames_for_segments(spec.segments_per_bag)
    span = nn.segment_span(0)[1]
    lo, hi = spec.event_range
    bags = []
    for c in range(spec.num_classes):
        sig = spec.signatures[c]
        for b in range(spec.bags_per_class):
            values = rng.uniform(0.0, spec.noise_level, size=(spec.bins, frames))
            n_events = int(rng.integers(lo, hi + 1))
            event_segments = np.sort(rng.choice(
                spec.segments_per_bag, size=n_events, replace=False))
            mask = np.zeros(spec.segments_per_bag, dtype=np.uint8)
            mask[event_segments] = 1
            if spec.amplitude_jitter > 0:
                gain = 1.0 - spec.amplitude_jitter * rng.uniform()
            else:
                gain = 1.0
            template = gain * sig.template(span)
            rows = slice(sig.band_start, sig.band_start + sig.band_width)
            for k in event_segments:
                start, end = nn.segment_span(int(k))
                # max-painting keeps overlapping event spans equal to the template
                region = values[rows, start:end]
                np.maximum(region, template[:, :end - start], out=region)
            bags.append(Bag(f"{spec.class_names[c]}_{b:03d}",
                            MelSpectrogram(values.astype(np.float32), 1024 / 44100),
                            label=c, mask=mask))
    return bags


def event_feature_separability(bags: list[Bag]) -> float:
    """Nearest-centroid accuracy on mean event-segment feature vectors.

    Serves as the generation-time oracle that class signatures are
    linearly separable.
    """
    feats, labels = [], []
    for bag in bags:
        if bag.mask is None or not bag.mask.any():
            continue
        cols = []
        for k in np.flatnonzero(bag.mask):
            start, end = nn.segment_span(int(k))
            cols.append(bag.features.values[:, start:end].mean(axis=1))
        feats.append(np.mean(cols, axis=0))
        labels.append(bag.label)
    x = np.asarray(feats)
    y = np.asarray(labels)
    centroids = np.stack([x[y == c].mean(axis=0) for c in np.unique(y)])
    pred = np.argmin(((x[:, None, :] - centroids[None]) ** 2).sum(axis=2), axis=1)
    return float((np.unique(y)[pred] == y).mean())


@dataclass
class Batch:
    """A rectangular batch of clips padded to a common frame count."""

    features: np.ndarray        # [B, bins, t]
    labels: np.ndarray          # [B]
    clip_ids: list[str]
    padding_fraction: float     # mean zero-frame share after padding


def pad_bag_values(values: np.ndarray, t: int, centered: bool) -> np.ndarray:
    frames = values.shape[1]
    if frames > t:
        raise ValueError(f"clip has {frames} frames, cannot pad down to {t}")
    if centered:
        left = (t - frames) // 2
        return np.pad(values, ((0, 0), (left, t - frames - left)))
    return np.pad(values, ((0, 0), (0, t - frames)))


def batch_iterator(bags: list[Bag], batch_size: int = 100, pad_to: int | None = None):
    """Yield rectangular batches.

    pad_to=None pads each batch to its own max length with trailing zeros;
    a global t pads every clip symmetrically (training parity with the
    padded condition). Delivery order follows the input list.
    """
    if not bags:
        raise ValueError("no bags to batch")
    for i in range(0, len(bags), batch_size):
        chunk = bags[i:i + batch_size]
        t = pad_to if pad_to is not None else max(b.frames for b in chunk)
        stacked = np.stack([pad_bag_values(b.features.values, t, centered=pad_to is not None)
                            for b in chunk])
        pad_frac = float(np.mean([(t - b.frames) / t for b in chunk]))
        yield Batch(stacked.astype(np.float32),
                    np.asarray([b.label for b in chunk]),
                    [b.clip_id for b in chunk],
                    pad_frac)


def save_dataset(bags: list[Bag], class_names: list[str], directory: str | Path) -> Path:
    """Persist bags in the feature-cache format plus manifest and mask sidecar."""
    directory = Path(directory)
    feature_dir = directory / "features"
    feature_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for bag in bags:
        save_features(bag.features, feature_dir / f"{bag.clip_id}.mel")
        records.append(ManifestRecord(f"features/{bag.clip_id}.mel",
                                      class_names[bag.label]))
    save_manifest(Manifest(records), directory / "manifest.csv")
    with (directory / "masks.tsv").open("w") as fh:
        for bag in bags:
            if bag.mask is not None:
                fh.write(f"{bag.clip_id}\t{''.join(str(int(m)) for m in bag.mask)}\n")
    return directory


def load_dataset(directory: str | Path) -> tuple[list[Bag], list[str]]:
    """Load a persisted dataset back into bags; masks restored when present."""
    directory = Path(directory)
    manifest = load_manifest(directory / "manifest.csv")
    masks: dict[str, np.ndarray] = {}
    mask_path = directory / "masks.tsv"
    if mask_path.exists():
        for line in mask_path.read_text().splitlines():
            clip_id, bits = line.split("\t")
            masks[clip_id] = np.asarray([int(ch) for ch in bits], dtype=np.uint8)
    vocabulary = manifest.vocabulary
    bags = []
    for record in manifest.records:
        clip_id = Path(record.path).stem
        spec = load_features(directory / record.path)
        bags.append(Bag(clip_id, spec, vocabulary.index(record.label),
                        masks.get(clip_id)))
    return bags, vocabulary
