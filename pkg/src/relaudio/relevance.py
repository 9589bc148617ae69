"""Entropy-based segment relevance over a chosen expert set.

For each segment the experts' positive probabilities form a column; its
normalized Shannon entropy (log base N, so values land in [0, 1]) measures
prediction uncertainty, relevance is the complement, and the final score
weights relevance by the column maximum so that segments where every
expert is near zero cannot look relevant.

The column is normalized to a distribution before the entropy is taken;
this keeps "all experts high" mapping to maximum uncertainty. A literal
mode that skips the normalization is available for comparison (there, all
experts emitting 1.0 yields zero entropy and full relevance, and values
are no longer confined to [0, 1]).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .experts import ExpertModel
from .features import HOP_SIZE, TARGET_RATE, MelSpectrogram

COLUMN_EPS = 1e-12


@dataclass
class ExpertSet:
    """Ordered experts sharing one segmentation geometry."""

    entries: list[ExpertModel]

    def __post_init__(self):
        ids = [e.class_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError(f"expert class ids must be distinct, got {ids}")
        for e in self.entries[1:]:
            if not e.config.compatible_with(self.entries[0].config):
                raise ValueError(
                    f"expert for class {e.class_id} has an incompatible feature "
                    f"configuration")

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def class_ids(self) -> list[int]:
        return [e.class_id for e in self.entries]

    @property
    def class_names(self) -> list[str]:
        return [e.class_name for e in self.entries]

    def __iter__(self):
        return iter(self.entries)


@dataclass
class ProbabilityMatrix:
    """P[n, k]: expert n's positive probability for segment k."""

    values: np.ndarray
    segment_times: np.ndarray


@dataclass
class RelevanceProfile:
    r_max: np.ndarray
    top_expert: np.ndarray
    segment_times: np.ndarray
    expert_ids: list[int]
    expert_names: list[str]

    @property
    def top_expert_names(self) -> list[str]:
        return [self.expert_names[i] for i in self.top_expert]


def _check_columns(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    n = p.shape[0]
    if n < 2:
        raise ValueError(f"relevance needs at least 2 experts, got {n}")
    return p


def entropy(p_column: np.ndarray, literal: bool = False) -> np.ndarray | float:
    """Base-N Shannon entropy of one probability column (or one per column
    of an [N x S] matrix), with the 0*log(0) := 0 convention.

    The column is normalized to a distribution first; all-zero columns are
    defined as maximally uncertain (H = 1). literal=True skips the
    normalization and applies the raw values.
    """
    p = _check_columns(p_column)
    scalar = p.ndim == 1
    if scalar:
        p = p[:, None]
    n = p.shape[0]
    log_n = np.log(n)
    if literal:
        terms = np.where(p > 0.0, p * np.log(np.maximum(p, COLUMN_EPS)), 0.0)
        h = -terms.sum(axis=0) / log_n
    else:
        sums = p.sum(axis=0)
        ok = sums > COLUMN_EPS
        safe = np.where(ok, sums, 1.0)
        q = p / safe
        terms = np.where(q > 0.0, q * np.log(np.maximum(q, COLUMN_EPS)), 0.0)
        h = np.where(ok, -terms.sum(axis=0) / log_n, 1.0)
    return float(h[0]) if scalar else h


def relevance(p_column: np.ndarray, literal: bool = False) -> np.ndarray | float:
    """Complement of the column entropy."""
    return 1.0 - entropy(p_column, literal)


def weighted_relevance(p_column: np.ndarray, literal: bool = False) -> np.ndarray | float:
    """Relevance weighted by the column maximum, suppressing all-low columns."""
    p = _check_columns(p_column)
    r = relevance(p, literal)
    return r * p.max(axis=0) if p.ndim > 1 else float(r * p.max())


def segment_times(spec, config, n_segments: int) -> np.ndarray:
    """Start time in seconds of each segment's receptive field."""
    hop = spec.frame_hop_seconds if isinstance(spec, MelSpectrogram) \
        else HOP_SIZE / TARGET_RATE
    starts = np.array([config.segment_span(k)[0] for k in range(n_segments)])
    return starts * hop


def expert_probabilities(spec, experts: ExpertSet) -> ProbabilityMatrix:
    """Stack every expert's positive probabilities; rows follow expert order."""
    rows = [e.positive_prob(spec) for e in experts]
    values = np.stack(rows)
    times = segment_times(spec, experts.entries[0].config, values.shape[1])
    return ProbabilityMatrix(values, times)


def relevance_profile(spec, experts: ExpertSet, literal: bool = False
                      ) -> RelevanceProfile:
    """Per-segment weighted relevance plus the top expert per segment.

    Recomputing with a different expert set needs no retraining; argmax
    ties break toward the lowest expert index.
    """
    if experts.n < 2:
        raise ValueError(f"relevance profiles need at least 2 experts, got {experts.n}")
    matrix = expert_probabilities(spec, experts)
    r_max = weighted_relevance(matrix.values, literal)
    top = matrix.values.argmax(axis=0)
    return RelevanceProfile(np.asarray(r_max), top, matrix.segment_times,
                            experts.class_ids, experts.class_names)


PROFILE_COLUMNS = ["segment", "start_seconds", "r_max", "top_expert"]


def export_profile(profile: RelevanceProfile, path: str | Path | None = None) -> str:
    """Serialize a profile as delimited text; returns the text, optionally
    writing it to path."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(PROFILE_COLUMNS)
    names = profile.top_expert_names
    for k in range(len(profile.r_max)):
        writer.writerow([k, f"{profile.segment_times[k]:.6f}",
                         f"{profile.r_max[k]:.8f}", names[k]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_profile(path: str | Path) -> dict[str, np.ndarray | list[str]]:
    """Parse an exported profile back into arrays for plotting."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "segment": np.array([int(r["segment"]) for r in rows]),
        "start_seconds": np.array([float(r["start_seconds"]) for r in rows]),
        "r_max": np.array([float(r["r_max"]) for r in rows]),
        "top_expert": [r["top_expert"] for r in rows],
    }
