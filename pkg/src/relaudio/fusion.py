"""Late fusion of expert outputs, the MAP@3 metric, and the padded versus
unpadded evaluation harness."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .data import Bag, pad_bag_values
from .relevance import ExpertSet, expert_probabilities, weighted_relevance

PROD_EPS = 1e-12
REPORT_VERSION = 1


class FusionMode(str, Enum):
    MV = "MV"      # full vote to each segment's argmax class
    SUM = "SUM"    # probabilities summed over segments
    PROD = "PROD"  # probabilities multiplied (log domain)
    RV = "RV"      # argmax votes weighted by segment relevance


def fusion_scores(p: np.ndarray, mode: FusionMode, relevance: np.ndarray | None = None,
                  prod_eps: float = PROD_EPS) -> np.ndarray:
    """Per-class fusion scores from an [N x S] probability matrix.

    PROD accumulates in the log domain with a floor of prod_eps (set it to
    0 to recover the raw product's collapse to -inf).
    """
    mode = FusionMode(mode)
    n = p.shape[0]
    if mode is FusionMode.MV:
        return np.bincount(p.argmax(axis=0), minlength=n).astype(np.float64)
    if mode is FusionMode.SUM:
        return p.sum(axis=1)
    if mode is FusionMode.PROD:
        with np.errstate(divide="ignore"):
            return np.log(p + prod_eps).sum(axis=1)
    if relevance is None:
        raise ValueError("RV fusion requires per-segment relevance scores")
    if len(relevance) != p.shape[1]:
        raise ValueError(
            f"relevance has {len(relevance)} entries for {p.shape[1]} segments")
    return np.bincount(p.argmax(axis=0), weights=np.asarray(relevance), minlength=n)


def fuse(p: np.ndarray, mode: FusionMode, relevance: np.ndarray | None = None,
         prod_eps: float = PROD_EPS) -> np.ndarray:
    """Rank the N classes from an [N x S] probability matrix.

    Returns the full ranking, best class first; ties break toward the
    lowest class index.
    """
    scores = fusion_scores(p, mode, relevance, prod_eps)
    return np.lexsort((np.arange(p.shape[0]), -scores))


def average_precision_at_k(predicted: Sequence[int], truth: int, k: int = 3) -> float:
    """Credit 1/rank when the truth appears at rank <= k, else 0."""
    for rank, label in enumerate(predicted[:k], start=1):
        if label == truth:
            return 1.0 / rank
    return 0.0


def map_at_3(rankings: Sequence[Sequence[int]], truths: Sequence[int],
             metric: str = "map") -> float:
    """Mean average precision over clips at cutoff 3.

    metric="recall" switches to the recall-style count (credit 1 whenever
    the truth is anywhere in the top 3); reports always state which was
    used. Empty prediction lists earn 0.
    """
    if metric == "map":
        credits = [average_precision_at_k(r, t, 3) for r, t in zip(rankings, truths)]
    elif metric == "recall":
        credits = [1.0 if t in list(r)[:3] else 0.0 for r, t in zip(rankings, truths)]
    else:
        raise ValueError(f"unknown metric {metric!r}, expected 'map' or 'recall'")
    return float(np.mean(credits))


class Ranker(Protocol):
    class_names: list[str]

    def rank(self, spec) -> np.ndarray: ...


class FusionClassifier:
    """Expert late fusion exposed with the common ranking interface."""

    def __init__(self, experts: ExpertSet, mode: FusionMode):
        self.experts = experts
        self.mode = FusionMode(mode)
        self.class_names = experts.class_names

    def rank(self, spec) -> np.ndarray:
        matrix = expert_probabilities(spec, self.experts)
        rel = None
        if self.mode is FusionMode.RV:
            rel = np.asarray(weighted_relevance(matrix.values))
        return fuse(matrix.values, self.mode, rel)


@dataclass
class ConditionResult:
    """One evaluation condition (padded or unpadded) for every model."""

    scores: dict[str, float]
    top3: dict[str, list[list[int]]]
    padding_fraction: float


@dataclass
class ExperimentReport:
    seed: int
    metric: str
    pad_to: int
    class_names: list[str]
    clip_ids: list[str]
    truths: list[int]
    conditions: dict[str, ConditionResult] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    format_version: int = REPORT_VERSION

    def to_json(self) -> str:
        payload = {
            "format_version": self.format_version,
            "seed": self.seed,
            "metric": self.metric,
            "pad_to": self.pad_to,
            "class_names": self.class_names,
            "clip_ids": self.clip_ids,
            "truths": self.truths,
            "config": self.config,
            "conditions": {
                name: {
                    "scores": cond.scores,
                    "top3": cond.top3,
                    "padding_fraction": cond.padding_fraction,
                }
                for name, cond in self.conditions.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    def table(self) -> str:
        """Human-readable summary, one model per row."""
        names = sorted({m for cond in self.conditions.values() for m in cond.scores})
        lines = [f"metric: {self.metric}@3   pad_to: {self.pad_to}",
                 f"{'model':<12}" + "".join(f"{c:>12}" for c in self.conditions)]
        for model in names:
            row = f"{model:<12}"
            for cond in self.conditions.values():
                score = cond.scores.get(model)
                row += f"{score:>12.4f}" if score is not None else f"{'-':>12}"
            lines.append(row)
        return "\n".join(lines)


def load_report(path: str | Path) -> ExperimentReport:
    raw = json.loads(Path(path).read_text())
    if raw["format_version"] != REPORT_VERSION:
        raise ValueError(
            f"report version {raw['format_version']} unsupported, expected {REPORT_VERSION}")
    report = ExperimentReport(raw["seed"], raw["metric"], raw["pad_to"],
                              raw["class_names"], raw["clip_ids"], raw["truths"],
                              config=raw["config"])
    for name, cond in raw["conditions"].items():
        report.conditions[name] = ConditionResult(cond["scores"], cond["top3"],
                                                  cond["padding_fraction"])
    return report


def _check_class_sets(models: dict[str, Ranker]) -> list[str]:
    names = None
    for model_name, model in models.items():
        if names is None:
            names = list(model.class_names)
        elif list(model.class_names) != names:
            raise ValueError(
                f"model {model_name!r} was trained on classes {model.class_names}, "
                f"others on {names}")
    if names is None:
        raise ValueError("no models to evaluate")
    return names


def run_experiment(test_bags: list[Bag], models: dict[str, Ranker],
                   pad_to: int, pad_test: bool, metric: str = "map") -> ConditionResult:
    """Evaluate every model on the identical test clips, in index order."""
    _check_class_sets(models)
    if pad_test:
        inputs = [pad_bag_values(b.features.values, pad_to, centered=True)
                  for b in test_bags]
        pad_frac = float(np.mean([(pad_to - b.frames) / pad_to for b in test_bags]))
    else:
        inputs = [b.features.values for b in test_bags]
        pad_frac = 0.0
    truths = [b.label for b in test_bags]
    scores: dict[str, float] = {}
    top3: dict[str, list[list[int]]] = {}
    for name, model in models.items():
        rankings = [model.rank(x)[:3].tolist() for x in inputs]
        top3[name] = rankings
        scores[name] = map_at_3(rankings, truths, metric)
    return ConditionResult(scores, top3, pad_frac)


def experiment_report(test_bags: list[Bag], models: dict[str, Ranker], pad_to: int,
                      seed: int, metric: str = "map", config: dict | None = None
                      ) -> ExperimentReport:
    """Run the padded and unpadded conditions and assemble the full report."""
    class_names = _check_class_sets(models)
    report = ExperimentReport(seed=seed, metric=metric, pad_to=pad_to,
                              class_names=class_names,
                              clip_ids=[b.clip_id for b in test_bags],
                              truths=[b.label for b in test_bags],
                              config=config or {})
    for cond_name, pad_test in (("padded", True), ("unpadded", False)):
        report.conditions[cond_name] = run_experiment(test_bags, models, pad_to,
                                                      pad_test, metric)
    return report
