"""Request and response bodies for the analysis service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ExpertInfo(BaseModel):
    id: str
    class_id: int
    class_name: str
    epochs_run: int
    best_epoch: int
    best_val_loss: float


class RelnetInfo(BaseModel):
    id: str
    class_names: list[str]
    epochs_run: int
    best_epoch: int


class ClipInfo(BaseModel):
    id: str
    label: str
    duration_seconds: float
    frames: int
    bins: int


class SpectrogramResponse(BaseModel):
    clip_id: str
    bins: int
    frames: int
    display_frames: int
    hop_seconds: float
    column_seconds: float
    values: list[list[float]]


class RelevanceRequest(BaseModel):
    clip_id: str
    expert_ids: list[str] = Field(min_length=2)


class SegmentRelevance(BaseModel):
    index: int
    start_seconds: float
    r_max: float
    top_expert: str


class RelevanceResponse(BaseModel):
    clip_id: str
    expert_ids: list[str]
    expert_names: list[str]
    segments: list[SegmentRelevance]


class FusionRequest(BaseModel):
    mode: str
    expert_ids: list[str] = Field(min_length=2)


class ClassifyRequest(BaseModel):
    clip_id: str
    relnet_id: str | None = None
    fusion: FusionRequest | None = None


class RankedClass(BaseModel):
    class_name: str
    score: float


class ClassifyResponse(BaseModel):
    clip_id: str
    model: str
    ranking: list[RankedClass]
    top3: list[str]
    degenerate: bool = False


class ErrorBody(BaseModel):
    error_code: str
    detail: str
