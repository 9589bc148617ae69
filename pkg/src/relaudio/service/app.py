"""Read-only HTTP interface for interactive relevance analysis.

Every endpoint is a pure function of the loaded artifacts and the request
body; expert subsets live in the request, never in server state, so
concurrent analysts can explore different viewpoints against one process.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..fusion import FusionMode, fuse, fusion_scores
from ..relevance import ExpertSet, expert_probabilities, relevance_profile, weighted_relevance
from .catalog import SessionCatalog
from . import schemas

MAX_DISPLAY_COLUMNS = 2000


class ApiError(Exception):
    def __init__(self, status_code: int, error_code: str, detail: str):
        self.status_code = status_code
        self.error_code = error_code
        self.detail = detail


def create_app(models_dir: str | Path, features_dir: str | Path,
               manifest_path: str | Path | None = None) -> FastAPI:
    catalog = SessionCatalog(models_dir, features_dir, manifest_path)
    app = FastAPI(title="relaudio analysis service")
    app.state.catalog = catalog
    # read-only endpoints, safe to open up for the browser client
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code,
                            content={"error_code": exc.error_code, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error_code": "validation_error",
                                     "detail": str(exc.errors())})

    def get_clip(clip_id: str):
        clip = catalog.clips.get(clip_id)
        if clip is None:
            raise ApiError(404, "not_found", f"unknown clip id {clip_id!r}")
        return clip

    def get_expert_set(expert_ids: list[str]) -> ExpertSet:
        entries = []
        for expert_id in expert_ids:
            expert = catalog.experts.get(expert_id)
            if expert is None:
                raise ApiError(404, "not_found", f"unknown expert id {expert_id!r}")
            entries.append(expert)
        try:
            return ExpertSet(entries)
        except ValueError as exc:
            raise ApiError(422, "validation_error", str(exc))

    @app.get("/api/experts", response_model=list[schemas.ExpertInfo])
    def list_experts():
        return [
            schemas.ExpertInfo(id=expert_id, class_id=e.class_id,
                               class_name=e.class_name,
                               epochs_run=e.metadata.epochs_run,
                               best_epoch=e.metadata.best_epoch,
                               best_val_loss=e.metadata.best_val_loss)
            for expert_id, e in sorted(catalog.experts.items())
        ]

    @app.get("/api/relnets", response_model=list[schemas.RelnetInfo])
    def list_relnets():
        return [
            schemas.RelnetInfo(id=relnet_id, class_names=m.class_names,
                               epochs_run=m.metadata.epochs_run,
                               best_epoch=m.metadata.best_epoch)
            for relnet_id, m in sorted(catalog.relnets.items())
        ]

    @app.get("/api/clips", response_model=list[schemas.ClipInfo])
    def list_clips():
        return [
            schemas.ClipInfo(id=c.id, label=c.label,
                             duration_seconds=c.duration_seconds,
                             frames=c.features.frames, bins=c.features.bins)
            for c in sorted(catalog.clips.values(), key=lambda c: c.id)
        ]

    @app.get("/api/clips/{clip_id}/spectrogram",
             response_model=schemas.SpectrogramResponse)
    def clip_spectrogram(clip_id: str):
        clip = get_clip(clip_id)
        values = clip.features.values
        frames = values.shape[1]
        stride = max(1, math.ceil(frames / MAX_DISPLAY_COLUMNS))
        if stride > 1:
            usable = (frames // stride) * stride
            display = values[:, :usable].reshape(values.shape[0], -1, stride).mean(axis=2)
        else:
            display = values
        return schemas.SpectrogramResponse(
            clip_id=clip_id, bins=clip.features.bins, frames=frames,
            display_frames=display.shape[1],
            hop_seconds=clip.features.frame_hop_seconds,
            column_seconds=stride * clip.features.frame_hop_seconds,
            values=[[round(float(v), 5) for v in row] for row in display])

    @app.post("/api/relevance", response_model=schemas.RelevanceResponse)
    def compute_relevance(body: schemas.RelevanceRequest):
        clip = get_clip(body.clip_id)
        experts = get_expert_set(body.expert_ids)
        profile = relevance_profile(clip.features, experts)
        names = profile.top_expert_names
        segments = [
            schemas.SegmentRelevance(index=k,
                                     start_seconds=float(profile.segment_times[k]),
                                     r_max=float(profile.r_max[k]),
                                     top_expert=names[k])
            for k in range(len(profile.r_max))
        ]
        return schemas.RelevanceResponse(clip_id=body.clip_id,
                                         expert_ids=body.expert_ids,
                                         expert_names=experts.class_names,
                                         segments=segments)

    @app.post("/api/classify", response_model=schemas.ClassifyResponse)
    def classify(body: schemas.ClassifyRequest):
        clip = get_clip(body.clip_id)
        if (body.relnet_id is None) == (body.fusion is None):
            raise ApiError(422, "validation_error",
                           "specify exactly one of relnet_id or fusion")
        if body.relnet_id is not None:
            model = catalog.relnets.get(body.relnet_id)
            if model is None:
                raise ApiError(404, "not_found", f"unknown relnet id {body.relnet_id!r}")
            prediction = model.forward(clip.features)
            order = prediction.ranking()
            names = model.class_names
            ranking = [schemas.RankedClass(class_name=names[i],
                                           score=float(prediction.distribution[i]))
                       for i in order]
            return schemas.ClassifyResponse(clip_id=body.clip_id,
                                            model=f"relnet:{body.relnet_id}",
                                            ranking=ranking,
                                            top3=[r.class_name for r in ranking[:3]],
                                            degenerate=prediction.degenerate)
        try:
            mode = FusionMode(body.fusion.mode)
        except ValueError:
            raise ApiError(422, "validation_error",
                           f"unknown fusion mode {body.fusion.mode!r}")
        experts = get_expert_set(body.fusion.expert_ids)
        matrix = expert_probabilities(clip.features, experts)
        rel = None
        if mode is FusionMode.RV:
            rel = np.asarray(weighted_relevance(matrix.values))
        scores = fusion_scores(matrix.values, mode, rel)
        order = fuse(matrix.values, mode, rel)
        names = experts.class_names
        ranking = [schemas.RankedClass(class_name=names[i], score=float(scores[i]))
                   for i in order]
        return schemas.ClassifyResponse(clip_id=body.clip_id,
                                        model=f"fusion:{mode.value}",
                                        ranking=ranking,
                                        top3=[r.class_name for r in ranking[:3]])

    return app
