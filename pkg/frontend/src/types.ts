// Response bodies of the analysis service, mirrored 1:1.

export interface ExpertInfo {
    id: string;
    class_id: number;
    class_name: string;
    epochs_run: number;
    best_epoch: number;
    best_val_loss: number;
}

export interface ClipInfo {
    id: string;
    label: string;
    duration_seconds: number;
    frames: number;
    bins: number;
}

export interface SpectrogramResponse {
    clip_id: string;
    bins: number;
    frames: number;
    display_frames: number;
    hop_seconds: number;
    column_seconds: number;
    values: number[][];
}

export interface SegmentRelevance {
    index: number;
    start_seconds: number;
    r_max: number;
    top_expert: string;
}

export interface RelevanceResponse {
    clip_id: string;
    expert_ids: string[];
    expert_names: string[];
    segments: SegmentRelevance[];
}

export interface RankedClass {
    class_name: string;
    score: number;
}

export interface ClassifyResponse {
    clip_id: string;
    model: string;
    ranking: RankedClass[];
    top3: string[];
    degenerate?: boolean;
}

export type ModelChoice =
    | { kind: "relnet"; id: string }
    | { kind: "fusion"; mode: "MV" | "SUM" | "PROD" | "RV" };
