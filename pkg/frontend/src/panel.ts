// Classification panel model: ranked classes with the top-3 flagged, plus
// the note explaining whether the expert picker affects this model.

import type { ClassifyResponse, ModelChoice } from "./types.js";

export interface PanelRow {
    className: string;
    score: number; // raw API score
    inTop3: boolean;
}

export interface PanelModel {
    modelLabel: string;
    note: string;
    rows: PanelRow[];
    degenerate: boolean;
    stale: boolean;
}

export function buildPanel(
    response: ClassifyResponse,
    choice: ModelChoice,
    stale: boolean = false,
): PanelModel {
    const note =
        choice.kind === "relnet"
            ? "fixed model: ranking does not follow the expert picker"
            : "fusion over the enabled experts: ranking follows the picker";
    return {
        modelLabel: response.model,
        note,
        rows: response.ranking.map((r) => ({
            className: r.class_name,
            score: r.score,
            inTop3: response.top3.includes(r.class_name),
        })),
        degenerate: response.degenerate ?? false,
        stale,
    };
}
