// Analysis view state. The expert subset and every display option are
// encoded in the URL so a viewpoint can be shared and reproduced.

import type { ClassifyResponse, ModelChoice, RelevanceResponse } from "./types.js";

export interface ViewState {
    clipId: string | null;
    expertIds: string[]; // ordered, toggling preserves insertion order
    model: ModelChoice | null;
    showSpectrogram: boolean;
    showLabels: boolean;
    interpolate: boolean; // steps by default, linear only for presentation
    profile: RelevanceResponse | null;
    pinnedProfile: RelevanceResponse | null; // previous curve for comparison
    classification: ClassifyResponse | null;
    errorBanner: string | null;
    stale: boolean; // true when showing results older than the current inputs
}

export function initialState(): ViewState {
    return {
        clipId: null,
        expertIds: [],
        model: null,
        showSpectrogram: true,
        showLabels: true,
        interpolate: false,
        profile: null,
        pinnedProfile: null,
        classification: null,
        errorBanner: null,
        stale: false,
    };
}

export function toggleExpert(state: ViewState, expertId: string): ViewState {
    const enabled = state.expertIds.includes(expertId)
        ? state.expertIds.filter((id) => id !== expertId)
        : [...state.expertIds, expertId];
    // the current curve becomes the pinned comparison curve
    return {
        ...state,
        expertIds: enabled,
        pinnedProfile: state.profile ?? state.pinnedProfile,
    };
}

export function selectClip(state: ViewState, clipId: string): ViewState {
    // profiles belong to a clip; switching drops both curves
    return { ...state, clipId, profile: null, pinnedProfile: null, classification: null };
}

export function canShowProfile(state: ViewState): boolean {
    return state.expertIds.length >= 2;
}

export function encodeState(state: ViewState): string {
    const params = new URLSearchParams();
    if (state.clipId) params.set("clip", state.clipId);
    if (state.expertIds.length) params.set("experts", state.expertIds.join(","));
    if (state.model) {
        params.set(
            "model",
            state.model.kind === "relnet"
                ? `relnet:${state.model.id}`
                : `fusion:${state.model.mode}`,
        );
    }
    if (!state.showSpectrogram) params.set("spec", "0");
    if (!state.showLabels) params.set("labels", "0");
    if (state.interpolate) params.set("interp", "1");
    return params.toString();
}

export function decodeState(query: string): ViewState {
    const params = new URLSearchParams(query);
    const state = initialState();
    state.clipId = params.get("clip");
    const experts = params.get("experts");
    state.expertIds = experts ? experts.split(",").filter((s) => s.length) : [];
    const model = params.get("model");
    if (model?.startsWith("relnet:")) {
        state.model = { kind: "relnet", id: model.slice("relnet:".length) };
    } else if (model?.startsWith("fusion:")) {
        const mode = model.slice("fusion:".length);
        if (mode === "MV" || mode === "SUM" || mode === "PROD" || mode === "RV") {
            state.model = { kind: "fusion", mode };
        }
    }
    state.showSpectrogram = params.get("spec") !== "0";
    state.showLabels = params.get("labels") !== "0";
    state.interpolate = params.get("interp") === "1";
    return state;
}
