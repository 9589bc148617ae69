// The whole viewpoint must round-trip through the URL.

import { describe, expect, it } from "vitest";

import { decodeState, encodeState, initialState, toggleExpert } from "../src/state.js";

describe("url encoding", () => {
    it("round-trips a full viewpoint", () => {
        const state = {
            ...initialState(),
            clipId: "class2_000",
            expertIds: ["class0", "class2", "class1"],
            model: { kind: "fusion", mode: "RV" } as const,
            showSpectrogram: false,
            interpolate: true,
        };
        const decoded = decodeState(encodeState(state));
        expect(decoded.clipId).toBe("class2_000");
        expect(decoded.expertIds).toEqual(["class0", "class2", "class1"]); // order kept
        expect(decoded.model).toEqual({ kind: "fusion", mode: "RV" });
        expect(decoded.showSpectrogram).toBe(false);
        expect(decoded.showLabels).toBe(true);
        expect(decoded.interpolate).toBe(true);
    });

    it("round-trips a relnet model choice", () => {
        const state = { ...initialState(), model: { kind: "relnet", id: "main" } as const };
        expect(decodeState(encodeState(state)).model).toEqual({
            kind: "relnet",
            id: "main",
        });
    });

    it("decodes an empty query to the initial state", () => {
        expect(decodeState("")).toEqual(initialState());
    });
});

describe("expert toggling", () => {
    it("appends on enable and filters on disable, keeping order", () => {
        let state = initialState();
        state = toggleExpert(state, "b");
        state = toggleExpert(state, "a");
        state = toggleExpert(state, "c");
        expect(state.expertIds).toEqual(["b", "a", "c"]);
        state = toggleExpert(state, "a");
        expect(state.expertIds).toEqual(["b", "c"]);
    });
});
