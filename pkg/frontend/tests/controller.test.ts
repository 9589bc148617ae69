// Latest-wins behaviour: each toggle issues exactly one relevance request,
// an in-flight request is aborted by the next one, and stale responses
// never reach the view.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Controller } from "../src/controller.js";
import { initialState } from "../src/state.js";
import type { RelevanceResponse } from "../src/types.js";

const fixture = <T>(name: string): T =>
    JSON.parse(readFileSync(new URL(`../fixtures/${name}`, import.meta.url), "utf-8"));

const pair = fixture<RelevanceResponse>("relevance_pair.json");
const trio = fixture<RelevanceResponse>("relevance_trio.json");

interface Pending {
    url: string;
    body: any;
    resolve: (body: unknown) => void;
    aborted: boolean;
}

/** fetch stand-in that parks every request until the test releases it */
function makeFetchHarness() {
    const pending: Pending[] = [];
    const fetchImpl = (url: string, init?: RequestInit): Promise<Response> =>
        new Promise((resolve, reject) => {
            const entry: Pending = {
                url,
                body: init?.body ? JSON.parse(init.body as string) : null,
                resolve: (body) =>
                    resolve(new Response(JSON.stringify(body), { status: 200 })),
                aborted: false,
            };
            init?.signal?.addEventListener("abort", () => {
                entry.aborted = true;
                reject(new DOMException("aborted", "AbortError"));
            });
            pending.push(entry);
        });
    return { pending, fetchImpl };
}

function makeController(fetchImpl: any) {
    const api = new ApiClient("http://test", fetchImpl);
    const states: any[] = [];
    const controller = new Controller(api, { ...initialState(), clipId: "class2_000" },
        (s) => states.push(s));
    return { controller, states };
}

describe("latest-wins relevance requests", () => {
    it("issues exactly one request per toggle", async () => {
        const { pending, fetchImpl } = makeFetchHarness();
        const { controller } = makeController(fetchImpl);
        const toggle = controller.toggle("class0");
        expect(pending).toHaveLength(0); // below 2 experts: no request at all
        await toggle;

        const second = controller.toggle("class1");
        expect(pending).toHaveLength(1);
        expect(pending[0].url).toBe("http://test/api/relevance");
        expect(pending[0].body.expert_ids).toEqual(["class0", "class1"]);
        pending[0].resolve(pair);
        await second;
        expect(pending).toHaveLength(1); // still exactly one request total
    });

    it("aborts the in-flight request when a newer toggle arrives", async () => {
        const { pending, fetchImpl } = makeFetchHarness();
        const { controller, states } = makeController(fetchImpl);
        await controller.toggle("class0");

        const first = controller.toggle("class1"); // request 1 in flight
        const second = controller.toggle("class2"); // request 2 aborts it
        expect(pending).toHaveLength(2);
        expect(pending[0].aborted).toBe(true);
        expect(pending[1].aborted).toBe(false);
        expect(pending[1].body.expert_ids).toEqual(["class0", "class1", "class2"]);
        pending[1].resolve(trio);
        await Promise.all([first, second]);
        expect(controller.state.profile).toEqual(trio);
        // the aborted request must not have produced an error banner
        expect(states.every((s) => s.errorBanner === null)).toBe(true);
    });

    it("drops a stale response that loses the race", async () => {
        const { pending, fetchImpl } = makeFetchHarness();
        const { controller } = makeController(fetchImpl);
        await controller.toggle("class0");
        const first = controller.toggle("class1");
        const second = controller.toggle("class2");
        // resolve them out of order: the newer one first, then the stale one
        pending[1].resolve(trio);
        await second;
        pending[0].resolve(pair); // already aborted; resolution is a no-op
        await first;
        expect(controller.state.profile).toEqual(trio);
    });

    it("pins the previous curve when the expert set changes", async () => {
        const { pending, fetchImpl } = makeFetchHarness();
        const { controller } = makeController(fetchImpl);
        await controller.toggle("class0");
        const first = controller.toggle("class1");
        pending[0].resolve(pair);
        await first;
        expect(controller.state.profile).toEqual(pair);

        const second = controller.toggle("class2");
        expect(controller.state.pinnedProfile).toEqual(pair);
        pending[1].resolve(trio);
        await second;
        expect(controller.state.profile).toEqual(trio);
        expect(controller.state.pinnedProfile).toEqual(pair);
    });

    it("hides the profile when toggling below two experts", async () => {
        const { pending, fetchImpl } = makeFetchHarness();
        const { controller } = makeController(fetchImpl);
        await controller.toggle("class0");
        const on = controller.toggle("class1");
        pending[0].resolve(pair);
        await on;
        await controller.toggle("class1"); // back to one expert
        expect(pending).toHaveLength(1); // no new request was issued
        expect(controller.state.profile).toBeNull();
    });
});

describe("error handling", () => {
    it("keeps stale results visible behind a banner when the backend fails", async () => {
        let calls = 0;
        const failingFetch = (): Promise<Response> => {
            calls += 1;
            if (calls === 1) {
                return Promise.resolve(
                    new Response(JSON.stringify(pair), { status: 200 }),
                );
            }
            return Promise.reject(new TypeError("connect ECONNREFUSED"));
        };
        const { controller } = makeController(failingFetch);
        await controller.toggle("class0");
        await controller.toggle("class1");
        expect(controller.state.profile).toEqual(pair);

        await controller.toggle("class2"); // this request fails
        expect(controller.state.errorBanner).toContain("unreachable");
        expect(controller.state.stale).toBe(true);
        expect(controller.state.profile).toEqual(pair); // old curve still shown
    });

    it("surfaces backend validation errors verbatim", async () => {
        const rejectingFetch = (): Promise<Response> =>
            Promise.resolve(
                new Response(
                    JSON.stringify({ error_code: "validation_error",
                                     detail: "unknown expert id 'ghost'" }),
                    { status: 404 },
                ),
            );
        const { controller } = makeController(rejectingFetch);
        await controller.toggle("class0");
        await controller.toggle("ghost");
        expect(controller.state.errorBanner).toContain("unknown expert id 'ghost'");
    });
});
