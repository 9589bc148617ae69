// Orchestration: state transitions trigger API calls and push fresh view
// state to the renderer. Relevance refreshes are latest-wins; a toggle
// that arrives while a request is in flight aborts it, and stale
// responses never reach the view.

import { ApiClient, ApiError, isAbort } from "./api.js";
import {
    canShowProfile,
    selectClip,
    toggleExpert,
    type ViewState,
} from "./state.js";
import type { ModelChoice } from "./types.js";

export type Listener = (state: ViewState) => void;

export class Controller {
    private generation = 0; // stamps relevance requests; only the newest lands

    constructor(
        private readonly api: ApiClient,
        public state: ViewState,
        private readonly listener: Listener,
    ) {}

    private emit(): void {
        this.listener(this.state);
    }

    async pickClip(clipId: string): Promise<void> {
        this.state = selectClip(this.state, clipId);
        this.emit();
        await Promise.all([this.refreshProfile(), this.refreshClassification()]);
    }

    async toggle(expertId: string): Promise<void> {
        this.state = toggleExpert(this.state, expertId);
        this.emit();
        const jobs = [this.refreshProfile()];
        if (this.state.model?.kind === "fusion") {
            // fusion rankings depend on the enabled subset
            jobs.push(this.refreshClassification());
        }
        await Promise.all(jobs);
    }

    async pickModel(choice: ModelChoice | null): Promise<void> {
        this.state = { ...this.state, model: choice };
        this.emit();
        await this.refreshClassification();
    }

    async refreshProfile(): Promise<void> {
        const { clipId } = this.state;
        if (!clipId || !canShowProfile(this.state)) {
            this.state = { ...this.state, profile: null };
            this.emit();
            return;
        }
        const generation = ++this.generation;
        try {
            const profile = await this.api.relevance(clipId, this.state.expertIds);
            if (generation !== this.generation) return; // a newer request won
            this.state = { ...this.state, profile, errorBanner: null, stale: false };
            this.emit();
        } catch (error) {
            if (isAbort(error)) return;
            if (generation !== this.generation) return;
            this.fail(error);
        }
    }

    async refreshClassification(): Promise<void> {
        const { clipId, model } = this.state;
        if (!clipId || !model) return;
        if (model.kind === "fusion" && this.state.expertIds.length < 2) return;
        try {
            const classification = await this.api.classify(
                clipId,
                model.kind === "relnet"
                    ? { relnet_id: model.id }
                    : { fusion: { mode: model.mode, expert_ids: this.state.expertIds } },
            );
            this.state = { ...this.state, classification, errorBanner: null, stale: false };
            this.emit();
        } catch (error) {
            if (isAbort(error)) return;
            this.fail(error);
        }
    }

    // Non-blocking failure: keep the last results visible but greyed.
    private fail(error: unknown): void {
        const detail =
            error instanceof ApiError
                ? `[${error.errorCode}] ${error.message}`
                : `service unreachable: ${String(error)}`;
        this.state = { ...this.state, errorBanner: detail, stale: true };
        this.emit();
    }
}
