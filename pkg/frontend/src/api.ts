// Service client. Every number shown in the UI comes through here; nothing
// is recomputed locally. Relevance requests are latest-wins: issuing a new
// one aborts whatever is still in flight.

import type {
    ClassifyResponse,
    ClipInfo,
    ExpertInfo,
    RelevanceResponse,
    SpectrogramResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly errorCode: string,
        detail: string,
    ) {
        super(detail);
    }
}

async function decode<T>(response: Response): Promise<T> {
    if (!response.ok) {
        let code = "unknown";
        let detail = response.statusText;
        try {
            const body = await response.json();
            code = body.error_code ?? code;
            detail = body.detail ?? detail;
        } catch {
            // non-JSON error body, keep the status text
        }
        throw new ApiError(response.status, code, detail);
    }
    return response.json() as Promise<T>;
}

export class ApiClient {
    private relevanceAbort: AbortController | null = null;

    constructor(
        readonly baseUrl: string,
        private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    ) {}

    listExperts(): Promise<ExpertInfo[]> {
        return this.get<ExpertInfo[]>("/api/experts");
    }

    listClips(): Promise<ClipInfo[]> {
        return this.get<ClipInfo[]>("/api/clips");
    }

    spectrogram(clipId: string): Promise<SpectrogramResponse> {
        return this.get<SpectrogramResponse>(
            `/api/clips/${encodeURIComponent(clipId)}/spectrogram`,
        );
    }

    // Aborts any in-flight relevance request before issuing this one.
    relevance(clipId: string, expertIds: string[]): Promise<RelevanceResponse> {
        this.relevanceAbort?.abort();
        const abort = new AbortController();
        this.relevanceAbort = abort;
        return this.post<RelevanceResponse>(
            "/api/relevance",
            { clip_id: clipId, expert_ids: expertIds },
            abort.signal,
        );
    }

    classify(
        clipId: string,
        choice: { relnet_id?: string; fusion?: { mode: string; expert_ids: string[] } },
    ): Promise<ClassifyResponse> {
        return this.post<ClassifyResponse>("/api/classify", {
            clip_id: clipId,
            ...choice,
        });
    }

    private async get<T>(path: string): Promise<T> {
        return decode<T>(await this.fetchImpl(this.baseUrl + path));
    }

    private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
        return decode<T>(
            await this.fetchImpl(this.baseUrl + path, {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify(body),
                signal,
            }),
        );
    }
}

export function isAbort(error: unknown): boolean {
    return error instanceof DOMException && error.name === "AbortError";
}
