// DOM wiring. All computation lives in the pure modules; this file only
// moves data between them and the document.

import { ApiClient } from "./api.js";
import { buildChart, renderChartSvg, renderSpectrogramUnderlay } from "./chart.js";
import { Controller } from "./controller.js";
import { buildPanel } from "./panel.js";
import { canShowProfile, decodeState, encodeState, type ViewState } from "./state.js";
import type { ClipInfo, ExpertInfo, SpectrogramResponse } from "./types.js";

const query = new URLSearchParams(window.location.search);
const server = query.get("server") ?? "http://127.0.0.1:8000";
const api = new ApiClient(server);

const el = (id: string) => document.getElementById(id)!;
let experts: ExpertInfo[] = [];
let clips: ClipInfo[] = [];
let spectrogram: SpectrogramResponse | null = null;

const controller = new Controller(api, decodeState(window.location.search), render);

function syncUrl(state: ViewState): void {
    const encoded = encodeState(state);
    const base = window.location.pathname;
    const serverParam = query.get("server");
    const full = serverParam
        ? `${base}?server=${encodeURIComponent(serverParam)}&${encoded}`
        : `${base}?${encoded}`;
    window.history.replaceState(null, "", full);
}

function render(state: ViewState): void {
    syncUrl(state);
    renderExpertPicker(state);
    renderChart(state);
    renderPanel(state);
    const banner = el("error-banner");
    banner.textContent = state.errorBanner ?? "";
    banner.style.display = state.errorBanner ? "block" : "none";
    el("results").classList.toggle("stale", state.stale);
}

function renderExpertPicker(state: ViewState): void {
    const picker = el("experts");
    picker.innerHTML = "";
    for (const expert of experts) {
        const label = document.createElement("label");
        const box = document.createElement("input");
        box.type = "checkbox";
        box.checked = state.expertIds.includes(expert.id);
        box.addEventListener("change", () => void controller.toggle(expert.id));
        label.appendChild(box);
        label.appendChild(document.createTextNode(` ${expert.class_name}`));
        picker.appendChild(label);
    }
}

function renderChart(state: ViewState): void {
    const host = el("chart");
    const hint = el("chart-hint");
    if (!state.profile || !canShowProfile(state)) {
        host.innerHTML = "";
        hint.style.display = "block";
        hint.textContent = "Enable at least 2 experts to compute a relevance curve.";
        return;
    }
    hint.style.display = "none";
    const model = buildChart(state.profile, state.pinnedProfile, {
        showLabels: state.showLabels,
        interpolate: state.interpolate,
    });
    const underlay =
        state.showSpectrogram && spectrogram
            ? renderSpectrogramUnderlay(spectrogram, model)
            : "";
    host.innerHTML = renderChartSvg(model, underlay);
    const tooltip = el("tooltip");
    host.querySelectorAll("rect.hover").forEach((rect) => {
        rect.addEventListener("mousemove", (event) => {
            const r = rect as SVGRectElement;
            tooltip.style.display = "block";
            tooltip.style.left = `${(event as MouseEvent).pageX + 10}px`;
            tooltip.style.top = `${(event as MouseEvent).pageY - 10}px`;
            tooltip.textContent =
                `t=${Number(r.dataset.seconds).toFixed(3)}s  ` +
                `R=${r.dataset.value}  top: ${r.dataset.expert}`;
        });
        rect.addEventListener("mouseleave", () => (tooltip.style.display = "none"));
    });
}

function renderPanel(state: ViewState): void {
    const host = el("classification");
    if (!state.classification || !state.model) {
        host.innerHTML = "<em>pick a model to classify the clip</em>";
        return;
    }
    const panel = buildPanel(state.classification, state.model, state.stale);
    const rows = panel.rows
        .map(
            (row) =>
                `<tr class="${row.inTop3 ? "top3" : ""}"><td>${row.className}</td>` +
                `<td>${row.score.toFixed(6)}</td></tr>`,
        )
        .join("");
    host.innerHTML =
        `<div class="model-note">${panel.modelLabel} — ${panel.note}` +
        `${panel.degenerate ? " (degenerate input)" : ""}</div>` +
        `<table><thead><tr><th>class</th><th>score</th></tr></thead>` +
        `<tbody>${rows}</tbody></table>`;
}

async function boot(): Promise<void> {
    [experts, clips] = await Promise.all([api.listExperts(), api.listClips()]);

    const clipSelect = el("clip") as HTMLSelectElement;
    for (const clip of clips) {
        const option = document.createElement("option");
        option.value = clip.id;
        option.textContent = `${clip.id} (${clip.label}, ${clip.duration_seconds.toFixed(2)}s)`;
        clipSelect.appendChild(option);
    }
    clipSelect.addEventListener("change", () => {
        spectrogram = null;
        void api.spectrogram(clipSelect.value).then((s) => {
            spectrogram = s;
            render(controller.state);
        });
        void controller.pickClip(clipSelect.value);
    });

    const modelSelect = el("model") as HTMLSelectElement;
    const relnets = await fetch(`${server}/api/relnets`).then((r) =>
        r.ok ? r.json() : [],
    );
    for (const m of relnets as { id: string }[]) {
        const option = document.createElement("option");
        option.value = `relnet:${m.id}`;
        option.textContent = `RELNET ${m.id}`;
        modelSelect.appendChild(option);
    }
    for (const mode of ["MV", "SUM", "PROD", "RV"] as const) {
        const option = document.createElement("option");
        option.value = `fusion:${mode}`;
        option.textContent = `fusion ${mode}`;
        modelSelect.appendChild(option);
    }
    modelSelect.addEventListener("change", () => {
        const value = modelSelect.value;
        if (value.startsWith("relnet:")) {
            void controller.pickModel({ kind: "relnet", id: value.slice(7) });
        } else if (value.startsWith("fusion:")) {
            void controller.pickModel({
                kind: "fusion",
                mode: value.slice(7) as "MV" | "SUM" | "PROD" | "RV",
            });
        }
    });

    for (const [id, key] of [
        ["opt-spectrogram", "showSpectrogram"],
        ["opt-labels", "showLabels"],
        ["opt-interpolate", "interpolate"],
    ] as const) {
        const box = el(id) as HTMLInputElement;
        box.checked = controller.state[key];
        box.addEventListener("change", () => {
            controller.state = { ...controller.state, [key]: box.checked };
            render(controller.state);
        });
    }

    // restore a shared viewpoint from the URL
    const restored = controller.state;
    if (restored.clipId && clips.some((c) => c.id === restored.clipId)) {
        clipSelect.value = restored.clipId;
        spectrogram = await api.spectrogram(restored.clipId);
        await controller.refreshProfile();
        await controller.refreshClassification();
    }
    render(controller.state);
}

void boot();
