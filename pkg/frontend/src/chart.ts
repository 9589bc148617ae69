// Relevance chart. The model builder is pure: it carries every r_max value
// through untouched (tooltips always show the raw API numbers) and scales
// only for drawing. Rendering emits an SVG string, so both steps are
// testable without a browser.

import type { RelevanceResponse, SpectrogramResponse } from "./types.js";

export interface ChartPoint {
    x: number; // px
    y: number; // px
    seconds: number;
    value: number; // raw r_max from the API, never transformed
    topExpert: string;
}

export interface ChartSeries {
    label: string;
    color: string;
    points: ChartPoint[];
}

export interface ChartAnnotation {
    x: number;
    y: number;
    text: string;
}

export interface ChartModel {
    width: number;
    height: number;
    series: ChartSeries[]; // [current] or [current, pinned]
    annotations: ChartAnnotation[];
    segmentSeconds: number; // step width in seconds
    interpolate: boolean;
}

export interface ChartOptions {
    width?: number;
    height?: number;
    showLabels?: boolean;
    interpolate?: boolean;
}

const CURRENT_COLOR = "#111111";
const PINNED_COLOR = "#9e9e9e";
const PADDING = 24;

export function buildChart(
    current: RelevanceResponse,
    pinned: RelevanceResponse | null = null,
    options: ChartOptions = {},
): ChartModel {
    const width = options.width ?? 800;
    const height = options.height ?? 220;
    const segments = current.segments;
    const segmentSeconds =
        segments.length > 1 ? segments[1].start_seconds - segments[0].start_seconds : 1;
    const maxSeconds =
        segments.length > 0
            ? segments[segments.length - 1].start_seconds + segmentSeconds
            : 1;
    const toX = (seconds: number) =>
        PADDING + (seconds / maxSeconds) * (width - 2 * PADDING);
    const toY = (value: number) => height - PADDING - value * (height - 2 * PADDING);

    const makeSeries = (
        profile: RelevanceResponse,
        label: string,
        color: string,
    ): ChartSeries => ({
        label,
        color,
        points: profile.segments.map((s) => ({
            x: toX(s.start_seconds),
            y: toY(s.r_max),
            seconds: s.start_seconds,
            value: s.r_max,
            topExpert: s.top_expert,
        })),
    });

    const series = [
        makeSeries(current, current.expert_names.join(" vs "), CURRENT_COLOR),
    ];
    if (pinned) {
        series.push(makeSeries(pinned, pinned.expert_names.join(" vs "), PINNED_COLOR));
    }

    const annotations: ChartAnnotation[] = [];
    if (options.showLabels !== false) {
        for (const peak of localPeaks(series[0].points)) {
            annotations.push({ x: peak.x, y: peak.y - 6, text: peak.topExpert });
        }
    }
    return {
        width,
        height,
        series,
        annotations,
        segmentSeconds,
        interpolate: options.interpolate ?? false,
    };
}

// A point is a peak when it is not below its left neighbour and strictly
// above its right one; used only for label placement.
function localPeaks(points: ChartPoint[], limit = 6): ChartPoint[] {
    const peaks = points.filter((p, i) => {
        if (p.value <= 0.05) return false;
        const left = i === 0 || points[i - 1].value <= p.value;
        const right = i === points.length - 1 || points[i + 1].value < p.value;
        return left && right;
    });
    return peaks.sort((a, b) => b.value - a.value).slice(0, limit);
}

export function seriesPath(series: ChartSeries, model: ChartModel): string {
    const pts = series.points;
    if (!pts.length) return "";
    if (model.interpolate) {
        return pts
            .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`)
            .join(" ");
    }
    const stepWidth =
        pts.length > 1 ? pts[1].x - pts[0].x : model.width - 2 * PADDING;
    let d = `M${pts[0].x.toFixed(1)},${pts[0].y.toFixed(1)}`;
    for (let i = 0; i < pts.length; i++) {
        if (i > 0) d += ` V${pts[i].y.toFixed(1)}`;
        d += ` H${(pts[i].x + stepWidth).toFixed(1)}`;
    }
    return d;
}

export function renderChartSvg(model: ChartModel, underlay: string = ""): string {
    const paths = model.series
        .map(
            (s) =>
                `<path class="series" data-label="${escapeXml(s.label)}" d="${seriesPath(
                    s,
                    model,
                )}" fill="none" stroke="${s.color}" stroke-width="1.6"/>`,
        )
        .join("");
    const labels = model.annotations
        .map(
            (a) =>
                `<text class="peak" x="${a.x.toFixed(1)}" y="${a.y.toFixed(1)}" ` +
                `font-size="9">${escapeXml(a.text)}</text>`,
        )
        .join("");
    // one invisible hover target per segment of the current curve
    const hover = model.series[0].points
        .map((p, i) => {
            const stepWidth =
                model.series[0].points.length > 1
                    ? model.series[0].points[1].x - model.series[0].points[0].x
                    : model.width;
            return (
                `<rect class="hover" data-index="${i}" data-seconds="${p.seconds}" ` +
                `data-value="${p.value}" data-expert="${escapeXml(p.topExpert)}" ` +
                `x="${p.x.toFixed(1)}" y="0" width="${stepWidth.toFixed(1)}" ` +
                `height="${model.height}" fill="transparent"/>`
            );
        })
        .join("");
    return (
        `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${model.width} ` +
        `${model.height}" width="${model.width}" height="${model.height}">` +
        underlay +
        paths +
        labels +
        hover +
        `</svg>`
    );
}

function escapeXml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

// Grayscale cell rects for the spectrogram underlay, darker = louder.
export function renderSpectrogramUnderlay(
    spec: SpectrogramResponse,
    model: ChartModel,
): string {
    const cols = spec.values[0]?.length ?? 0;
    if (!cols) return "";
    let peak = 0;
    for (const row of spec.values) for (const v of row) peak = Math.max(peak, v);
    if (peak <= 0) return "";
    const cellW = model.width / cols;
    const cellH = model.height / spec.values.length;
    const rects: string[] = [];
    for (let b = 0; b < spec.values.length; b++) {
        for (let t = 0; t < cols; t++) {
            const strength = spec.values[b][t] / peak;
            if (strength < 0.15) continue; // skip near-silent cells
            const y = model.height - (b + 1) * cellH; // low bins at the bottom
            rects.push(
                `<rect x="${(t * cellW).toFixed(1)}" y="${y.toFixed(1)}" ` +
                    `width="${cellW.toFixed(2)}" height="${cellH.toFixed(2)}" ` +
                    `fill="#607d8b" opacity="${(0.28 * strength).toFixed(3)}"/>`,
            );
        }
    }
    return `<g class="underlay">${rects.join("")}</g>`;
}
