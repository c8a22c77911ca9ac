// Color assignment: a fixed palette per class name (stable across runs)
// and a margin colormap that pulls low-margin points toward the alert
// color. Thresholds mirror the flag policy served in the envelope.

import type { ClassDef, SchemaInfo } from "./types.js";

type Rgb = [number, number, number];

const NAMED_COLORS: Record<string, Rgb> = {
    noise: [0.45, 0.45, 0.5],
    ground: [0.55, 0.42, 0.28],
    low_vegetation: [0.45, 0.75, 0.35],
    medium_vegetation: [0.1, 0.5, 0.2],
    vegetation: [0.25, 0.65, 0.3],
    tower: [0.95, 0.55, 0.1],
    power_line: [0.9, 0.1, 0.15],
};

const FALLBACK: Rgb[] = [
    [0.35, 0.55, 0.9], [0.85, 0.4, 0.75], [0.95, 0.85, 0.25],
    [0.3, 0.8, 0.8], [0.7, 0.7, 0.7],
];

export const ALERT: Rgb = [1.0, 0.15, 0.1];
const CALM: Rgb = [0.35, 0.45, 0.55];
export const HIGHLIGHT: Rgb = [1.0, 0.95, 0.2];

export function classColor(cls: ClassDef): Rgb {
    return NAMED_COLORS[cls.name] ?? FALLBACK[cls.id % FALLBACK.length];
}

export interface LegendEntry {
    id: number;
    name: string;
    color: Rgb;
    critical: boolean;
}

export function legendFor(schema: SchemaInfo): LegendEntry[] {
    return schema.classes.map((c) => ({
        id: c.id,
        name: c.name,
        color: classColor(c),
        critical: c.is_critical,
    }));
}

/** Low margins read as alert; fully confident points fade to calm. */
export function marginColor(margin: number, threshold: number): Rgb {
    const span = Math.max(threshold * 2, 1e-6);
    const t = Math.min(Math.max(margin / span, 0), 1);
    return [
        ALERT[0] + (CALM[0] - ALERT[0]) * t,
        ALERT[1] + (CALM[1] - ALERT[1]) * t,
        ALERT[2] + (CALM[2] - ALERT[2]) * t,
    ];
}

export function colorBuffer(
    mode: "class" | "margin",
    labels: Uint8Array,
    margins: Float32Array,
    schema: SchemaInfo,
    threshold: number,
    renderIndices: Uint32Array,
): Float32Array {
    const byClass = schema.classes.map(classColor);
    const out = new Float32Array(renderIndices.length * 3);
    for (let i = 0; i < renderIndices.length; i++) {
        const src = renderIndices[i];
        const rgb = mode === "class"
            ? (byClass[labels[src]] ?? FALLBACK[0])
            : marginColor(margins[src], threshold);
        out[i * 3] = rgb[0];
        out[i * 3 + 1] = rgb[1];
        out[i * 3 + 2] = rgb[2];
    }
    return out;
}
