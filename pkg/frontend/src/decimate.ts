// Render-only decimation guard: segments above the point budget are
// thinned for display, while decisions keep indexing original points.

export const RENDER_BUDGET = 150_000;

export interface Decimation {
    /** original point index of every rendered point */
    indices: Uint32Array;
    renderedCount: number;
    originalCount: number;
}

export function decimate(count: number, budget: number = RENDER_BUDGET): Decimation {
    if (count <= budget) {
        const indices = new Uint32Array(count);
        for (let i = 0; i < count; i++) indices[i] = i;
        return { indices, renderedCount: count, originalCount: count };
    }
    // deterministic even stride across the whole segment
    const indices = new Uint32Array(budget);
    const step = count / budget;
    for (let i = 0; i < budget; i++) {
        indices[i] = Math.min(count - 1, Math.floor(i * step));
    }
    return { indices, renderedCount: budget, originalCount: count };
}

export function gatherPositions(positions: Float32Array, dec: Decimation): Float32Array {
    if (dec.renderedCount === dec.originalCount) return positions;
    const out = new Float32Array(dec.renderedCount * 3);
    for (let i = 0; i < dec.renderedCount; i++) {
        const src = dec.indices[i] * 3;
        out[i * 3] = positions[src];
        out[i * 3 + 1] = positions[src + 1];
        out[i * 3 + 2] = positions[src + 2];
    }
    return out;
}
