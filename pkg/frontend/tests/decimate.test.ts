import { describe, expect, it } from "vitest";

import { RENDER_BUDGET, decimate, gatherPositions } from "../src/decimate.js";

describe("decimate", () => {
    it("keeps everything at or under the budget", () => {
        const dec = decimate(1000);
        expect(dec.renderedCount).toBe(1000);
        expect(dec.indices[999]).toBe(999);
    });

    it("thins to the budget above it, original indices preserved", () => {
        const dec = decimate(300_000);
        expect(dec.renderedCount).toBe(RENDER_BUDGET);
        expect(dec.originalCount).toBe(300_000);
        expect(dec.indices[0]).toBe(0);
        const last = dec.indices[dec.renderedCount - 1];
        expect(last).toBeLessThan(300_000);
        expect(last).toBeGreaterThan(299_000);
        // strictly increasing: every rendered point is a distinct original
        for (let i = 1; i < 100; i++) {
            expect(dec.indices[i]).toBeGreaterThan(dec.indices[i - 1]);
        }
    });

    it("is deterministic", () => {
        const a = decimate(200_001);
        const b = decimate(200_001);
        expect(a.indices).toEqual(b.indices);
    });

    it("gathers positions for rendering without touching the source", () => {
        const positions = new Float32Array(12);
        positions.set([0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]);
        const dec = decimate(4, 2);
        const rendered = gatherPositions(positions, dec);
        expect(rendered.length).toBe(6);
        expect(rendered[0]).toBe(positions[dec.indices[0] * 3]);
        expect(positions.length).toBe(12);
    });

    it("passes through untouched when no decimation is needed", () => {
        const positions = new Float32Array(9);
        const dec = decimate(3, 10);
        expect(gatherPositions(positions, dec)).toBe(positions);
    });
});
