import { describe, expect, it } from "vitest";

import { ALERT, colorBuffer, legendFor, marginColor } from "../src/palette.js";
import type { SchemaInfo } from "../src/types.js";

const SCHEMA: SchemaInfo = {
    name: "ts40k",
    classes: [
        { id: 0, name: "noise", is_noise: true, is_critical: false },
        { id: 1, name: "ground", is_noise: false, is_critical: false },
        { id: 2, name: "power_line", is_noise: false, is_critical: true },
    ],
    eval_ignore: [],
};

describe("palette", () => {
    it("legend follows the schema order and marks critical classes", () => {
        const legend = legendFor(SCHEMA);
        expect(legend.map((e) => e.name)).toEqual(["noise", "ground", "power_line"]);
        expect(legend[2].critical).toBe(true);
        expect(legend[0].color).toHaveLength(3);
    });

    it("zero margin is exactly the alert color", () => {
        expect(marginColor(0, 0.2)).toEqual(ALERT);
    });

    it("interpolates away from alert as the margin grows", () => {
        const low = marginColor(0.05, 0.2);
        const high = marginColor(0.4, 0.2);
        expect(low[0]).toBeGreaterThan(high[0]); // red channel decays
        expect(marginColor(0.9, 0.2)).toEqual(marginColor(0.4, 0.2)); // clamped
    });

    it("colorBuffer honors the mode and the render indices", () => {
        const labels = new Uint8Array([0, 1, 2]);
        const margins = new Float32Array([0.0, 0.5, 0.9]);
        const indices = new Uint32Array([2, 0]);
        const byClass = colorBuffer("class", labels, margins, SCHEMA, 0.2, indices);
        expect(byClass.length).toBe(6);
        const legend = legendFor(SCHEMA);
        for (let ch = 0; ch < 3; ch++) {  // float32 storage rounds the palette
            expect(byClass[ch]).toBeCloseTo(legend[2].color[ch], 6);
        }
        const byMargin = colorBuffer("margin", labels, margins, SCHEMA, 0.2, indices);
        for (let ch = 0; ch < 3; ch++) {
            expect(byMargin[3 + ch]).toBeCloseTo(ALERT[ch], 6);
        }
    });
});
