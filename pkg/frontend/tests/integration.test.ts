// End-to-end review loop against a live service over a synthetic run:
// load a flagged segment, submit confirm/dismiss/relabel decisions, and
// check that the append-only log and the reviewed report reflect them.

import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ReviewStore } from "../src/state.js";

let proc: ChildProcess | null = null;
let base = "";
let runDir = "";

function logLineCount(): number {
    const text = readFileSync(join(runDir, "reviews.jsonl"), "utf-8");
    return text.split("\n").filter((l) => l.trim()).length;
}

beforeAll(async () => {
    proc = spawn("python3", [join(__dirname, "fixtures", "serve_test_run.py")],
        { stdio: ["ignore", "pipe", "inherit"] });
    const ready = await new Promise<string>((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error("service start timeout")),
            120_000);
        let buffer = "";
        proc!.stdout!.on("data", (chunk: Buffer) => {
            buffer += chunk.toString();
            const match = buffer.match(/READY (\d+) (.+)/);
            if (match) {
                clearTimeout(timer);
                resolve(buffer);
            }
        });
        proc!.on("exit", (code) => reject(new Error(`fixture exited: ${code}`)));
    });
    const match = ready.match(/READY (\d+) (.+)/)!;
    base = `http://127.0.0.1:${match[1]}`;
    runDir = match[2].trim();
}, 150_000);

afterAll(() => {
    proc?.kill();
});

describe("review loop against a served run", () => {
    it("walks the full reviewer workflow", async () => {
        const store = new ReviewStore(new ApiClient(base));

        // flagged segments exist and the store starts from them
        const flagged = await store.refreshSegments();
        expect(flagged.length).toBeGreaterThan(0);
        expect(flagged.every((s) => s.flagged)).toBe(true);

        // the loaded payload matches the envelope point count exactly
        const segmentId = flagged[0].segment_id;
        const active = await store.loadSegment(segmentId);
        expect(active.payload.count).toBe(active.envelope.point_count);
        expect(active.payload.positions.length).toBe(active.envelope.point_count * 3);

        // every decision appends exactly one line to the log
        const linesBefore = logLineCount();

        store.setVerdict("confirm_flag");
        store.setReviewer("integration");
        let result = await store.submit();
        expect(result.ok).toBe(true);
        expect(logLineCount()).toBe(linesBefore + 1);

        store.setVerdict("dismiss_flag");
        result = await store.submit();
        expect(result.ok).toBe(true);
        expect(logLineCount()).toBe(linesBefore + 2);

        store.selectCluster(0);
        store.setVerdict("relabel");
        const staged = store.assignClassToSelection(1);
        expect(staged).toBeGreaterThan(0);
        result = await store.submit();
        expect(result.ok).toBe(true);
        expect(logLineCount()).toBe(linesBefore + 3);

        // the reviewed report reflects the replayed decisions
        const api = new ApiClient(base);
        const reviewed = await api.getReviewedReport();
        expect(reviewed.review_count).toBe(3);
        const entry = reviewed.segments.find(
            (s: { segment_id: number }) => s.segment_id === segmentId);
        // confirm then dismiss: the dismissal wins (relabel leaves flags alone)
        expect(entry.flagged).toBe(false);
        expect(entry.relabeled_points).toBe(staged);
        expect(entry.review_count).toBe(3);

        // report.reviewed.json was materialized next to the log
        const onDisk = JSON.parse(
            readFileSync(join(runDir, "report.reviewed.json"), "utf-8"));
        expect(onDisk.review_count).toBe(3);

        // invalid decisions are rejected and do not grow the log
        store.setVerdict("relabel");
        store.draft!.relabels.set(10 ** 9, 1);
        const bad = await store.submit();
        expect(bad.ok).toBe(false);
        expect(bad.retryable).toBe(false);
        expect(logLineCount()).toBe(linesBefore + 3);

        // the segment list now shows the reviewed status
        store.flaggedOnly = false;
        const after = await store.refreshSegments();
        expect(after.find((s) => s.segment_id === segmentId)?.reviewed).toBe(true);
    }, 120_000);
});
