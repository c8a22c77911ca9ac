import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { ReviewStore } from "../src/state.js";
import type { Envelope, SegmentPayload, SegmentSummary } from "../src/types.js";

function makeEnvelope(): Envelope {
    return {
        segment_id: 2,
        point_count: 6,
        interval: [0, 50],
        flagged: true,
        flag_report: {
            segment_id: 2,
            undecided_count: 3,
            undecided_fraction: 0.5,
            clusters: [{
                centroid: [101, 100, 100],
                bounds: [[100, 100, 100], [102, 100, 100]],
                member_count: 2,
            }],
            flagged: true,
            per_class_undecided: {},
            unclustered_count: 1,
        },
        offset: [100, 100, 100],
        classes: {
            name: "ts40k",
            classes: [
                { id: 0, name: "noise", is_noise: true, is_critical: false },
                { id: 1, name: "ground", is_noise: false, is_critical: false },
                { id: 2, name: "power_line", is_noise: false, is_critical: true },
            ],
            eval_ignore: [],
        },
        policy: {
            margin_threshold: 0.2, cluster_radius: 1, cluster_min_points: 5,
            segment_undecided_min: 100, segment_undecided_fraction: 0.005,
            measure: "margin",
        },
        blocks: { positions_bytes: 72, labels_bytes: 6, margins_bytes: 24 },
    };
}

function makePayload(): SegmentPayload {
    // recentered positions; world = position + offset(100,100,100)
    const positions = new Float32Array([
        0, 0, 0,    // world (100,100,100): inside cluster bounds
        2, 0, 0,    // world (102,100,100): inside
        1, 0, 0,    // inside bounds but decided (high margin)
        50, 0, 0,   // far outside
        -30, 0, 0,  // outside, undecided
        1.5, 0, 0,  // inside, undecided
    ]);
    const labels = new Uint8Array([1, 1, 2, 1, 0, 1]);
    const margins = new Float32Array([0.05, 0.1, 0.9, 0.8, 0.02, 0.15]);
    return { count: 6, positions, labels, margins };
}

class FakeApi {
    summaries: SegmentSummary[] = [{
        segment_id: 2, point_count: 6, sampled_count: 6, flagged: true,
        undecided_count: 3, undecided_fraction: 0.5, reviewed: false,
    }];
    posted: unknown[] = [];
    failWith: Error | null = null;
    private seq = 0;

    async listSegments(): Promise<SegmentSummary[]> { return this.summaries; }
    async getEnvelope(): Promise<Envelope> { return makeEnvelope(); }
    async getPoints(): Promise<SegmentPayload> { return makePayload(); }
    async postReview(decision: unknown): Promise<{ seq: number; segment_id: number }> {
        if (this.failWith) throw this.failWith;
        this.posted.push(decision);
        return { seq: ++this.seq, segment_id: 2 };
    }
}

function makeStore(): { store: ReviewStore; api: FakeApi } {
    const api = new FakeApi();
    return { store: new ReviewStore(api as unknown as ApiClient), api };
}

describe("ReviewStore", () => {
    it("loads a segment and resets cluster selection", async () => {
        const { store } = makeStore();
        const active = await store.loadSegment(2);
        expect(active.payload.count).toBe(active.envelope.point_count);
        expect(store.selectedCluster).toBeNull();
        expect(store.draft?.segmentId).toBe(2);
    });

    it("rejects cluster selections outside the active segment", async () => {
        const { store } = makeStore();
        await store.loadSegment(2);
        expect(() => store.selectCluster(5)).toThrow(/does not belong/);
        store.selectCluster(0);
        expect(store.selectedCluster).toBe(0);
    });

    it("selection covers exactly the undecided points inside the cluster box", async () => {
        const { store } = makeStore();
        await store.loadSegment(2);
        store.selectCluster(0);
        // margins < 0.2 AND world position within [[100..102] x 100 x 100]
        expect(store.selectionIndices()).toEqual([0, 1, 5]);
    });

    it("drafts are all-or-nothing: relabel without points cannot submit", async () => {
        const { store } = makeStore();
        await store.loadSegment(2);
        store.setVerdict("relabel");
        expect(store.canSubmit()).toBe(false);
        store.selectCluster(0);
        expect(store.assignClassToSelection(1)).toBe(3);
        expect(store.canSubmit()).toBe(true);
    });

    it("submits a normalized decision and clears the draft", async () => {
        const { store, api } = makeStore();
        await store.loadSegment(2);
        store.selectCluster(0);
        store.setVerdict("relabel");
        store.assignClassToSelection(2);
        store.setReviewer("sam");
        const result = await store.submit();
        expect(result).toEqual({ ok: true, seq: 1 });
        expect(api.posted).toHaveLength(1);
        const sent = api.posted[0] as { relabels: [number, number][]; reviewer: string };
        expect(sent.relabels).toEqual([[0, 2], [1, 2], [5, 2]]);
        expect(sent.reviewer).toBe("sam");
        expect(store.draft?.relabels.size).toBe(0);
        expect(store.draft?.verdict).toBeNull();
    });

    it("preserves the draft when submission fails, for retry", async () => {
        const { store, api } = makeStore();
        await store.loadSegment(2);
        store.setVerdict("confirm_flag");
        api.failWith = new ApiError("boom", "network", 0, true);
        const failed = await store.submit();
        expect(failed.ok).toBe(false);
        expect(failed.retryable).toBe(true);
        expect(store.draft?.verdict).toBe("confirm_flag");
        api.failWith = null;
        const retried = await store.submit();
        expect(retried.ok).toBe(true);
        expect(api.posted).toHaveLength(1);
    });

    it("marks validation failures as non-retryable", async () => {
        const { store, api } = makeStore();
        await store.loadSegment(2);
        store.setVerdict("confirm_flag");
        api.failWith = new ApiError("bad relabels", "bad_relabels", 400, false);
        const result = await store.submit();
        expect(result.ok).toBe(false);
        expect(result.retryable).toBe(false);
        expect(store.lastError?.message).toMatch(/bad relabels/);
    });

    it("switching verdict away from relabel drops staged relabels", async () => {
        const { store } = makeStore();
        await store.loadSegment(2);
        store.selectCluster(0);
        store.setVerdict("relabel");
        store.assignClassToSelection(1);
        store.setVerdict("dismiss_flag");
        expect(store.draft?.relabels.size).toBe(0);
        expect(store.canSubmit()).toBe(true);
    });
});
