// View state and the decision draft lifecycle.
//
// Everything here is reconstructable from service responses; the only
// local state is the pending draft, which survives failed submissions
// so a reviewer can retry without losing work.

import { ApiClient, ApiError } from "./api.js";
import type {
    Envelope, ReviewDecision, SegmentPayload, SegmentSummary, Verdict,
} from "./types.js";

export type ColorMode = "class" | "margin";

export interface ActiveSegment {
    envelope: Envelope;
    payload: SegmentPayload;
}

export interface Draft {
    segmentId: number;
    verdict: Verdict | null;
    relabels: Map<number, number>;
    reviewer: string;
    notes: string;
}

export interface SubmitResult {
    ok: boolean;
    seq?: number;
    error?: string;
    retryable?: boolean;
}

function emptyDraft(segmentId: number): Draft {
    return { segmentId, verdict: null, relabels: new Map(), reviewer: "", notes: "" };
}

export class ReviewStore {
    segments: SegmentSummary[] = [];
    flaggedOnly = true;
    active: ActiveSegment | null = null;
    colorMode: ColorMode = "class";
    selectedCluster: number | null = null;
    draft: Draft | null = null;
    lastError: { message: string; retryable: boolean } | null = null;

    constructor(private readonly api: ApiClient) {}

    async refreshSegments(): Promise<SegmentSummary[]> {
        this.segments = await this.api.listSegments(this.flaggedOnly);
        return this.segments;
    }

    async loadSegment(segmentId: number): Promise<ActiveSegment> {
        const envelope = await this.api.getEnvelope(segmentId);
        const payload = await this.api.getPoints(envelope);
        this.active = { envelope, payload };
        this.selectedCluster = null;
        if (!this.draft || this.draft.segmentId !== segmentId) {
            this.draft = emptyDraft(segmentId);
        }
        return this.active;
    }

    /** Cluster selection is only valid within the active segment. */
    selectCluster(index: number | null): void {
        if (index === null) {
            this.selectedCluster = null;
            return;
        }
        const clusters = this.active?.envelope.flag_report.clusters ?? [];
        if (index < 0 || index >= clusters.length) {
            throw new Error(`cluster ${index} does not belong to the active segment`);
        }
        this.selectedCluster = index;
    }

    /**
     * Points the draft may reference: the undecided points inside the
     * selected cluster's bounding box (world coordinates).
     */
    selectionIndices(): number[] {
        if (!this.active || this.selectedCluster === null) return [];
        const { envelope, payload } = this.active;
        const cluster = envelope.flag_report.clusters[this.selectedCluster];
        const [mins, maxs] = cluster.bounds;
        const [ox, oy, oz] = envelope.offset;
        const eps = 1e-6;
        const threshold = envelope.policy.margin_threshold;
        const out: number[] = [];
        for (let i = 0; i < payload.count; i++) {
            if (payload.margins[i] >= threshold) continue;
            const x = payload.positions[i * 3] + ox;
            const y = payload.positions[i * 3 + 1] + oy;
            const z = payload.positions[i * 3 + 2] + oz;
            if (x >= mins[0] - eps && x <= maxs[0] + eps
                && y >= mins[1] - eps && y <= maxs[1] + eps
                && z >= mins[2] - eps && z <= maxs[2] + eps) {
                out.push(i);
            }
        }
        return out;
    }

    setVerdict(verdict: Verdict): void {
        this.requireDraft().verdict = verdict;
        if (verdict !== "relabel") {
            this.requireDraft().relabels.clear();
        }
    }

    setReviewer(name: string): void {
        this.requireDraft().reviewer = name;
    }

    setNotes(notes: string): void {
        this.requireDraft().notes = notes;
    }

    /** Stage a relabel of the current selection to the given class. */
    assignClassToSelection(classId: number): number {
        const draft = this.requireDraft();
        if (draft.verdict !== "relabel") {
            throw new Error("set the relabel verdict before assigning classes");
        }
        const selection = this.selectionIndices();
        if (!selection.length) {
            throw new Error("no cluster selected (nothing to relabel)");
        }
        for (const idx of selection) {
            draft.relabels.set(idx, classId);
        }
        return selection.length;
    }

    addRelabel(pointIndex: number, classId: number): void {
        const draft = this.requireDraft();
        if (draft.verdict !== "relabel") {
            throw new Error("set the relabel verdict before assigning classes");
        }
        if (pointIndex < 0 || pointIndex >= (this.active?.payload.count ?? 0)) {
            throw new Error(`point ${pointIndex} is not in the active segment`);
        }
        draft.relabels.set(pointIndex, classId);
    }

    canSubmit(): boolean {
        const d = this.draft;
        if (!d || !d.verdict) return false;
        if (d.verdict === "relabel" && d.relabels.size === 0) return false;
        return true;
    }

    buildDecision(): ReviewDecision {
        const d = this.requireDraft();
        if (!this.canSubmit()) {
            throw new Error("draft is not submittable");
        }
        const decision: ReviewDecision = {
            segment_id: d.segmentId,
            verdict: d.verdict as Verdict,
            reviewer: d.reviewer,
            notes: d.notes,
        };
        if (d.verdict === "relabel") {
            decision.relabels = [...d.relabels.entries()]
                .sort((a, b) => a[0] - b[0])
                .map(([i, c]) => [i, c] as [number, number]);
        }
        return decision;
    }

    /**
     * All-or-nothing submission. Success clears the draft and refreshes
     * the segment list; failure preserves the draft for a retry.
     */
    async submit(): Promise<SubmitResult> {
        const decision = this.buildDecision();
        try {
            const ack = await this.api.postReview(decision);
            this.draft = emptyDraft(decision.segment_id);
            this.lastError = null;
            await this.refreshSegments();
            return { ok: true, seq: ack.seq };
        } catch (e) {
            const retryable = e instanceof ApiError ? e.retryable : true;
            const message = e instanceof Error ? e.message : String(e);
            this.lastError = { message, retryable };
            return { ok: false, error: message, retryable };
        }
    }

    private requireDraft(): Draft {
        if (!this.draft) {
            throw new Error("no active segment loaded");
        }
        return this.draft;
    }
}
