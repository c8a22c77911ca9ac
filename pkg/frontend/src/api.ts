// HTTP client for the review service. All UI state is derived from these
// responses, so a page refresh loses nothing but the in-progress draft.

import { parseSegmentBlocks } from "./payload.js";
import type {
    Envelope, ReviewAck, ReviewDecision, SegmentPayload, SegmentSummary,
} from "./types.js";

export class ApiError extends Error {
    constructor(
        message: string,
        public readonly code: string,
        public readonly status: number,
        /** network-level failures are retryable; validation failures are not */
        public readonly retryable: boolean,
    ) {
        super(message);
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(res: Response): Promise<ApiError> {
    let code = `http_${res.status}`;
    let message = res.statusText || `request failed with ${res.status}`;
    try {
        const body = await res.json();
        if (body && typeof body.message === "string") {
            message = body.message;
            code = typeof body.code === "string" ? body.code : code;
        }
    } catch {
        // non-JSON error body; keep the status text
    }
    return new ApiError(message, code, res.status, res.status >= 500);
}

export class ApiClient {
    constructor(
        private readonly base: string = "",
        private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request(path: string, init?: RequestInit): Promise<Response> {
        let res: Response;
        try {
            res = await this.fetchImpl(this.base + path, init);
        } catch (e) {
            throw new ApiError(`network failure: ${String(e)}`, "network", 0, true);
        }
        if (!res.ok) {
            throw await errorFrom(res);
        }
        return res;
    }

    async listSegments(flaggedOnly: boolean): Promise<SegmentSummary[]> {
        const res = await this.request(`/api/segments?flagged=${flaggedOnly}`);
        return res.json();
    }

    async getEnvelope(segmentId: number): Promise<Envelope> {
        const res = await this.request(`/api/segments/${segmentId}`);
        return res.json();
    }

    async getPoints(envelope: Envelope): Promise<SegmentPayload> {
        const res = await this.request(`/api/segments/${envelope.segment_id}/points`);
        const buffer = await res.arrayBuffer();
        const payload = parseSegmentBlocks(envelope.blocks, buffer);
        if (payload.count !== envelope.point_count) {
            throw new ApiError(
                `payload has ${payload.count} points, envelope says ${envelope.point_count}`,
                "payload_mismatch", 0, false);
        }
        return payload;
    }

    async postReview(decision: ReviewDecision): Promise<ReviewAck> {
        const res = await this.request("/api/reviews", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(decision),
        });
        return res.json();
    }

    async getReviewedReport(): Promise<any> {
        const res = await this.request("/api/report/reviewed");
        return res.json();
    }
}
