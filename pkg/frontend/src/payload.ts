// Binary segment payload: float32 positions, uint8 labels, float32 margins,
// concatenated in that order with sizes declared by the envelope.

import type { BlockSizes, SegmentPayload } from "./types.js";

export function parseSegmentBlocks(blocks: BlockSizes, buffer: ArrayBuffer): SegmentPayload {
    const expected = blocks.positions_bytes + blocks.labels_bytes + blocks.margins_bytes;
    if (buffer.byteLength !== expected) {
        throw new Error(
            `payload is ${buffer.byteLength} bytes, envelope declares ${expected}`);
    }
    const count = blocks.labels_bytes;
    if (blocks.positions_bytes !== count * 12 || blocks.margins_bytes !== count * 4) {
        throw new Error("inconsistent block sizes in envelope");
    }
    const positions = new Float32Array(buffer, 0, count * 3);
    const labels = new Uint8Array(buffer, blocks.positions_bytes, count);
    const margins = new Float32Array(
        buffer.slice(blocks.positions_bytes + blocks.labels_bytes));
    return { count, positions, labels, margins };
}
