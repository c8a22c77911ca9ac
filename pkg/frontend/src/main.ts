// App wiring: segment list, viewer, legend, cluster list, decision form.

import { ApiClient } from "./api.js";
import { decimate, gatherPositions } from "./decimate.js";
import { ALERT, HIGHLIGHT, colorBuffer, legendFor } from "./palette.js";
import { ReviewStore } from "./state.js";
import type { Verdict } from "./types.js";
import { PointViewer, BoxSpec } from "./viewer.js";

const $ = (id: string) => document.getElementById(id)!;

const store = new ReviewStore(new ApiClient(""));
let viewer: PointViewer | null = null;

function banner(message: string | null, retry?: () => void): void {
    const el = $("banner");
    el.innerHTML = "";
    el.style.display = message ? "block" : "none";
    if (!message) return;
    el.append(message);
    if (retry) {
        const btn = document.createElement("button");
        btn.textContent = "retry";
        btn.onclick = () => { banner(null); retry(); };
        el.append(" ", btn);
    }
}

async function refreshList(): Promise<void> {
    try {
        await store.refreshSegments();
    } catch (e) {
        banner(`failed to list segments: ${(e as Error).message}`, refreshList);
        return;
    }
    const list = $("segment-list");
    list.innerHTML = "";
    for (const seg of store.segments) {
        const item = document.createElement("div");
        item.className = "segment-item"
            + (seg.flagged ? " flagged" : "")
            + (store.active?.envelope.segment_id === seg.segment_id ? " active" : "");
        const status = seg.reviewed ? " [reviewed]" : seg.flagged ? " [flagged]" : "";
        item.textContent = `segment ${seg.segment_id} - ${seg.sampled_count} pts, `
            + `${seg.undecided_count} undecided${status}`;
        item.onclick = () => { void openSegment(seg.segment_id); };
        list.append(item);
    }
}

function redraw(): void {
    if (!store.active || !viewer) return;
    const { envelope, payload } = store.active;
    const dec = decimate(payload.count);
    const colors = colorBuffer(store.colorMode, payload.labels, payload.margins,
        envelope.classes, envelope.policy.margin_threshold, dec.indices);
    viewer.setPoints(gatherPositions(payload.positions, dec), colors);

    const [ox, oy, oz] = envelope.offset;
    const boxes: BoxSpec[] = envelope.flag_report.clusters.map((cl, i) => ({
        min: [cl.bounds[0][0] - ox, cl.bounds[0][1] - oy, cl.bounds[0][2] - oz],
        max: [cl.bounds[1][0] - ox, cl.bounds[1][1] - oy, cl.bounds[1][2] - oz],
        color: (i === store.selectedCluster ? HIGHLIGHT : ALERT) as [number, number, number],
    }));
    viewer.setBoxes(boxes);

    const note = dec.renderedCount < dec.originalCount
        ? ` (rendering ${dec.renderedCount} of ${dec.originalCount})`
        : "";
    $("segment-title").textContent =
        `segment ${envelope.segment_id}: ${envelope.point_count} points${note}`;
}

function renderLegend(): void {
    if (!store.active) return;
    const legend = $("legend");
    legend.innerHTML = "";
    for (const entry of legendFor(store.active.envelope.classes)) {
        const row = document.createElement("div");
        const swatch = document.createElement("span");
        swatch.className = "swatch";
        const [r, g, b] = entry.color.map((v) => Math.round(v * 255));
        swatch.style.background = `rgb(${r},${g},${b})`;
        row.append(swatch, `${entry.name}${entry.critical ? " *" : ""}`);
        legend.append(row);
    }
}

function renderClusters(): void {
    if (!store.active) return;
    const holder = $("clusters");
    holder.innerHTML = "";
    const clusters = store.active.envelope.flag_report.clusters;
    if (!clusters.length) {
        holder.textContent = "no undecided clusters";
        return;
    }
    clusters.forEach((cl, i) => {
        const row = document.createElement("div");
        row.className = "cluster-item" + (i === store.selectedCluster ? " active" : "");
        row.textContent = `cluster ${i}: ${cl.member_count} points`;
        row.onclick = () => {
            store.selectCluster(i === store.selectedCluster ? null : i);
            renderClusters();
            redraw();
            updateForm();
        };
        holder.append(row);
    });
}

function renderClassOptions(): void {
    if (!store.active) return;
    const select = $("relabel-class") as HTMLSelectElement;
    select.innerHTML = "";
    for (const cls of store.active.envelope.classes.classes) {
        const option = document.createElement("option");
        option.value = String(cls.id);
        option.textContent = cls.name;
        select.append(option);
    }
}

function updateForm(): void {
    const draft = store.draft;
    const verdict = (draft?.verdict ?? "") as string;
    ($("verdict") as HTMLSelectElement).value = verdict;
    $("relabel-row").style.display = verdict === "relabel" ? "block" : "none";
    const selection = store.selectionIndices().length;
    $("selection-info").textContent = store.selectedCluster === null
        ? "no cluster selected"
        : `${selection} undecided points selected, ${draft?.relabels.size ?? 0} staged`;
    ($("submit") as HTMLButtonElement).disabled = !store.canSubmit();
}

async function openSegment(segmentId: number): Promise<void> {
    banner(null);
    try {
        await store.loadSegment(segmentId);
    } catch (e) {
        banner(`failed to load segment ${segmentId}: ${(e as Error).message}`,
            () => void openSegment(segmentId));
        return;
    }
    renderLegend();
    renderClusters();
    renderClassOptions();
    redraw();
    updateForm();
    await refreshList();
}

function bindControls(): void {
    ($("flagged-only") as HTMLInputElement).onchange = (e) => {
        store.flaggedOnly = (e.target as HTMLInputElement).checked;
        void refreshList();
    };
    ($("color-mode") as HTMLSelectElement).onchange = (e) => {
        store.colorMode = (e.target as HTMLSelectElement).value as "class" | "margin";
        redraw();
    };
    ($("verdict") as HTMLSelectElement).onchange = (e) => {
        const value = (e.target as HTMLSelectElement).value;
        if (value) store.setVerdict(value as Verdict);
        updateForm();
    };
    ($("reviewer") as HTMLInputElement).oninput = (e) => {
        store.setReviewer((e.target as HTMLInputElement).value);
    };
    ($("notes") as HTMLInputElement).oninput = (e) => {
        store.setNotes((e.target as HTMLInputElement).value);
    };
    $("assign-class").onclick = () => {
        try {
            const classId = Number(($("relabel-class") as HTMLSelectElement).value);
            const n = store.assignClassToSelection(classId);
            banner(null);
            $("selection-info").textContent = `${n} points staged for relabel`;
        } catch (e) {
            banner((e as Error).message);
        }
        updateForm();
    };
    $("submit").onclick = async () => {
        const result = await store.submit();
        if (result.ok) {
            banner(null);
            $("selection-info").textContent = `decision recorded (seq ${result.seq})`;
            await refreshList();
        } else if (result.retryable) {
            banner(`submission failed: ${result.error}`,
                () => void ($("submit") as HTMLButtonElement).click());
        } else {
            banner(`rejected: ${result.error}`);
        }
        updateForm();
    };
}

async function start(): Promise<void> {
    viewer = new PointViewer($("canvas") as HTMLCanvasElement);
    bindControls();
    await refreshList();
    const first = store.segments.find((s) => s.flagged) ?? store.segments[0];
    if (first) await openSegment(first.segment_id);
}

void start();
