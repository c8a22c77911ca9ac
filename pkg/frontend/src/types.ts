// Wire types of the review service API.

export interface SegmentSummary {
    segment_id: number;
    point_count: number;
    sampled_count: number;
    flagged: boolean;
    undecided_count: number;
    undecided_fraction: number;
    reviewed: boolean;
}

export interface ClusterInfo {
    centroid: number[];
    bounds: number[][]; // [[xmin,ymin,zmin],[xmax,ymax,zmax]] in world coords
    member_count: number;
}

export interface FlagReport {
    segment_id: number;
    undecided_count: number;
    undecided_fraction: number;
    clusters: ClusterInfo[];
    flagged: boolean;
    per_class_undecided: Record<string, number>;
    unclustered_count: number;
}

export interface ClassDef {
    id: number;
    name: string;
    is_noise: boolean;
    is_critical: boolean;
}

export interface SchemaInfo {
    name: string;
    classes: ClassDef[];
    eval_ignore: number[];
}

export interface FlagPolicyInfo {
    margin_threshold: number;
    cluster_radius: number;
    cluster_min_points: number;
    segment_undecided_min: number;
    segment_undecided_fraction: number;
    measure: string;
}

export interface BlockSizes {
    positions_bytes: number;
    labels_bytes: number;
    margins_bytes: number;
}

export interface Envelope {
    segment_id: number;
    point_count: number;
    interval: number[];
    flagged: boolean;
    flag_report: FlagReport;
    offset: number[]; // world centroid subtracted from served positions
    classes: SchemaInfo;
    policy: FlagPolicyInfo;
    blocks: BlockSizes;
}

export type Verdict = "confirm_flag" | "dismiss_flag" | "relabel";

export interface ReviewDecision {
    segment_id: number;
    verdict: Verdict;
    relabels?: [number, number][];
    reviewer: string;
    notes?: string;
}

export interface ReviewAck {
    seq: number;
    segment_id: number;
}

export interface SegmentPayload {
    count: number;
    positions: Float32Array; // recentered, 3 floats per point
    labels: Uint8Array;
    margins: Float32Array;
}
