import numpy as np
import pytest

from gridscan.cloud import TSRGB, TS40K
from gridscan.flagging import (FlagPolicy, cluster_undecided, flag_segment,
                               margin, margins, mark_undecided)
from gridscan.predictor import SoftmaxPrediction


def pred_from_margins(margin_values, schema=TSRGB):
    """Rows whose top-2 gap equals the requested margins (class 0 top)."""
    m = np.asarray(margin_values, dtype=np.float64)
    c = schema.num_classes
    top = (1.0 + m) / 2
    second = (1.0 - m) / 2
    probs = np.zeros((len(m), c), dtype=np.float64)
    probs[:, 0] = top
    probs[:, 1] = second
    return SoftmaxPrediction(probs.astype(np.float32), schema)


def dbscan_oracle(points, eps, min_pts):
    """Exhaustive pairwise DBSCAN: memberships as frozensets + noise set."""
    n = len(points)
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    neighbors = [np.flatnonzero(d[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbors])

    cluster_of = {}
    clusters = []
    for i in range(n):
        if not core[i] or i in cluster_of:
            continue
        stack, comp = [i], set()
        while stack:
            j = stack.pop()
            if j in comp:
                continue
            comp.add(j)
            for k in neighbors[j]:
                if core[k] and k not in comp:
                    stack.append(k)
        for j in comp:
            cluster_of[j] = len(clusters)
        clusters.append(set(comp))
    for i in range(n):
        if core[i] or i in cluster_of:
            continue
        cands = sorted(j for j in neighbors[i] if core[j])
        if cands:
            best = cands[int(np.argmin(d[i, cands]))]
            clusters[cluster_of[best]].add(i)
            cluster_of[i] = cluster_of[best]
    noise = set(range(n)) - set(cluster_of)
    return {frozenset(c) for c in clusters}, noise


class TestMargin:
    def test_one_hot(self):
        assert margin([1.0, 0.0, 0.0]) == 1.0

    def test_uniform(self):
        assert margin([1 / 3, 1 / 3, 1 / 3]) == pytest.approx(0.0)

    def test_sorted_subtraction(self):
        assert margin([0.5, 0.3, 0.2]) == pytest.approx(0.2)
        assert margin([0.2, 0.5, 0.3]) == pytest.approx(0.2)  # order-free

    def test_single_class(self):
        assert margins(np.array([[1.0]])).tolist() == [1.0]


class TestMarkUndecided:
    def test_one_hot_rows_all_decided(self):
        pred = pred_from_margins(np.ones(10))
        mask = mark_undecided(pred, FlagPolicy())
        assert not mask.any()

    def test_low_margin_row_marked(self):
        pred = pred_from_margins([0.10])  # [0.55, 0.45]
        assert mark_undecided(pred, FlagPolicy(margin_threshold=0.2)).tolist() == [True]

    def test_threshold_to_zero_limit(self):
        rng = np.random.default_rng(70)
        pred = pred_from_margins(rng.uniform(0.05, 0.9, 100))
        policy = FlagPolicy(margin_threshold=1e-9)
        assert not mark_undecided(pred, policy).any()

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(71)
        pred = pred_from_margins(rng.uniform(0.0, 1.0, 500))
        counts = [mark_undecided(pred, FlagPolicy(margin_threshold=t)).sum()
                  for t in (0.05, 0.2, 0.5, 0.9)]
        assert counts == sorted(counts)

    def test_entropy_measure_option(self):
        pred = pred_from_margins([0.02, 0.9])
        mask = mark_undecided(pred, FlagPolicy(margin_threshold=0.2,
                                               measure="entropy"))
        assert mask.tolist() == [True, False]


class TestClusterUndecided:
    def test_tight_group_single_cluster(self):
        rng = np.random.default_rng(72)
        pts = rng.uniform(0, 0.1, (10, 3))
        clusters, unclustered = cluster_undecided(
            pts, np.ones(10, bool), FlagPolicy(cluster_radius=1.0,
                                               cluster_min_points=5))
        assert len(clusters) == 1
        assert clusters[0].member_count == 10
        assert len(unclustered) == 0

    def test_two_far_groups(self):
        rng = np.random.default_rng(73)
        a = rng.uniform(0, 1, (10, 3))
        b = rng.uniform(100, 101, (10, 3))
        pts = np.vstack([b, a])  # higher-coordinate group carries lower indices
        clusters, _ = cluster_undecided(pts, np.ones(20, bool), FlagPolicy())
        assert len(clusters) == 2
        # ordered by lowest contained point index
        assert clusters[0].member_indices[0] == 0
        assert set(clusters[0].member_indices) == set(range(10))
        assert set(clusters[1].member_indices) == set(range(10, 20))

    def test_isolated_points_unclustered(self):
        pts = np.array([[0.0, 0, 0], [50, 0, 0], [100, 0, 0]])
        clusters, unclustered = cluster_undecided(
            pts, np.ones(3, bool), FlagPolicy(cluster_min_points=5))
        assert clusters == []
        assert unclustered.tolist() == [0, 1, 2]

    def test_only_masked_points_clustered(self):
        rng = np.random.default_rng(74)
        pts = rng.uniform(0, 0.5, (20, 3))
        mask = np.zeros(20, bool)
        mask[::2] = True
        clusters, _ = cluster_undecided(pts, mask, FlagPolicy())
        member_union = set()
        for c in clusters:
            member_union |= set(c.member_indices.tolist())
        assert member_union <= set(np.flatnonzero(mask).tolist())

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(75)
        for _ in range(30):
            n = int(rng.integers(5, 300))
            pts = rng.uniform(0, 12, (n, 3))
            policy = FlagPolicy(cluster_radius=float(rng.uniform(0.5, 2.5)),
                                cluster_min_points=int(rng.integers(2, 8)))
            clusters, unclustered = cluster_undecided(pts, np.ones(n, bool), policy)
            got = {frozenset(c.member_indices.tolist()) for c in clusters}
            expected, noise = dbscan_oracle(pts, policy.cluster_radius,
                                            policy.cluster_min_points)
            assert got == expected
            assert set(unclustered.tolist()) == noise

    def test_permutation_invariant_memberships(self):
        rng = np.random.default_rng(76)
        pts = rng.uniform(0, 8, (200, 3))
        policy = FlagPolicy(cluster_radius=1.0, cluster_min_points=4)
        base, base_un = cluster_undecided(pts, np.ones(200, bool), policy)
        perm = rng.permutation(200)
        permuted, perm_un = cluster_undecided(pts[perm], np.ones(200, bool), policy)
        back = {frozenset(perm[c.member_indices].tolist()) for c in permuted}
        assert back == {frozenset(c.member_indices.tolist()) for c in base}
        assert set(perm[perm_un].tolist()) == set(base_un.tolist())


class TestFlagSegment:
    def make(self, n, undecided_count, rng):
        m = np.full(n, 0.9)
        m[:undecided_count] = 0.05
        pts = rng.uniform(0, 100, (n, 3))
        return pts, pred_from_margins(m)

    def test_no_undecided_not_flagged(self):
        rng = np.random.default_rng(77)
        pts, pred = self.make(1000, 0, rng)
        report = flag_segment(pts, pred, FlagPolicy(), segment_id=3)
        assert report.segment_id == 3
        assert not report.flagged
        assert report.undecided_count == 0
        assert report.clusters == []

    def test_fraction_threshold_flags(self):
        rng = np.random.default_rng(78)
        pts, pred = self.make(100_000, 600, rng)
        report = flag_segment(pts, pred, FlagPolicy())
        assert report.undecided_fraction == pytest.approx(0.006)
        assert report.flagged

    def test_below_both_thresholds_not_flagged(self):
        rng = np.random.default_rng(79)
        pts, pred = self.make(100_000, 99, rng)
        report = flag_segment(pts, pred, FlagPolicy())
        assert report.undecided_count == 99
        assert report.undecided_fraction == pytest.approx(0.00099)
        assert not report.flagged

    def test_count_invariant_holds(self):
        rng = np.random.default_rng(80)
        pts = rng.uniform(0, 4, (500, 3))
        m = rng.uniform(0, 1, 500)
        report = flag_segment(pts, pred_from_margins(m), FlagPolicy())
        in_clusters = sum(c.member_count for c in report.clusters)
        assert report.undecided_count == in_clusters + report.unclustered_count

    def test_raising_thresholds_never_flags_more(self):
        rng = np.random.default_rng(81)
        pts = rng.uniform(0, 10, (5000, 3))
        m = rng.uniform(0, 0.5, 5000)
        pred = pred_from_margins(m)
        loose = flag_segment(pts, pred, FlagPolicy(
            segment_undecided_min=100, segment_undecided_fraction=0.01))
        strict = flag_segment(pts, pred, FlagPolicy(
            segment_undecided_min=10_000, segment_undecided_fraction=0.9))
        assert loose.flagged or not strict.flagged

    def test_length_mismatch(self):
        rng = np.random.default_rng(82)
        pts, pred = self.make(100, 0, rng)
        with pytest.raises(ValueError):
            flag_segment(pts[:50], pred, FlagPolicy())

    def test_per_class_histogram(self):
        rng = np.random.default_rng(83)
        pts, pred = self.make(50, 10, rng)
        report = flag_segment(pts, pred, FlagPolicy())
        assert sum(report.per_class_undecided.values()) == report.undecided_count

    def test_json_fields(self):
        rng = np.random.default_rng(84)
        pts = rng.uniform(0, 2, (200, 3))
        m = np.full(200, 0.05)
        report = flag_segment(pts, pred_from_margins(m), FlagPolicy(), segment_id=1)
        d = report.to_dict()
        assert set(d) == {"segment_id", "undecided_count", "undecided_fraction",
                          "clusters", "flagged", "per_class_undecided",
                          "unclustered_count"}
        assert d["flagged"] is True
        assert {"centroid", "bounds", "member_count"} == set(d["clusters"][0])
