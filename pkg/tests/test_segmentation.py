import math

import numpy as np
import pytest

from egonav.errors import InvalidArgumentError, NoManipulationZonesError
from egonav.geometry import Pose3, yaw_quaternion
from egonav.ingest import Episode, FrameRecord, HandSample
from egonav.segmentation import (MANIPULATION, NAVIGATION, GmmModel,
                                 PhaseConfig, PhaseTrack, candidate_mask,
                                 classify, gmm_fit, gmm_pdf, read_phase_file,
                                 responsibilities, segment, velocities,
                                 write_phase_file)
from egonav.simulator import score_segmentation, synthesize

from conftest import two_zone_spec


def make_episode(head_xy, hand_pos=None, fps=30.0):
    frames = []
    for i, (x, y) in enumerate(head_xy):
        hand = None
        if hand_pos is not None and hand_pos[i] is not None:
            hand = HandSample(hand_pos[i], 1.0)
        frames.append(FrameRecord(i / fps, Pose3((x, y, 1.6), yaw_quaternion(0.0)),
                                  right_hand=hand))
    return Episode(tuple(frames), fps=fps)


class TestVelocities:
    def test_moving_head(self):
        ep = make_episode([(0.02 * i, 0.0) for i in range(10)])
        v_head, _ = velocities(ep)
        assert v_head == pytest.approx([0.6] * 10)

    def test_stationary_head(self):
        ep = make_episode([(0.0, 0.0)] * 2 + [(0.0, 0.0)] * 3)
        v_head, _ = velocities(ep)
        assert v_head == pytest.approx([0.0] * 5)

    def test_missing_hands_zero(self):
        ep = make_episode([(0.02 * i, 0.0) for i in range(5)])
        _, v_hand = velocities(ep)
        assert v_hand == pytest.approx([0.0] * 5)

    def test_hand_speed_3d(self):
        n = 5
        hand = [(0.0, 0.0, 0.03 * i) for i in range(n)]
        ep = make_episode([(0.0, 0.0)] * n, hand_pos=hand)
        _, v_hand = velocities(ep)
        assert v_hand[1:] == pytest.approx([0.9] * (n - 1))

    def test_single_frame_rejected(self):
        with pytest.raises(InvalidArgumentError):
            velocities(make_episode([(0.0, 0.0)]))


class TestCandidateMask:
    def test_sustained_candidates(self):
        cfg = PhaseConfig()
        v_head = np.full(40, 0.1)
        v_hand = np.full(40, 1.0)
        mask = candidate_mask(v_head, v_hand, cfg)
        assert mask.all()

    def test_short_burst_cleared(self):
        cfg = PhaseConfig()
        v_head = np.full(60, 0.1)
        v_hand = np.zeros(60)
        v_hand[20:30] = 1.0  # 10-frame burst < tau_duration
        mask = candidate_mask(v_head, v_hand, cfg)
        assert not mask.any()

    def test_head_speed_gate(self):
        cfg = PhaseConfig()
        v_head = np.full(60, 0.5)
        v_hand = np.full(60, 50.0)
        assert not candidate_mask(v_head, v_hand, cfg).any()

    def test_all_runs_long_enough(self):
        cfg = PhaseConfig()
        rng = np.random.default_rng(11)
        v_head = rng.uniform(0.0, 0.8, 500)
        v_hand = rng.uniform(0.0, 3.0, 500)
        mask = candidate_mask(v_head, v_hand, cfg)
        runs = np.diff(np.flatnonzero(np.diff(np.r_[0, mask, 0])))[::2] \
            if mask.any() else []
        assert all(r >= cfg.tau_duration for r in runs)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            candidate_mask(np.zeros(3), np.zeros(4), PhaseConfig())


class TestGmm:
    def cluster_points(self, seed=0, n=200, centers=((0, 0), (5, 5)), std=0.1):
        rng = np.random.default_rng(seed)
        pts = np.concatenate([rng.normal(c, std, (n, 2)) for c in centers])
        return pts

    def test_two_clusters_recovered(self):
        pts = self.cluster_points()
        model = gmm_fit(pts, PhaseConfig(k_components=2), seed=1)
        means = sorted(map(tuple, model.means))
        assert means[0] == pytest.approx((0, 0), abs=0.1)
        assert means[1] == pytest.approx((5, 5), abs=0.1)

    def test_degenerate_single_cluster(self):
        pts = np.tile([[2.0, 3.0]], (50, 1))
        model = gmm_fit(pts, PhaseConfig(k_components=1), seed=0)
        assert model.means[0] == pytest.approx([2.0, 3.0])
        assert model.covariances[0] == pytest.approx(np.eye(2) * 1e-6, abs=1e-9)

    def test_seeded_determinism_bit_exact(self):
        pts = self.cluster_points(seed=3)
        a = gmm_fit(pts, PhaseConfig(), seed=7)
        b = gmm_fit(pts, PhaseConfig(), seed=7)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.means, b.means)
        assert np.array_equal(a.covariances, b.covariances)

    def test_too_few_points(self):
        with pytest.raises(InvalidArgumentError):
            gmm_fit([[0.0, 0.0]], PhaseConfig(k_components=2), seed=0)

    def test_log_likelihood_monotone(self):
        pts = self.cluster_points(seed=5, std=0.5)
        model = gmm_fit(pts, PhaseConfig(), seed=2)
        ll = np.asarray(model.log_likelihoods)
        assert len(ll) >= 2
        assert (np.diff(ll) >= -1e-9).all()

    def test_responsibilities_rows_sum_to_one(self):
        pts = self.cluster_points(seed=6)
        model = gmm_fit(pts, PhaseConfig(), seed=4)
        resp = responsibilities(model, pts)
        assert resp.sum(axis=1) == pytest.approx(np.ones(len(pts)), abs=1e-9)
        assert model.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_covariances_spd(self):
        pts = self.cluster_points(seed=8, std=0.3)
        model = gmm_fit(pts, PhaseConfig(), seed=8)
        for cov in model.covariances:
            assert np.allclose(cov, cov.T)
            assert np.linalg.eigvalsh(cov).min() > 0


class TestGmmPdf:
    def unit_model(self):
        return GmmModel(np.array([1.0]), np.array([[0.0, 0.0]]),
                        np.array([[[1.0, 0.0], [0.0, 1.0]]]))

    def test_unit_gaussian_at_mean(self):
        assert gmm_pdf(self.unit_model(), [0.0, 0.0]) == pytest.approx(
            1.0 / (2 * math.pi))

    def test_far_tail(self):
        assert gmm_pdf(self.unit_model(), [12.0, 0.0]) < 1e-20

    def test_mixture_symmetry(self):
        double = GmmModel(np.array([0.5, 0.5]),
                          np.array([[1.0, 2.0], [1.0, 2.0]]),
                          np.tile(np.eye(2), (2, 1, 1)))
        single = GmmModel(np.array([1.0]), np.array([[1.0, 2.0]]),
                          np.eye(2)[None])
        pt = [1.3, 1.5]
        assert gmm_pdf(double, pt) == pytest.approx(gmm_pdf(single, pt))

    def test_integrates_to_one_monte_carlo(self):
        rng = np.random.default_rng(12)
        pts = np.concatenate([rng.normal((0, 0), 0.4, (300, 2)),
                              rng.normal((3, 0.5), 0.3, (300, 2))])
        model = gmm_fit(pts, PhaseConfig(), seed=1)
        sigma = math.sqrt(max(np.linalg.eigvalsh(c).max()
                              for c in model.covariances))
        lo = model.means.min(axis=0) - 8 * sigma
        hi = model.means.max(axis=0) + 8 * sigma
        samples = rng.uniform(lo, hi, (1_000_000, 2))
        area = float(np.prod(hi - lo))
        est = float(np.mean(gmm_pdf(model, samples))) * area
        assert est == pytest.approx(1.0, rel=0.02)


class TestClassify:
    def fitted(self):
        rng = np.random.default_rng(2)
        head = list(map(tuple, rng.normal((0, 0), 0.05, (100, 2)))) + \
            [(0.1 * i, 5.0) for i in range(100)]
        ep = make_episode(head)
        pts = np.asarray(head[:100])
        model = gmm_fit(pts, PhaseConfig(), seed=0)
        return ep, model

    def test_zone_mean_is_manipulation(self):
        ep, model = self.fitted()
        track = classify(ep, model, PhaseConfig())
        assert track.labels[0] == MANIPULATION

    def test_far_away_is_navigation(self):
        ep, model = self.fitted()
        track = classify(ep, model, PhaseConfig())
        assert (track.labels[120:] == NAVIGATION).all()

    def test_component_permutation_invariant(self):
        ep, model = self.fitted()
        perm = GmmModel(model.weights[::-1].copy(), model.means[::-1].copy(),
                        model.covariances[::-1].copy())
        a = classify(ep, model, PhaseConfig())
        b = classify(ep, perm, PhaseConfig())
        assert np.array_equal(a.labels, b.labels)

    def test_generator_ground_truth(self):
        ep, truth = synthesize(two_zone_spec(seed=9))
        track, _ = segment(ep, PhaseConfig(), seed=9)
        assert score_segmentation(track, truth) >= 0.95


class TestSegment:
    def test_hands_absent_raises(self):
        ep = make_episode([(0.03 * i, 0.0) for i in range(100)])
        with pytest.raises(NoManipulationZonesError):
            segment(ep, PhaseConfig(), seed=0)

    def test_two_zone_means(self):
        ep, _ = synthesize(two_zone_spec(seed=21))
        track, model = segment(ep, PhaseConfig(), seed=21)
        # zone centers: origin and the end of the first walking stretch
        d = np.linalg.norm(model.means[0] - model.means[1])
        assert d > 2.0
        assert min(np.linalg.norm(model.means, axis=1)) < 0.05

    def test_deterministic_labels(self):
        ep, _ = synthesize(two_zone_spec(seed=33))
        a, _ = segment(ep, PhaseConfig(), seed=5)
        b, _ = segment(ep, PhaseConfig(), seed=5)
        assert np.array_equal(a.labels, b.labels)

    def test_transition_sparsity(self):
        ep, truth = synthesize(two_zone_spec(seed=13))
        track, _ = segment(ep, PhaseConfig(), seed=13)
        assert abs(track.transitions() - truth.transitions()) <= 2


def test_phase_file_round_trip(tmp_path):
    ep, _ = synthesize(two_zone_spec(seed=1))
    cfg = PhaseConfig()
    track, model = segment(ep, cfg, seed=1)
    path = tmp_path / "phases.json"
    write_phase_file(path, track, model, cfg, seed=1)
    track2, model2, cfg2, seed = read_phase_file(path)
    assert np.array_equal(track.labels, track2.labels)
    assert np.allclose(model.means, model2.means)
    assert cfg2 == cfg
    assert seed == 1
