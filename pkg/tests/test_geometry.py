import math

import numpy as np
import pytest

from egonav.errors import DegenerateOrientationError, InvalidArgumentError
from egonav.geometry import (Pose2, Pose3, VelocityCommand, compose,
                             project_to_ground, rollout, step, to_frame, wrap,
                             yaw_quaternion)


class TestWrap:
    def test_identity(self):
        assert wrap(0.0) == 0.0

    def test_three_half_pi(self):
        assert wrap(3 * math.pi / 2) == pytest.approx(-math.pi / 2, abs=1e-15)

    def test_boundary_convention(self):
        # (-pi, pi]: -pi maps to +pi
        assert wrap(-math.pi) == math.pi
        assert wrap(math.pi) == math.pi

    @pytest.mark.parametrize("k", range(-3, 4))
    def test_periodicity(self, k):
        rng = np.random.default_rng(17)
        for theta in rng.uniform(-math.pi, math.pi, 50):
            assert wrap(theta + 2 * math.pi * k) == pytest.approx(
                wrap(theta), abs=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            wrap(float("nan"))
        with pytest.raises(InvalidArgumentError):
            wrap(float("inf"))


class TestStep:
    def test_straight(self):
        p = step(Pose2(0, 0, 0), VelocityCommand(1, 0), 0.16)
        assert (p.x, p.y, p.theta) == (0.16, 0.0, 0.0)

    def test_straight_rotated(self):
        p = step(Pose2(0, 0, math.pi / 2), VelocityCommand(1, 0), 0.16)
        assert p.x == pytest.approx(0.0, abs=1e-16)
        assert p.y == pytest.approx(0.16, abs=1e-16)
        assert p.theta == math.pi / 2

    def test_pure_rotation(self):
        p = step(Pose2(0, 0, 0), VelocityCommand(0, math.pi), 0.16)
        assert (p.x, p.y) == (0.0, 0.0)
        assert p.theta == pytest.approx(0.16 * math.pi)

    def test_bad_dt(self):
        with pytest.raises(InvalidArgumentError):
            step(Pose2(0, 0, 0), VelocityCommand(1, 0), 0.0)

    def test_bit_stable(self):
        a = step(Pose2(0.3, -0.2, 1.1), VelocityCommand(0.7, -0.4), 0.16)
        b = step(Pose2(0.3, -0.2, 1.1), VelocityCommand(0.7, -0.4), 0.16)
        assert (a.x, a.y, a.theta) == (b.x, b.y, b.theta)


class TestRollout:
    def test_repeated_straight(self):
        poses = rollout(Pose2(0, 0, 0), [VelocityCommand(1, 0)] * 2, 0.16)
        assert [(p.x, p.y, p.theta) for p in poses] == [
            (0.16, 0.0, 0.0), (0.32, 0.0, 0.0)]

    def test_zero_commands(self):
        poses = rollout(Pose2(1, 2, 0.5), [VelocityCommand(0, 0)] * 5, 0.16)
        assert all((p.x, p.y, p.theta) == (1, 2, 0.5) for p in poses)

    def test_matches_independent_recursion(self):
        # frozen output of a separately hand-iterated Euler recursion
        expected = [
            (0.16, 0.0, 0.25132741228718347),
            (0.31497330578058097, 0.03979038194637677, 0.5026548245743669),
            (0.45518237458759914, 0.11687096980265123, 0.7539822368615504),
            (0.571817354975025, 0.22639850675124143, 1.0053096491487339),
        ]
        poses = rollout(Pose2(0, 0, 0),
                        [VelocityCommand(1, math.pi / 2)] * 4, 0.16)
        for p, (ex, ey, eth) in zip(poses, expected):
            assert p.x == pytest.approx(ex, abs=1e-15)
            assert p.y == pytest.approx(ey, abs=1e-15)
            assert p.theta == pytest.approx(eth, abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            rollout(Pose2(0, 0, 0), [], 0.16)

    def test_zero_omega_collinear(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            th = rng.uniform(-math.pi, math.pi)
            start = Pose2(rng.uniform(-1, 1), rng.uniform(-1, 1), th)
            cmds = [VelocityCommand(v, 0.0) for v in rng.uniform(-1, 1, 8)]
            for p in rollout(start, cmds, 0.16):
                cross = (-math.sin(th) * (p.x - start.x)
                         + math.cos(th) * (p.y - start.y))
                assert abs(cross) <= 1e-12


class TestFrames:
    def test_identity_reference(self):
        t = to_frame(Pose2(0, 0, 0), Pose2(1, 2, math.pi / 4))
        assert (t.x, t.y, t.theta) == (1.0, 2.0, math.pi / 4)

    def test_rotated_reference(self):
        t = to_frame(Pose2(1, 0, math.pi / 2), Pose2(1, 1, math.pi / 2))
        assert t.x == pytest.approx(1.0)
        assert t.y == pytest.approx(0.0, abs=1e-15)
        assert t.theta == 0.0

    def test_self_frame(self):
        p = Pose2(0.4, -2.0, 1.2)
        t = to_frame(p, p)
        assert (t.x, t.y, t.theta) == (0.0, 0.0, 0.0)

    def test_compose_inverts_to_frame(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            ref = Pose2(*rng.uniform(-3, 3, 2), rng.uniform(-math.pi, math.pi))
            tgt = Pose2(*rng.uniform(-3, 3, 2), rng.uniform(-math.pi, math.pi))
            back = compose(ref, to_frame(ref, tgt))
            assert back.x == pytest.approx(tgt.x, abs=1e-12)
            assert back.y == pytest.approx(tgt.y, abs=1e-12)
            assert wrap(back.theta - tgt.theta) == pytest.approx(0.0, abs=1e-12)


class TestGroundProjection:
    def test_identity_orientation(self):
        p = project_to_ground(Pose3((1, 2, 1.7), (1, 0, 0, 0)))
        assert (p.x, p.y, p.theta) == (1, 2, 0.0)

    def test_yaw_rotation(self):
        q = yaw_quaternion(math.pi / 2)
        p = project_to_ground(Pose3((0, 0, 0), q))
        assert p.theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_forward_axis_down_degenerate(self):
        # pitch the +X axis straight down: rotation by -pi/2 about +Y
        h = 0.5 * (-math.pi / 2)
        q = (math.cos(h), 0.0, math.sin(h), 0.0)
        with pytest.raises(DegenerateOrientationError):
            project_to_ground(Pose3((0, 0, 0), q))

    def test_configurable_axis(self):
        p = project_to_ground(Pose3((0, 0, 0), (1, 0, 0, 0)), forward_axis="+y")
        assert p.theta == pytest.approx(math.pi / 2)

    def test_unknown_axis(self):
        with pytest.raises(InvalidArgumentError):
            project_to_ground(Pose3((0, 0, 0), (1, 0, 0, 0)), forward_axis="up")


def test_quaternion_norm_enforced():
    with pytest.raises(InvalidArgumentError):
        Pose3((0, 0, 0), (1.0, 0.5, 0.0, 0.0))
