"""Closed-loop verification and synthetic episode generation.

``simulate`` replays retargeted commands through the shared Euler model
and scores tracking against the desired waypoints; ``synthesize`` builds
deterministic walking episodes (straight legs, exact circular arcs, and
pause-and-manipulate stops) with ground-truth phase labels for testing
the segmentation and retargeting stack end to end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geometry import Pose2, VelocityCommand, wrap, yaw_quaternion, Pose3
from .ingest import Episode, FrameRecord, HandSample
from .retarget import (RetargetConfig, RetargetProblem, RetargetSolution,
                       cost as retarget_cost, _states)
from .segmentation import MANIPULATION, NAVIGATION, PhaseTrack

HAND_FREQ = 2.0        # Hz, manipulation hand oscillation
HAND_OFFSET = 0.4      # m, hand circle center in front of the head
DEFAULT_AMPLITUDE = 0.3


@dataclass(frozen=True)
class SimResult:
    poses: tuple[Pose2, ...]
    pos_rmse: float
    pos_max: float
    yaw_rmse: float
    cost_breakdown: tuple[float, float, float]  # (pos, yaw, smooth), recomputed
    reported_cost: float                        # solver-reported total
    cost_discrepancy: float                     # |recomputed - reported|


@dataclass(frozen=True)
class SynthSegment:
    kind: str                 # "straight" | "arc" | "pause-and-manipulate"
    duration: float           # seconds
    speed: float = 1.0        # m/s (straight, arc)
    turn_rate: float = 0.0    # rad/s (arc)
    hand_amplitude: float = DEFAULT_AMPLITUDE  # m (pause-and-manipulate)

    def __post_init__(self):
        if self.kind not in ("straight", "arc", "pause-and-manipulate"):
            raise InvalidArgumentError(f"unknown segment kind {self.kind!r}")
        if not self.duration > 0:
            raise InvalidArgumentError("segment duration must be positive")
        if self.kind == "arc" and self.turn_rate == 0.0:
            raise InvalidArgumentError("arc segment needs a nonzero turn_rate")


@dataclass(frozen=True)
class SynthSpec:
    segments: tuple[SynthSegment, ...]
    fps: float = 30.0
    noise_std: float = 0.0    # m, head jitter while paused
    seed: int = 0
    head_height: float = 1.6

    def __post_init__(self):
        if not self.segments:
            raise InvalidArgumentError("spec needs at least one segment")
        if not self.fps > 0:
            raise InvalidArgumentError("fps must be positive")


def simulate(start: Pose2, solutions: Sequence[RetargetSolution],
             desired: Sequence[Pose2], dt: float,
             cfg: Optional[RetargetConfig] = None) -> SimResult:
    """Roll out retargeted commands and score them against the waypoints.

    Also recomputes the per-window objective with the shared dynamics and
    reports the discrepancy against the solver-declared costs.
    """
    cmds = [c for sol in solutions for c in sol.cmds]
    if len(cmds) != len(desired):
        raise InvalidArgumentError(
            f"command count {len(cmds)} != waypoint count {len(desired)}"
        )
    cfg = cfg or RetargetConfig(dt=dt)

    poses = []
    c_pos = c_yaw = c_smooth = 0.0
    reported = 0.0
    discrepancy = 0.0
    pose = start
    prev_cmd = VelocityCommand(0.0, 0.0)
    offset = 0
    for sol in solutions:
        window = tuple(p.normalized() for p in desired[offset:offset + len(sol.cmds)])
        prob = RetargetProblem(pose, window, cfg, prev_cmd)
        z = np.array([[c.v, c.omega] for c in sol.cmds])
        total, cp, cy, cs = retarget_cost(z, prob)
        c_pos += cp
        c_yaw += cy
        c_smooth += cs
        reported += sol.cost_total
        discrepancy = max(discrepancy, abs(total - sol.cost_total))
        xs, ys, ths = _states(z, prob)
        poses.extend(Pose2(xs[k], ys[k], ths[k]) for k in range(1, len(z) + 1))
        pose = Pose2(xs[-1], ys[-1], ths[-1])
        prev_cmd = sol.cmds[-1]
        offset += len(sol.cmds)

    errs = [math.hypot(p.x - d.x, p.y - d.y) for p, d in zip(poses, desired)]
    yaw_errs = [wrap(p.theta - d.theta) for p, d in zip(poses, desired)]
    n = len(errs)
    return SimResult(
        poses=tuple(poses),
        pos_rmse=math.sqrt(sum(e * e for e in errs) / n),
        pos_max=max(errs),
        yaw_rmse=math.sqrt(sum(e * e for e in yaw_errs) / n),
        cost_breakdown=(c_pos, c_yaw, c_smooth),
        reported_cost=reported,
        cost_discrepancy=discrepancy,
    )


def synthesize(spec: SynthSpec) -> tuple[Episode, PhaseTrack]:
    """Generate a deterministic walking episode with ground-truth phases.

    Straight and arc segments use exact unicycle integration (arcs stay
    on the circle of radius v/omega to machine precision, deliberately
    distinct from the Euler model the optimizer uses). Pause segments
    jitter the head with i.i.d. Gaussian noise while the right hand
    sweeps a circle at 2 Hz, which keeps the hand speed away from zero
    so the velocity-ratio gate stays closed.
    """
    rng = np.random.default_rng(spec.seed)
    dt = 1.0 / spec.fps
    frames: list[FrameRecord] = []
    labels: list[int] = []
    pose = Pose2(0.0, 0.0, 0.0)
    t = 0.0
    for seg in spec.segments:
        n = max(1, round(seg.duration * spec.fps))
        for _ in range(n):
            if seg.kind == "straight":
                pose = Pose2(pose.x + seg.speed * math.cos(pose.theta) * dt,
                             pose.y + seg.speed * math.sin(pose.theta) * dt,
                             pose.theta)
                head_xy = (pose.x, pose.y)
                hand = None
                labels.append(NAVIGATION)
            elif seg.kind == "arc":
                r = seg.speed / seg.turn_rate
                th_new = pose.theta + seg.turn_rate * dt
                pose = Pose2(pose.x + r * (math.sin(th_new) - math.sin(pose.theta)),
                             pose.y - r * (math.cos(th_new) - math.cos(pose.theta)),
                             wrap(th_new))
                head_xy = (pose.x, pose.y)
                hand = None
                labels.append(NAVIGATION)
            else:  # pause-and-manipulate
                jitter = rng.normal(0.0, spec.noise_std, 2) if spec.noise_std > 0 \
                    else (0.0, 0.0)
                head_xy = (pose.x + jitter[0], pose.y + jitter[1])
                phase_angle = 2.0 * math.pi * HAND_FREQ * t
                a = seg.hand_amplitude
                c, s = math.cos(pose.theta), math.sin(pose.theta)
                # circular sweep (constant speed 2*pi*f*a) in front of the head
                local_x = HAND_OFFSET + a * math.cos(phase_angle)
                local_z = spec.head_height - 0.4 + a * math.sin(phase_angle)
                hand = HandSample(
                    (pose.x + c * local_x, pose.y + s * local_x, local_z), 1.0)
                labels.append(MANIPULATION)
            t += dt
            head = Pose3((head_xy[0], head_xy[1], spec.head_height),
                         yaw_quaternion(pose.theta))
            frames.append(FrameRecord(t, head, right_hand=hand))
    ep = Episode(tuple(frames), fps=spec.fps, source="human")
    return ep, PhaseTrack(np.asarray(labels, dtype=np.int64))


def score_segmentation(predicted: PhaseTrack, truth: PhaseTrack) -> float:
    """Fraction of frames with matching labels."""
    if len(predicted) != len(truth):
        raise InvalidArgumentError("phase tracks have different lengths")
    return float(np.mean(predicted.labels == truth.labels))


def spec_from_json(obj: dict) -> SynthSpec:
    """Build a SynthSpec from its JSON representation."""
    try:
        segments = tuple(
            SynthSegment(
                kind=s["kind"],
                duration=float(s["duration"]),
                speed=float(s.get("speed", 1.0)),
                turn_rate=float(s.get("turn_rate", 0.0)),
                hand_amplitude=float(s.get("hand_amplitude", DEFAULT_AMPLITUDE)),
            )
            for s in obj["segments"]
        )
        return SynthSpec(
            segments=segments,
            fps=float(obj.get("fps", 30.0)),
            noise_std=float(obj.get("noise_std", 0.0)),
            seed=int(obj.get("seed", 0)),
            head_height=float(obj.get("head_height", 1.6)),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"invalid synthesis spec: {exc}") from None


def write_sim_file(path, result: SimResult) -> None:
    obj = {
        "pos_rmse": result.pos_rmse,
        "pos_max": result.pos_max,
        "yaw_rmse": result.yaw_rmse,
        "cost_pos": result.cost_breakdown[0],
        "cost_yaw": result.cost_breakdown[1],
        "cost_smooth": result.cost_breakdown[2],
        "reported_cost": result.reported_cost,
        "cost_discrepancy": result.cost_discrepancy,
        "poses": [[p.x, p.y, p.theta] for p in result.poses],
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def read_sim_file(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
