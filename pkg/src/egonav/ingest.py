"""Recording parsing, quality filtering, waypoint extraction, normalization.

The on-disk recording format is line-delimited JSON, one frame per line:

    {"t": 0.0, "head": {"p": [x, y, z], "q": [w, x, y, z]},
     "lh": {"p": [x, y, z], "c": 1.0}, "rh": {...}}

``lh``/``rh`` (left/right hand) are optional per frame; ``c`` is the
tracking confidence. Serialization uses shortest round-trip float repr,
so serialize -> parse reproduces an episode bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ParseError, SchemaError
from .geometry import Pose2, Pose3, project_to_ground, to_frame

DEFAULT_D_THRESH = 0.25  # meters between consecutive waypoints


@dataclass(frozen=True)
class HandSample:
    position: tuple[float, float, float]
    confidence: float


@dataclass(frozen=True)
class FrameRecord:
    """One timestamped sample of head pose and optional hand positions."""

    t: float
    head: Pose3
    left_hand: Optional[HandSample] = None
    right_hand: Optional[HandSample] = None

    def hands(self):
        return [h for h in (self.left_hand, self.right_hand) if h is not None]


@dataclass(frozen=True)
class Episode:
    frames: tuple[FrameRecord, ...]
    fps: float
    source: str = "human"  # "human" or "robot"

    def __post_init__(self):
        if not self.fps > 0:
            raise InvalidArgumentError(f"fps must be positive, got {self.fps}")
        if self.source not in ("human", "robot"):
            raise InvalidArgumentError(f"unknown source {self.source!r}")


@dataclass(frozen=True)
class WaypointTrack:
    """Displacement-triggered sparse waypoints of the base trajectory."""

    waypoints: tuple[tuple[int, Pose2], ...]  # (frame_index, pose)
    d_thresh: float
    k_h: int = 10


@dataclass(frozen=True)
class NormStats:
    """Per-dimension z-score statistics for one data source."""

    mean: np.ndarray
    std: np.ndarray
    source: str
    clamped: tuple[bool, ...] = field(default_factory=tuple)


def _vec3(obj, key, line_no):
    try:
        p = obj[key]
    except KeyError:
        raise ParseError(f"missing field {key!r}", line_no) from None
    if not (isinstance(p, list) and len(p) == 3):
        raise ParseError(f"field {key!r} must be a 3-element list", line_no)
    return tuple(float(v) for v in p)


def _parse_frame(line: str, line_no: int) -> FrameRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
    if "t" not in obj:
        raise ParseError("missing field 't'", line_no)
    if "head" not in obj:
        raise ParseError("missing field 'head'", line_no)
    head_obj = obj["head"]
    pos = _vec3(head_obj, "p", line_no)
    try:
        q = head_obj["q"]
    except (KeyError, TypeError):
        raise ParseError("missing field 'head.q'", line_no) from None
    if not (isinstance(q, list) and len(q) == 4):
        raise ParseError("field 'head.q' must be a 4-element list", line_no)
    try:
        head = Pose3(pos, tuple(float(v) for v in q))
    except InvalidArgumentError as exc:
        raise ParseError(str(exc), line_no) from None

    hands = {}
    for key in ("lh", "rh"):
        if key in obj and obj[key] is not None:
            hobj = obj[key]
            hp = _vec3(hobj, "p", line_no)
            if "c" not in hobj:
                raise ParseError(f"missing field '{key}.c'", line_no)
            hands[key] = HandSample(hp, float(hobj["c"]))
    return FrameRecord(float(obj["t"]), head,
                       hands.get("lh"), hands.get("rh"))


def parse_recording(stream: IO[str] | Iterable[str], fps: float = 30.0,
                    source: str = "human") -> Episode:
    """Parse a line-delimited recording into an Episode.

    Raises ParseError (with line number) on malformed lines and
    SchemaError on non-monotone timestamps or empty input.
    """
    frames = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        frame = _parse_frame(line, line_no)
        if frames and frame.t <= frames[-1].t:
            raise SchemaError(
                f"line {line_no}: timestamp {frame.t} not strictly increasing "
                f"(previous {frames[-1].t})"
            )
        frames.append(frame)
    if not frames:
        raise SchemaError("recording contains no frames")
    return Episode(tuple(frames), fps=fps, source=source)


def _hand_json(h: Optional[HandSample]):
    if h is None:
        return None
    return {"p": list(h.position), "c": h.confidence}


def serialize_recording(ep: Episode, stream: IO[str]) -> None:
    """Write an episode in the recording line format (bit-exact round trip)."""
    for f in ep.frames:
        obj = {"t": f.t, "head": {"p": list(f.head.position),
                                  "q": list(f.head.orientation)}}
        if f.left_hand is not None:
            obj["lh"] = _hand_json(f.left_hand)
        if f.right_hand is not None:
            obj["rh"] = _hand_json(f.right_hand)
        stream.write(json.dumps(obj) + "\n")


def filter_confidence(ep: Episode) -> Episode:
    """Drop every frame where any present hand has confidence < 0.

    Data collectors may lift the glasses to reset a scene; those frames
    carry negative tracking confidence and are excluded.
    """
    kept = tuple(
        f for f in ep.frames
        if all(h.confidence >= 0.0 for h in f.hands())
    )
    # May be empty if every frame was excluded; callers must handle that.
    return Episode(kept, fps=ep.fps, source=ep.source)


def extract_waypoints(ep: Episode, d_thresh: float = DEFAULT_D_THRESH,
                      k_h: int = 10, forward_axis: str = "+x") -> WaypointTrack:
    """Greedy displacement-triggered waypoint extraction.

    The first frame is always a waypoint; afterwards a frame becomes one
    iff its planar distance from the most recent accepted waypoint is
    >= d_thresh. Yaw comes from ground projection of the head pose.
    """
    if not ep.frames:
        raise InvalidArgumentError("episode has no frames")
    waypoints = []
    last_xy = None
    for i, f in enumerate(ep.frames):
        x, y = f.head.position[0], f.head.position[1]
        if last_xy is None or math.hypot(x - last_xy[0], y - last_xy[1]) >= d_thresh:
            waypoints.append((i, project_to_ground(f.head, forward_axis)))
            last_xy = (x, y)
    return WaypointTrack(tuple(waypoints), d_thresh=d_thresh, k_h=k_h)


def egocentric_history(track: WaypointTrack, current: Pose2,
                       k_h: Optional[int] = None) -> list[Pose2]:
    """Last min(k_h, available) waypoints in the frame of ``current``, oldest first."""
    k = track.k_h if k_h is None else k_h
    if k < 1:
        raise InvalidArgumentError(f"k_h must be >= 1, got {k}")
    tail = track.waypoints[-k:]
    return [to_frame(current, pose) for _, pose in tail]


def fit_norm(values: Sequence[Sequence[float]], source: str = "human") -> NormStats:
    """Fit per-dimension z-score statistics (population std).

    Zero-variance dimensions get std clamped to 1 and are flagged, so
    normalization stays invertible on constant channels.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InvalidArgumentError("cannot fit normalization on empty input")
    if arr.ndim == 1:
        arr = arr[:, None]
    mean = arr.mean(axis=0)
    std = arr.std(axis=0)
    clamped = std == 0.0
    std = np.where(clamped, 1.0, std)
    return NormStats(mean, std, source, tuple(bool(c) for c in clamped))


def normalize(x, stats: NormStats) -> np.ndarray:
    return (np.asarray(x, dtype=float) - stats.mean) / stats.std


def denormalize(x, stats: NormStats) -> np.ndarray:
    return np.asarray(x, dtype=float) * stats.std + stats.mean
