"""Input data model: track files, pinhole lifting, world-frame transforms.

A track file carries, per frame, the camera pose (camera-to-world) and a hand
detection flag, plus a set of 2D point tracks with per-frame depth and
visibility. Units are meters, pixels, radians throughout; depth is along the
camera z axis. NaN depth is encoded as null on disk.

Schema (version 1)::

    {"version": 1,
     "units": {"length": "m"},
     "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": ..},
     "frames": [{"t": 0, "cam_pose": {"q": [w,x,y,z], "t": [x,y,z]}, "hand": false}, ...],
     "tracks": [{"id": 0, "uv": [[u,v], ...], "depth": [..|null, ...], "vis": [true, ...]}, ...]}

Validation errors name the offending field and index. A frame where
``vis`` is true must carry finite positive depth; depth beyond ``max_depth``
is legal in the file and is marked invalid at lift time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .errors import TrackFileError
from .lie import RigidTransform, apply

DEFAULT_MAX_DEPTH = 10.0  # meters; depth beyond this is treated as sensor junk


@dataclass
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"intrinsics.{name} must be finite, got {val}")
            setattr(self, name, val)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(d["fx"], d["fy"], d["cx"], d["cy"])


@dataclass
class Track:
    """One 2D point track over the whole sequence."""

    id: int
    uv: np.ndarray  # (T, 2) pixels
    depth: np.ndarray  # (T,) meters, NaN where invalid
    vis: np.ndarray  # (T,) bool


@dataclass
class Track3D:
    """A lifted track: per-frame 3D positions plus a validity mask."""

    positions: np.ndarray  # (T, 3) meters
    valid: np.ndarray  # (T,) bool


@dataclass
class SegmentTrack:
    """Per-segment working record for one track.

    ``valid`` is the observation mask (visible and lifted successfully); it is
    preserved through smoothing so estimation never treats interpolated
    positions as observations.
    """

    id: int
    uv: np.ndarray  # (T, 2)
    world: np.ndarray  # (T, 3)
    valid: np.ndarray  # (T,) bool


@dataclass
class TrackSet:
    """A full recording: intrinsics, per-frame poses + hand flag, tracks."""

    intrinsics: CameraIntrinsics
    cam_poses: list = field(default_factory=list)  # list[RigidTransform], camera-to-world
    hand: np.ndarray = None  # (T,) bool
    tracks: list = field(default_factory=list)  # list[Track]

    @property
    def frame_count(self) -> int:
        return len(self.cam_poses)

    def slice(self, start: int, end: int) -> "TrackSet":
        """Copy of frames start..end inclusive; track ids are preserved."""
        if not (0 <= start <= end < self.frame_count):
            raise ValueError(f"slice [{start}, {end}] out of range for {self.frame_count} frames")
        sl = slice(start, end + 1)
        return TrackSet(
            intrinsics=self.intrinsics,
            cam_poses=self.cam_poses[sl],
            hand=self.hand[sl].copy(),
            tracks=[
                Track(tr.id, tr.uv[sl].copy(), tr.depth[sl].copy(), tr.vis[sl].copy())
                for tr in self.tracks
            ],
        )


# ---------------------------------------------------------------------------
# lifting and world transforms


def lift_to_3d(uv, depth: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Backproject one pixel with depth to camera coordinates.

    Requires finite positive depth; per-frame invalid handling lives in
    lift_track, which marks points invalid instead of raising.
    """
    if not np.isfinite(depth) or depth <= 0:
        raise ValueError(f"depth must be finite and positive, got {depth}")
    u, v = float(uv[0]), float(uv[1])
    x = (u - intrinsics.cx) * depth / intrinsics.fx
    y = (v - intrinsics.cy) * depth / intrinsics.fy
    return np.array([x, y, depth])


def project_to_2d(point, intrinsics: CameraIntrinsics) -> tuple[np.ndarray, float]:
    """Pinhole projection of a camera-frame point; returns (uv, depth)."""
    p = np.asarray(point, dtype=float)
    if p[2] <= 0:
        raise ValueError(f"point must be in front of the camera, got z={p[2]}")
    u = intrinsics.fx * p[0] / p[2] + intrinsics.cx
    v = intrinsics.fy * p[1] / p[2] + intrinsics.cy
    return np.array([u, v]), float(p[2])


def lift_track(track: Track, intrinsics: CameraIntrinsics, max_depth: float = DEFAULT_MAX_DEPTH) -> Track3D:
    """Backproject a whole track to camera coordinates.

    A frame is valid when it is visible and its depth is finite, positive and
    at most ``max_depth``; invalid frames get NaN positions, not an exception.
    """
    depth = track.depth
    ok = track.vis & np.isfinite(depth) & (depth > 0) & (depth <= max_depth)
    T = len(depth)
    pos = np.full((T, 3), np.nan)
    if np.any(ok):
        d = depth[ok]
        pos[ok, 0] = (track.uv[ok, 0] - intrinsics.cx) * d / intrinsics.fx
        pos[ok, 1] = (track.uv[ok, 1] - intrinsics.cy) * d / intrinsics.fy
        pos[ok, 2] = d
    return Track3D(pos, ok)


def to_world(track3d: Track3D, cam_poses) -> Track3D:
    """Map camera-frame positions to world coordinates with per-frame poses."""
    if len(cam_poses) != len(track3d.positions):
        raise ValueError(
            f"pose count {len(cam_poses)} != frame count {len(track3d.positions)}"
        )
    out = np.full_like(track3d.positions, np.nan)
    for t, pose in enumerate(cam_poses):
        if track3d.valid[t]:
            out[t] = apply(pose, track3d.positions[t])
    return Track3D(out, track3d.valid.copy())


# ---------------------------------------------------------------------------
# file IO


def _require(cond: bool, where: str, msg: str):
    if not cond:
        raise TrackFileError(f"{where}: {msg}")


def _as_number(x, where: str) -> float:
    _require(isinstance(x, (int, float)) and not isinstance(x, bool), where, f"expected a number, got {x!r}")
    val = float(x)
    _require(np.isfinite(val), where, f"expected a finite number, got {x!r}")
    return val


def load_trackset(path) -> TrackSet:
    """Load and validate a track file; errors name field and index."""
    doc = jsonio.load_json(path)
    where = str(path)
    _require(isinstance(doc, dict), where, "top level must be an object")
    _require(doc.get("version") == 1, where, f"version must be 1, got {doc.get('version')!r}")
    units = doc.get("units", {})
    if units:
        _require(units.get("length", "m") == "m", f"{where}.units", "length unit must be 'm'")

    _require("intrinsics" in doc, where, "missing intrinsics")
    K = doc["intrinsics"]
    for key in ("fx", "fy", "cx", "cy"):
        _require(key in K, f"{where}.intrinsics", f"missing {key}")
        _as_number(K[key], f"{where}.intrinsics.{key}")
    try:
        intr = CameraIntrinsics.from_dict(K)
    except ValueError as e:
        raise TrackFileError(f"{where}.intrinsics: {e}") from e

    frames = doc.get("frames")
    _require(isinstance(frames, list) and frames, where, "frames must be a non-empty list")
    poses = []
    hand = np.zeros(len(frames), dtype=bool)
    for i, fr in enumerate(frames):
        w = f"{where}.frames[{i}]"
        _require(isinstance(fr, dict), w, "must be an object")
        _require(fr.get("t") == i, w, f"t must equal the frame index {i}, got {fr.get('t')!r}")
        cp = fr.get("cam_pose")
        _require(isinstance(cp, dict) and "q" in cp and "t" in cp, w, "cam_pose must carry q and t")
        q = cp["q"]
        tt = cp["t"]
        _require(isinstance(q, list) and len(q) == 4, f"{w}.cam_pose.q", "must be a 4-list [w,x,y,z]")
        _require(isinstance(tt, list) and len(tt) == 3, f"{w}.cam_pose.t", "must be a 3-list")
        qv = [_as_number(x, f"{w}.cam_pose.q[{j}]") for j, x in enumerate(q)]
        tv = [_as_number(x, f"{w}.cam_pose.t[{j}]") for j, x in enumerate(tt)]
        try:
            poses.append(RigidTransform(np.array(qv), np.array(tv)))
        except ValueError as e:
            raise TrackFileError(f"{w}.cam_pose: {e}") from e
        _require(isinstance(fr.get("hand"), bool), f"{w}.hand", "must be a boolean")
        hand[i] = fr["hand"]

    T = len(frames)
    raw_tracks = doc.get("tracks")
    _require(isinstance(raw_tracks, list), where, "tracks must be a list")
    tracks = []
    seen_ids = set()
    for k, tr in enumerate(raw_tracks):
        w = f"{where}.tracks[{k}]"
        _require(isinstance(tr, dict), w, "must be an object")
        tid = tr.get("id")
        _require(isinstance(tid, int) and not isinstance(tid, bool), f"{w}.id", "must be an integer")
        _require(tid not in seen_ids, f"{w}.id", f"duplicate track id {tid}")
        seen_ids.add(tid)
        uv = tr.get("uv")
        depth = tr.get("depth")
        vis = tr.get("vis")
        for name, arr in (("uv", uv), ("depth", depth), ("vis", vis)):
            _require(isinstance(arr, list), f"{w}.{name}", "must be a list")
            _require(len(arr) == T, f"{w}.{name}", f"length {len(arr)} != frame count {T}")
        uv_arr = np.zeros((T, 2))
        for t, pt in enumerate(uv):
            _require(isinstance(pt, list) and len(pt) == 2, f"{w}.uv[{t}]", "must be a [u, v] pair")
            uv_arr[t, 0] = _as_number(pt[0], f"{w}.uv[{t}][0]")
            uv_arr[t, 1] = _as_number(pt[1], f"{w}.uv[{t}][1]")
        vis_arr = np.zeros(T, dtype=bool)
        for t, b in enumerate(vis):
            _require(isinstance(b, bool), f"{w}.vis[{t}]", f"must be a boolean, got {b!r}")
            vis_arr[t] = b
        depth_arr = np.full(T, np.nan)
        for t, d in enumerate(depth):
            if d is None:
                continue
            _require(isinstance(d, (int, float)) and not isinstance(d, bool), f"{w}.depth[{t}]", f"expected a number or null, got {d!r}")
            depth_arr[t] = float(d)
        bad = vis_arr & ~(np.isfinite(depth_arr) & (depth_arr > 0))
        if np.any(bad):
            t = int(np.flatnonzero(bad)[0])
            raise TrackFileError(
                f"{w}.depth[{t}]: frame is visible but depth is {depth[t]!r}; "
                "visible frames require finite positive depth"
            )
        tracks.append(Track(tid, uv_arr, depth_arr, vis_arr))

    return TrackSet(intrinsics=intr, cam_poses=poses, hand=hand, tracks=tracks)


def save_trackset(path, ts: TrackSet) -> None:
    """Write a track file; load(save(x)) reproduces x exactly."""
    doc = {
        "version": 1,
        "units": {"length": "m"},
        "intrinsics": ts.intrinsics.to_dict(),
        "frames": [
            {"t": i, "cam_pose": ts.cam_poses[i].to_dict(), "hand": bool(ts.hand[i])}
            for i in range(ts.frame_count)
        ],
        "tracks": [
            {
                "id": int(tr.id),
                "uv": [[float(u), float(v)] for u, v in tr.uv],
                "depth": jsonio.floats_or_null(tr.depth),
                "vis": [bool(b) for b in tr.vis],
            }
            for tr in ts.tracks
        ],
    }
    jsonio.dump_json(path, doc)
