"""Synthetic scene generator with exact articulation ground truth.

Scenes script a single 1-DoF joint: dynamic points ride the screw motion
exp(theta_t * hat(xi)) of a known axis, static points stay put, and a camera
moves along a scripted path. Points are corrupted with 3D Gaussian noise
BEFORE projection, so stored depth and pixel coordinates stay consistent
with one noisy 3D point; occlusion and invalid-depth dropouts clear the
visibility flag (a frame written as visible always carries usable depth).

Determinism: all randomness flows through one numpy Generator seeded with
``cfg.seed`` (PCG64, identical streams across platforms), drawn in a fixed
documented order: dynamic base points, static points, then per-frame noise,
occlusion and depth dropouts in track-major order. Identical configs produce
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .errors import TrackFileError
from .lie import RigidTransform, Twist, apply, exp_map, inverse, matrix_to_quat
from .trackio import CameraIntrinsics, Track, TrackSet, project_to_2d

DEFAULT_INTRINSICS = CameraIntrinsics(fx=525.0, fy=525.0, cx=320.0, cy=240.0)


@dataclass
class JointSpec:
    """The scripted joint: type, axis, and per-frame configuration theta_t."""

    joint_type: str  # "revolute" or "prismatic"
    axis_dir: np.ndarray  # unit direction
    motion_profile: np.ndarray  # (T,) rad or m, configuration per frame
    axis_point: np.ndarray | None = None  # required for revolute

    def __post_init__(self):
        if self.joint_type not in ("revolute", "prismatic"):
            raise ValueError(f"joint_type must be revolute or prismatic, got {self.joint_type!r}")
        self.axis_dir = np.asarray(self.axis_dir, dtype=float)
        n = np.linalg.norm(self.axis_dir)
        if n <= 0:
            raise ValueError("axis_dir must be nonzero")
        self.axis_dir = self.axis_dir / n
        self.motion_profile = np.asarray(self.motion_profile, dtype=float)
        if self.joint_type == "revolute":
            if self.axis_point is None:
                raise ValueError("revolute joints need an axis_point")
            self.axis_point = np.asarray(self.axis_point, dtype=float)

    def twist(self) -> Twist:
        """World-frame unit twist of the joint."""
        if self.joint_type == "revolute":
            return Twist(self.axis_dir, -np.cross(self.axis_dir, self.axis_point))
        return Twist(np.zeros(3), self.axis_dir)


@dataclass
class SynthConfig:
    seed: int
    joint: JointSpec
    camera_path: list  # list[RigidTransform], camera-to-world, length T
    n_dynamic: int = 48
    n_static: int = 20
    noise_sigma: float = 0.0  # m, isotropic 3D
    occlusion_rate: float = 0.0
    invalid_depth_rate: float = 0.0
    hand_window: tuple = None  # (start, end) inclusive; defaults to full range
    intrinsics: CameraIntrinsics = field(default_factory=lambda: DEFAULT_INTRINSICS)
    part_center: np.ndarray | None = None  # dynamic point cloud center at theta=0
    part_extent: float = 0.5  # m, cube edge for dynamic points
    scene_center: np.ndarray | None = None  # static background center
    scene_extent: float = 1.6

    def __post_init__(self):
        T = len(self.camera_path)
        if len(self.joint.motion_profile) != T:
            raise ValueError(
                f"motion_profile length {len(self.joint.motion_profile)} != camera path length {T}"
            )
        if self.n_dynamic < 1:
            raise ValueError("need at least one dynamic point")
        for name in ("noise_sigma",):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("occlusion_rate", "invalid_depth_rate"):
            if not (0.0 <= getattr(self, name) < 1.0):
                raise ValueError(f"{name} must be in [0, 1)")
        if self.hand_window is None:
            self.hand_window = (0, T - 1)
        s, e = self.hand_window
        if not (0 <= s <= e < T):
            raise ValueError(f"hand_window {self.hand_window} out of range for {T} frames")
        if self.part_center is None:
            if self.joint.joint_type == "revolute":
                # offset off the axis so points actually move
                self.part_center = self.joint.axis_point + 0.45 * _any_perpendicular(
                    self.joint.axis_dir
                )
            else:
                self.part_center = np.array([0.0, 0.0, 1.2])
        self.part_center = np.asarray(self.part_center, dtype=float)
        if self.scene_center is None:
            self.scene_center = self.part_center
        self.scene_center = np.asarray(self.scene_center, dtype=float)

    @property
    def frame_count(self) -> int:
        return len(self.camera_path)


@dataclass
class GroundTruthJoint:
    segment: tuple  # (start, end) inclusive
    joint_type: str
    axis_dir: np.ndarray
    axis_point: np.ndarray | None

    def to_dict(self) -> dict:
        return {
            "segment": {"start": int(self.segment[0]), "end": int(self.segment[1])},
            "type": self.joint_type,
            "axis_dir": [float(x) for x in self.axis_dir],
            "axis_point": None
            if self.axis_point is None
            else [float(x) for x in self.axis_point],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruthJoint":
        return cls(
            segment=(int(d["segment"]["start"]), int(d["segment"]["end"])),
            joint_type=d["type"],
            axis_dir=np.asarray(d["axis_dir"], dtype=float),
            axis_point=None if d.get("axis_point") is None else np.asarray(d["axis_point"], dtype=float),
        )


def _any_perpendicular(n: np.ndarray) -> np.ndarray:
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    p = np.cross(n, e)
    return p / np.linalg.norm(p)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n roughly uniform unit vectors (golden-angle spiral)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * (math.pi * (3.0 - math.sqrt(5.0)))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def ramp_profile(T: int, window: tuple, magnitude: float) -> np.ndarray:
    """Smoothstep ramp from 0 to ``magnitude`` across ``window``, flat outside."""
    s, e = window
    if not (0 <= s < e < T):
        raise ValueError(f"window {window} invalid for {T} frames")
    t = np.arange(T, dtype=float)
    x = np.clip((t - s) / (e - s), 0.0, 1.0)
    return magnitude * (3.0 * x * x - 2.0 * x * x * x)


def look_at_pose(eye, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """Camera-to-world pose with +z looking from ``eye`` toward ``target``."""
    eye = np.asarray(eye, dtype=float)
    f = np.asarray(target, dtype=float) - eye
    nf = np.linalg.norm(f)
    if nf <= 0:
        raise ValueError("eye and target coincide")
    f = f / nf
    upv = np.asarray(up, dtype=float)
    r = np.cross(f, upv)
    nr = np.linalg.norm(r)
    if nr < 1e-9:
        # forward parallel to up; fall back to another support vector
        upv = np.array([0.0, 1.0, 0.0])
        r = np.cross(f, upv)
        nr = np.linalg.norm(r)
    r = r / nr
    d = np.cross(f, r)  # completes a right-handed (right, down, forward) frame
    R = np.stack([r, d, f], axis=1)
    return RigidTransform(matrix_to_quat(R), eye)


def arc_camera_path(
    T: int,
    target,
    radius: float = 2.2,
    height: float = 0.3,
    sweep_deg: float = 25.0,
    start_deg: float = 200.0,
) -> list:
    """Camera orbiting the target over a modest arc, always looking at it."""
    target = np.asarray(target, dtype=float)
    angles = np.deg2rad(start_deg + np.linspace(0.0, sweep_deg, T))
    poses = []
    for a in angles:
        eye = target + np.array([radius * np.cos(a), radius * np.sin(a), height])
        poses.append(look_at_pose(eye, target))
    return poses


def generate(cfg: SynthConfig) -> tuple[TrackSet, list]:
    """Render a scene to a TrackSet plus its ground-truth joint list."""
    rng = np.random.default_rng(cfg.seed)
    T = cfg.frame_count
    xi = cfg.joint.twist()

    base_dynamic = cfg.part_center + rng.uniform(
        -0.5 * cfg.part_extent, 0.5 * cfg.part_extent, size=(cfg.n_dynamic, 3)
    )
    static_pts = cfg.scene_center + rng.uniform(
        -0.5 * cfg.scene_extent, 0.5 * cfg.scene_extent, size=(cfg.n_static, 3)
    )

    n_total = cfg.n_dynamic + cfg.n_static
    uv = np.zeros((n_total, T, 2))
    depth = np.full((n_total, T), np.nan)
    vis = np.zeros((n_total, T), dtype=bool)

    world = np.zeros((n_total, T, 3))
    for t in range(T):
        moved = apply(exp_map(xi, float(cfg.joint.motion_profile[t])), base_dynamic)
        world[: cfg.n_dynamic, t] = moved
        world[cfg.n_dynamic :, t] = static_pts

    # per-frame corruption, track-major order inside each frame
    for t in range(T):
        cam_inv = inverse(cfg.camera_path[t])
        for i in range(n_total):
            p = world[i, t]
            if cfg.noise_sigma > 0:
                p = p + rng.normal(0.0, cfg.noise_sigma, size=3)
            p_cam = apply(cam_inv, p)
            visible = p_cam[2] > 1e-6
            if visible:
                uv_t, z = project_to_2d(p_cam, cfg.intrinsics)
                uv[i, t] = uv_t
                depth[i, t] = z
            if cfg.occlusion_rate > 0 and rng.random() < cfg.occlusion_rate:
                visible = False
            if cfg.invalid_depth_rate > 0 and rng.random() < cfg.invalid_depth_rate:
                visible = False
                depth[i, t] = np.nan
            vis[i, t] = visible

    hand = np.zeros(T, dtype=bool)
    hand[cfg.hand_window[0] : cfg.hand_window[1] + 1] = True

    tracks = [
        Track(i, uv[i].copy(), depth[i].copy(), vis[i].copy()) for i in range(n_total)
    ]
    ts = TrackSet(
        intrinsics=cfg.intrinsics,
        cam_poses=list(cfg.camera_path),
        hand=hand,
        tracks=tracks,
    )
    gt = [
        GroundTruthJoint(
            segment=cfg.hand_window,
            joint_type=cfg.joint.joint_type,
            axis_dir=cfg.joint.axis_dir.copy(),
            axis_point=None
            if cfg.joint.joint_type == "prismatic"
            else cfg.joint.axis_point.copy(),
        )
    ]
    return ts, gt


# ---------------------------------------------------------------------------
# ground-truth file IO


def save_ground_truth(path, joints) -> None:
    jsonio.dump_json(path, [j.to_dict() for j in joints])


def load_ground_truth(path) -> list:
    doc = jsonio.load_json(path)
    if not isinstance(doc, list):
        raise TrackFileError(f"{path}: ground truth must be a list")
    out = []
    for i, d in enumerate(doc):
        try:
            out.append(GroundTruthJoint.from_dict(d))
        except (KeyError, TypeError) as e:
            raise TrackFileError(f"{path}[{i}]: {e}") from e
    return out


# ---------------------------------------------------------------------------
# config-from-dict (CLI scene files)


def config_from_dict(doc: dict) -> SynthConfig:
    """Build a SynthConfig from a scene description dictionary.

    Expected shape (see README for a full example)::

        {"seed": 0, "frames": 70,
         "joint": {"type": "revolute", "axis_dir": [..], "axis_point": [..],
                   "motion": {"kind": "ramp", "magnitude": 0.6}},
         "hand_window": [10, 55],
         "camera": {"kind": "arc", "radius": 2.2, "sweep_deg": 25.0},
         "n_dynamic": 48, "n_static": 20,
         "noise_sigma": 0.0, "occlusion_rate": 0.0, "invalid_depth_rate": 0.0}
    """
    try:
        T = int(doc["frames"])
        jd = doc["joint"]
        hand_window = tuple(int(x) for x in doc.get("hand_window", (0, T - 1)))
        motion = jd.get("motion", {})
        if "profile" in motion:
            profile = np.asarray(motion["profile"], dtype=float)
        else:
            profile = ramp_profile(T, hand_window, float(motion.get("magnitude", 0.5)))
        joint = JointSpec(
            joint_type=jd["type"],
            axis_dir=np.asarray(jd["axis_dir"], dtype=float),
            axis_point=None
            if jd.get("axis_point") is None
            else np.asarray(jd["axis_point"], dtype=float),
            motion_profile=profile,
        )
        cam = doc.get("camera", {"kind": "arc"})
        kind = cam.get("kind", "arc")
        if kind == "arc":
            target = cam.get("target")
            if target is None:
                target = (
                    joint.axis_point
                    if joint.axis_point is not None
                    else np.array([0.0, 0.0, 1.2])
                )
            path = arc_camera_path(
                T,
                target,
                radius=float(cam.get("radius", 2.2)),
                height=float(cam.get("height", 0.3)),
                sweep_deg=float(cam.get("sweep_deg", 25.0)),
                start_deg=float(cam.get("start_deg", 200.0)),
            )
        elif kind == "poses":
            path = [RigidTransform.from_dict(p) for p in cam["poses"]]
        else:
            raise ValueError(f"unknown camera kind {kind!r}")
        kwargs = {}
        for key in (
            "n_dynamic",
            "n_static",
            "noise_sigma",
            "occlusion_rate",
            "invalid_depth_rate",
            "part_extent",
            "scene_extent",
        ):
            if key in doc:
                kwargs[key] = doc[key]
        if "part_center" in doc:
            kwargs["part_center"] = np.asarray(doc["part_center"], dtype=float)
        if "intrinsics" in doc:
            kwargs["intrinsics"] = CameraIntrinsics.from_dict(doc["intrinsics"])
        return SynthConfig(
            seed=int(doc.get("seed", 0)),
            joint=joint,
            camera_path=path,
            hand_window=hand_window,
            **kwargs,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise TrackFileError(f"scene config: {e}") from e
