"""Articulation model fitting and joint classification.

Works in pose space: given the part's poses relative to its anchor, find the
unit twist xi and per-pose magnitudes Theta_m minimizing

    sum_m | log( exp(Theta_m hat(xi))^-1  T_m ) |^2

by damped Gauss-Newton on the gauge-fixed twist chart. Classification fits
two models, one with the rotational part pinned to zero (prismatic) and one
free, and calls the joint revolute only when the free fit both shows enough
total rotation and beats the constrained fit's residual by a clear margin;
everything else is prismatic, the drawer-like default. The reported
unconstrained model is whichever of the two fits has the lower residual, so
the prismatic-constrained residual can never undercut it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientMotionError
from .lie import (
    RigidTransform,
    Twist,
    compose,
    exp_map,
    inverse,
    log_map,
    normalize_twist,
    retract_twist,
    rotation_angle,
    se3_adjoint,
    se3_left_jacobian,
    twist_gauge,
    twist_tangent_basis,
)
from .trajest import TrajectoryEstimate

log = logging.getLogger(__name__)

MIN_POSE_MOTION = 1e-6  # all poses closer than this to identity: nothing to fit
MAX_ITER = 100
COST_RTOL = 1e-12
DAMPING_INIT = 1e-3
DAMPING_MAX = 1e12
AXIS_OMEGA_MIN = 1e-9


@dataclass
class ClassifierConfig:
    theta_rot_min: float = 0.1  # rad of total rotation needed to call revolute
    trans_min: float = 0.02  # m of total translation for a confident prismatic call
    residual_margin: float = 0.2  # free fit must beat constrained by this fraction

    def __post_init__(self):
        if self.theta_rot_min <= 0 or self.trans_min <= 0:
            raise ValueError("theta_rot_min and trans_min must be positive")
        if not (0.0 <= self.residual_margin < 1.0):
            raise ValueError(f"residual_margin must be in [0, 1), got {self.residual_margin}")


@dataclass
class PoseTwistFit:
    twist: Twist  # normalized (|omega| = 1, or omega = 0 and |v| = 1)
    thetas: np.ndarray  # per-pose magnitudes, thetas[0] = 0
    rms: float  # tangent-space residual rms over poses 1..M
    gauge: str  # "revolute" or "prismatic"
    converged: bool


@dataclass
class ArticulationEstimate:
    joint_type: str  # "revolute" or "prismatic"
    axis_dir: np.ndarray  # unit vector
    axis_point: np.ndarray | None  # on the axis; revolute only
    twist: Twist
    thetas: np.ndarray  # rad (revolute) or m (prismatic), per pose
    pose_rms: float
    flags: list = field(default_factory=list)


def _pose_cost(poses, xi: Twist, thetas: np.ndarray) -> tuple[float, list]:
    cost = 0.0
    residuals = []
    for T, th in zip(poses[1:], thetas[1:]):
        r = log_map(compose(inverse(exp_map(xi, float(th))), T)).as_vector()
        residuals.append(r)
        cost += float(r @ r)
    return cost, residuals


def pose_fit_rms(poses, xi: Twist, thetas: np.ndarray) -> float:
    """Tangent-space residual rms of a (twist, thetas) model on given poses."""
    cost, _ = _pose_cost(poses, xi, thetas)
    return float(np.sqrt(cost / (len(poses) - 1)))


def _validate_poses(poses):
    if len(poses) < 2:
        raise ValueError(f"need at least 2 poses, got {len(poses)}")
    first = poses[0]
    if rotation_angle(first) > 1e-6 or np.linalg.norm(first.t) > 1e-6:
        raise ValueError("relative_poses[0] must be the identity")


def fit_twist_to_poses(poses, gauge: str = "auto") -> PoseTwistFit:
    """Fit a single normalized twist plus magnitudes to a pose sequence.

    ``gauge`` is "auto" (chart chosen from the data) or "prismatic" (omega
    pinned to zero). Raises InsufficientMotionError when every pose is within
    MIN_POSE_MOTION of the identity.
    """
    _validate_poses(poses)
    if gauge not in ("auto", "prismatic"):
        raise ValueError(f"gauge must be 'auto' or 'prismatic', got {gauge!r}")
    logs = np.array([log_map(T).as_vector() for T in poses])
    mags = np.linalg.norm(logs, axis=1)
    if float(mags.max()) <= MIN_POSE_MOTION:
        raise InsufficientMotionError(
            f"all poses within {MIN_POSE_MOTION} of identity; no articulation to fit"
        )
    seed = logs[int(np.argmax(mags))]
    if gauge == "prismatic":
        vpart = seed[3:]
        if np.linalg.norm(vpart) <= 0:
            # rotation-only motion: any direction is equally bad; pick a
            # deterministic one so the constrained fit still reports a residual
            vpart = np.array([1.0, 0.0, 0.0])
        xi = Twist(np.zeros(3), vpart / np.linalg.norm(vpart))
    else:
        xi, _ = normalize_twist(Twist.from_vector(seed))
    x = xi.as_vector()
    thetas = logs @ x / float(x @ x)
    thetas[0] = 0.0

    M = len(poses) - 1
    cost, _ = _pose_cost(poses, xi, thetas)
    lam = DAMPING_INIT
    converged = False
    for _ in range(MAX_ITER):
        B = twist_tangent_basis(xi)
        k = B.shape[1]
        xvec = xi.as_vector()
        JtJ = np.zeros((k + M, k + M))
        Jtr = np.zeros(k + M)
        for m in range(1, M + 1):
            th = float(thetas[m])
            u = th * xvec
            Tm = poses[m]
            r = log_map(compose(inverse(exp_map(xi, th)), Tm)).as_vector()
            # d r / d u = -Jr^-1(r) Ad(T^-1) Jl(u), u the folded twist coords
            Jr_inv = np.linalg.inv(se3_left_jacobian(-r))
            base = -Jr_inv @ se3_adjoint(inverse(Tm)) @ se3_left_jacobian(u)
            Jm = np.zeros((6, k + 1))
            Jm[:, :k] = base @ (th * B)
            Jm[:, k] = base @ xvec
            block = Jm.T @ Jm
            g = Jm.T @ r
            JtJ[:k, :k] += block[:k, :k]
            JtJ[:k, k + m - 1] += block[:k, k]
            JtJ[k + m - 1, :k] += block[k, :k]
            JtJ[k + m - 1, k + m - 1] += block[k, k]
            Jtr[:k] += g[:k]
            Jtr[k + m - 1] += g[k]
        accepted = False
        while lam <= DAMPING_MAX:
            try:
                delta = np.linalg.solve(JtJ + lam * np.eye(k + M), -Jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            xi_new = retract_twist(xi, delta[:k])
            thetas_new = thetas.copy()
            thetas_new[1:] += delta[k:]
            cost_new, _ = _pose_cost(poses, xi_new, thetas_new)
            if cost_new < cost:
                accepted = True
                lam = max(lam / 10.0, 1e-15)
                drop = cost - cost_new
                xi, thetas, cost = xi_new, thetas_new, cost_new
                if drop < COST_RTOL * max(cost, 1e-300) or cost == 0.0:
                    converged = True
                break
            lam *= 10.0
        if converged:
            break
        if not accepted:
            converged = cost == 0.0 or bool(
                np.linalg.norm(Jtr) <= 1e-12 * max(1.0, cost)
            )
            break
    if np.sum(thetas) < 0:
        thetas = -thetas
        xi = Twist(-xi.omega, -xi.v)
    if not converged:
        log.warning("pose twist fit did not converge within %d iterations", MAX_ITER)
    return PoseTwistFit(
        twist=xi,
        thetas=thetas,
        rms=float(np.sqrt(cost / M)),
        gauge=twist_gauge(xi),
        converged=converged,
    )


def fit_joint_models(poses) -> tuple[PoseTwistFit, PoseTwistFit]:
    """(unconstrained, prismatic-constrained) fits.

    The unconstrained model is the better-scoring of the free-gauge fit and
    the constrained fit, which guarantees rms_unconstrained <= rms_prismatic.
    """
    fit_p = fit_twist_to_poses(poses, gauge="prismatic")
    fit_a = fit_twist_to_poses(poses, gauge="auto")
    fit_u = fit_a if fit_a.rms <= fit_p.rms else fit_p
    return fit_u, fit_p


def total_rotation(fit: PoseTwistFit) -> float:
    """Peak rotational excursion of a fitted model, in radians."""
    if fit.gauge != "revolute":
        return 0.0
    return float(np.max(np.abs(fit.thetas)))


def total_translation(fit: PoseTwistFit) -> float:
    """Peak translational excursion along/about the fitted axis, in meters."""
    if fit.gauge == "prismatic":
        return float(np.max(np.abs(fit.thetas)))
    # screw motion: translation per unit theta is |v| projected off the orbit;
    # use the pitch component, which is what a drawer-like motion would show
    pitch = abs(float(fit.twist.omega @ fit.twist.v))
    return pitch * float(np.max(np.abs(fit.thetas)))


def classify_joint(twist: Twist, thetas: np.ndarray, poses, cfg: ClassifierConfig) -> str:
    """Revolute only with enough rotation AND a clear residual win over the
    prismatic-constrained fit; ties and sub-threshold motion are prismatic.
    """
    rms_u = pose_fit_rms(poses, twist, thetas)
    fit_p = fit_twist_to_poses(poses, gauge="prismatic")
    delta_rot = (
        float(np.max(np.abs(thetas))) if twist_gauge(twist) == "revolute" else 0.0
    )
    if delta_rot >= cfg.theta_rot_min and rms_u < (1.0 - cfg.residual_margin) * fit_p.rms:
        return "revolute"
    return "prismatic"


def extract_axis(twist: Twist, joint_type: str):
    """Axis direction (unit) and, for revolute joints, the axis point closest
    to the origin: p = omega x v / |omega|^2."""
    if joint_type == "revolute":
        n = float(np.linalg.norm(twist.omega))
        if n < AXIS_OMEGA_MIN:
            raise ValueError("revolute model with numerically zero omega")
        axis_dir = twist.omega / n
        axis_point = np.cross(twist.omega, twist.v) / (n * n)
        return axis_dir, axis_point
    if joint_type == "prismatic":
        n = float(np.linalg.norm(twist.v))
        if n <= 0:
            raise ValueError("prismatic model with zero direction")
        return twist.v / n, None
    raise ValueError(f"unknown joint type {joint_type!r}")


def build_articulation_estimate(
    trajectory: TrajectoryEstimate, cfg: ClassifierConfig
) -> ArticulationEstimate:
    """Classify and package the articulation model for one segment."""
    poses = trajectory.relative_poses
    fit_u, fit_p = fit_joint_models(poses)
    joint_type = classify_joint(fit_u.twist, fit_u.thetas, poses, cfg)
    chosen = fit_u if joint_type == "revolute" else fit_p
    axis_dir, axis_point = extract_axis(chosen.twist, joint_type)
    flags = list(trajectory.flags)
    if not chosen.converged:
        flags.append("non_converged")
    if total_rotation(fit_u) < cfg.theta_rot_min and total_translation(chosen) < cfg.trans_min:
        flags.append("low_motion")
    return ArticulationEstimate(
        joint_type=joint_type,
        axis_dir=axis_dir,
        axis_point=axis_point,
        twist=chosen.twist,
        thetas=chosen.thetas,
        pose_rms=chosen.rms,
        flags=flags,
    )
