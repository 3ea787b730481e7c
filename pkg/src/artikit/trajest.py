"""Part trajectory estimation from smoothed world-frame tracks.

Correspondences pair keyframes a fixed stride apart; a track contributes a
pair only where it was actually observed at both endpoints (smoothing fills
gaps for the fidelity term, it does not manufacture observations).

Two estimators share the correspondence structure:

* ``fit_independent``: one closed-form rigid transform per step (SVD
  registration with a reflection guard),
* ``fit_regularized``: all steps constrained to powers of a single unit
  twist, ``Delta_m = exp(theta_m * hat(xi))``, solved by damped Gauss-Newton
  over the gauge-fixed twist chart plus the per-step magnitudes, with
  analytic Jacobians of the exp-map point action.

Step transforms are world-frame displacement fields and chain by left
multiplication; poses are reported both in world coordinates and relative to
an anchor placed at the centroid of the part's first observed positions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, DegenerateStepError, InsufficientMotionError
from .lie import (
    RigidTransform,
    Twist,
    apply,
    compose,
    exp_map,
    inverse,
    log_map,
    normalize_twist,
    retract_twist,
    se3_left_jacobian,
    twist_gauge,
    twist_tangent_basis,
)

log = logging.getLogger(__name__)

DEFAULT_STRIDE = 2
MIN_PAIRS_PER_STEP = 3
COLLINEARITY_RTOL = 1e-9  # middle singular value below this fraction of the largest
MIN_MOTION = 1e-6  # meters of peak point displacement required to fit
MAX_ITER = 100
COST_RTOL = 1e-12  # relative cost decrease that counts as converged
DAMPING_INIT = 1e-3
DAMPING_MAX = 1e12


@dataclass
class StepPairs:
    """Point pairs supporting one step: src at frame t, dst at frame t + stride."""

    src: np.ndarray  # (n, 3)
    dst: np.ndarray  # (n, 3)
    track_ids: np.ndarray  # (n,)
    weights: np.ndarray  # (n,), currently all ones


@dataclass
class CorrespondenceSet:
    steps: list  # list[StepPairs]
    stride: int
    keyframes: np.ndarray  # (M+1,) frame indices

    @property
    def step_count(self) -> int:
        return len(self.steps)


@dataclass
class TrajectoryEstimate:
    """Per-step transforms plus integrated poses and fit diagnostics.

    ``base_twist``/``thetas`` are populated by the regularized estimator only.
    ``relative_poses[0]`` is the identity; ``world_poses[0]`` is the anchor.
    """

    mode: str
    step_transforms: list  # list[RigidTransform], length M
    anchor: RigidTransform
    world_poses: list  # list[RigidTransform], length M+1
    relative_poses: list  # list[RigidTransform], length M+1
    rms_residual: float
    per_track_residuals: dict  # track id -> mean pair residual (m)
    base_twist: Twist | None = None
    thetas: np.ndarray | None = None
    converged: bool = True
    flags: list = field(default_factory=list)


def build_correspondences(tracks, stride: int = DEFAULT_STRIDE) -> CorrespondenceSet:
    """Collect observed point pairs at keyframes 0, stride, 2*stride, ...

    ``tracks`` is a list of SegmentTrack-like records with ``world``,
    ``valid`` and ``id``. Raises DegenerateStepError naming the first step
    with fewer than MIN_PAIRS_PER_STEP pairs.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if not tracks:
        raise ValueError("no tracks to build correspondences from")
    T = len(tracks[0].world)
    keyframes = np.arange(0, T, stride)
    if len(keyframes) < 2:
        raise DegenerateStepError(
            f"segment of {T} frames yields no steps at stride {stride}"
        )
    steps = []
    for m in range(len(keyframes) - 1):
        t0, t1 = int(keyframes[m]), int(keyframes[m + 1])
        src, dst, ids = [], [], []
        for tr in tracks:
            if tr.valid[t0] and tr.valid[t1]:
                src.append(tr.world[t0])
                dst.append(tr.world[t1])
                ids.append(tr.id)
        if len(src) < MIN_PAIRS_PER_STEP:
            raise DegenerateStepError(
                f"step {m} (frames {t0}->{t1}) has {len(src)} pairs; "
                f"need at least {MIN_PAIRS_PER_STEP}"
            )
        steps.append(
            StepPairs(
                np.array(src), np.array(dst), np.array(ids), np.ones(len(src))
            )
        )
    return CorrespondenceSet(steps=steps, stride=stride, keyframes=keyframes)


# ---------------------------------------------------------------------------
# closed-form per-step registration


def register_rigid(src: np.ndarray, dst: np.ndarray) -> RigidTransform:
    """Least-squares rigid transform with dst ~= R @ src + t.

    Cross-covariance SVD with a determinant guard against reflections.
    Raises DegenerateGeometryError for (near-)collinear configurations,
    where the rotation about the point line is unobservable.
    """
    if len(src) < MIN_PAIRS_PER_STEP:
        raise DegenerateStepError(f"need >= {MIN_PAIRS_PER_STEP} pairs, got {len(src)}")
    cs = src.mean(axis=0)
    cd = dst.mean(axis=0)
    H = (src - cs).T @ (dst - cd)
    U, S, Vt = np.linalg.svd(H)
    if S[1] <= COLLINEARITY_RTOL * S[0]:
        raise DegenerateGeometryError(
            f"point pairs are near-collinear (singular values {S.tolist()})"
        )
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    return RigidTransform.from_matrix(R, cd - R @ cs)


def _residual_stats(corr: CorrespondenceSet, transforms) -> tuple[float, dict]:
    """Residual RMS over all pairs plus per-track mean residual."""
    total = 0.0
    count = 0
    sums: dict = {}
    counts: dict = {}
    for step, T in zip(corr.steps, transforms):
        r = step.dst - apply(T, step.src)
        norms = np.linalg.norm(r, axis=1)
        total += float(np.sum(norms * norms))
        count += len(norms)
        for tid, nr in zip(step.track_ids, norms):
            tid = int(tid)
            sums[tid] = sums.get(tid, 0.0) + float(nr)
            counts[tid] = counts.get(tid, 0) + 1
    rms = float(np.sqrt(total / count)) if count else 0.0
    per_track = {tid: sums[tid] / counts[tid] for tid in sums}
    return rms, per_track


def integrate_poses(step_transforms, anchor_points: np.ndarray):
    """Chain step transforms into world poses from an anchor.

    The anchor has identity rotation and sits at the centroid of
    ``anchor_points`` (the part's observed first-keyframe positions). World
    poses chain by left multiplication, T_{m} = Delta_m @ T_{m-1}; relative
    poses are T_anchor^-1 @ T_m with the first pinned to the identity.
    """
    pts = np.asarray(anchor_points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] != 3:
        raise ValueError(f"anchor_points must be (n, 3) with n >= 1, got {pts.shape}")
    anchor = RigidTransform(np.array([1.0, 0.0, 0.0, 0.0]), pts.mean(axis=0))
    world = [anchor]
    for delta in step_transforms:
        world.append(compose(delta, world[-1]))
    inv_anchor = inverse(anchor)
    relative = [RigidTransform.identity()]
    for T in world[1:]:
        relative.append(compose(inv_anchor, T))
    return anchor, world, relative


def choose_anchor(tracks) -> tuple[np.ndarray, int, bool]:
    """Observed positions at the earliest observed frame.

    Returns (points, frame index, fell_back); fell_back is True when frame 0
    had no observations and a later frame anchors the trajectory.
    """
    T = len(tracks[0].world)
    for t in range(T):
        pts = [tr.world[t] for tr in tracks if tr.valid[t]]
        if pts:
            return np.array(pts), t, t != 0
    raise ValueError("no observed positions in any frame")


def fit_independent(corr: CorrespondenceSet, anchor_points=None) -> TrajectoryEstimate:
    """One unconstrained rigid transform per step."""
    transforms = [register_rigid(s.src, s.dst) for s in corr.steps]
    rms, per_track = _residual_stats(corr, transforms)
    if anchor_points is None:
        anchor_points = corr.steps[0].src
    anchor, world, relative = integrate_poses(transforms, anchor_points)
    return TrajectoryEstimate(
        mode="independent",
        step_transforms=transforms,
        anchor=anchor,
        world_poses=world,
        relative_poses=relative,
        rms_residual=rms,
        per_track_residuals=per_track,
    )


# ---------------------------------------------------------------------------
# regularized joint fit


def _pair_cost(corr: CorrespondenceSet, xi: Twist, thetas: np.ndarray) -> float:
    c = 0.0
    for step, th in zip(corr.steps, thetas):
        r = step.dst - apply(exp_map(xi, th), step.src)
        c += float(np.sum(r * r))
    return c


def _init_from_steps(corr: CorrespondenceSet) -> tuple[Twist, np.ndarray]:
    """Seed the shared twist from per-step registration logs.

    Logs are sign-aligned against the largest step, averaged with pair-count
    weights, normalized; magnitudes come from least-squares projection onto
    the seed.
    """
    etas = []
    weights = []
    for step in corr.steps:
        G = register_rigid(step.src, step.dst)
        etas.append(log_map(G).as_vector())
        weights.append(float(len(step.src)))
    etas = np.array(etas)
    norms = np.linalg.norm(etas, axis=1)
    ref = etas[int(np.argmax(norms))]
    signs = np.where(etas @ ref < 0, -1.0, 1.0)
    mean = (signs[:, None] * etas * np.array(weights)[:, None]).sum(axis=0) / sum(weights)
    xi0, _ = normalize_twist(Twist.from_vector(mean))
    x = xi0.as_vector()
    thetas0 = etas @ x / float(x @ x)
    return xi0, thetas0


def fit_regularized(corr: CorrespondenceSet, anchor_points=None) -> TrajectoryEstimate:
    """Joint fit of a single unit twist and per-step magnitudes.

    Minimizes sum_m sum_j |dst_mj - exp(theta_m hat(xi)) src_mj|^2 with xi
    confined to the normalized-twist gauge. Levenberg-damped Gauss-Newton;
    non-convergence within MAX_ITER returns the best iterate flagged
    ``non_converged``.
    """
    peak = max(
        float(np.max(np.linalg.norm(s.dst - s.src, axis=1))) for s in corr.steps
    )
    if peak <= MIN_MOTION:
        raise InsufficientMotionError(
            f"peak point displacement {peak:.3e} m is below {MIN_MOTION} m"
        )
    xi, thetas = _init_from_steps(corr)
    M = corr.step_count
    cost = _pair_cost(corr, xi, thetas)
    lam = DAMPING_INIT
    converged = False
    for _ in range(MAX_ITER):
        B = twist_tangent_basis(xi)
        k = B.shape[1]
        xvec = xi.as_vector()
        JtJ = np.zeros((k + M, k + M))
        Jtr = np.zeros(k + M)
        for m, step in enumerate(corr.steps):
            th = float(thetas[m])
            Tm = exp_map(xi, th)
            y = apply(Tm, step.src)  # (n, 3)
            r = step.dst - y
            Jl = se3_left_jacobian(th * xvec)
            C = Jl @ (th * B)  # (6, k): tangent motion per chart coordinate
            n = len(y)
            Jm = np.zeros((n, 3, k + 1))
            for j in range(k):
                # dy = tau_w x y + tau_v per chart direction
                Jm[:, :, j] = -(np.cross(C[:3, j], y) + C[3:, j])
            # d/dtheta exp(theta xi) p = omega x y + v exactly
            Jm[:, :, k] = -(np.cross(xvec[:3], y) + xvec[3:])
            Jm_flat = Jm.reshape(3 * n, k + 1)
            r_flat = r.reshape(3 * n)
            block = Jm_flat.T @ Jm_flat
            g = Jm_flat.T @ r_flat
            JtJ[:k, :k] += block[:k, :k]
            JtJ[:k, k + m] += block[:k, k]
            JtJ[k + m, :k] += block[k, :k]
            JtJ[k + m, k + m] += block[k, k]
            Jtr[:k] += g[:k]
            Jtr[k + m] += g[k]
        accepted = False
        while lam <= DAMPING_MAX:
            try:
                delta = np.linalg.solve(JtJ + lam * np.eye(k + M), -Jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            xi_new = retract_twist(xi, delta[:k])
            thetas_new = thetas + delta[k:]
            cost_new = _pair_cost(corr, xi_new, thetas_new)
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
            # no productive step at any damping: converged if the gradient is
            # numerically flat, otherwise flag the best iterate
            converged = cost == 0.0 or bool(
                np.linalg.norm(Jtr) <= 1e-12 * max(1.0, cost)
            )
            break
    if np.sum(thetas) < 0:
        thetas = -thetas
        xi = Twist(-xi.omega, -xi.v)
    flags = []
    if not converged:
        flags.append("non_converged")
        log.warning("regularized fit did not converge within %d iterations", MAX_ITER)
    transforms = [exp_map(xi, float(t)) for t in thetas]
    rms, per_track = _residual_stats(corr, transforms)
    if anchor_points is None:
        anchor_points = corr.steps[0].src
    anchor, world, relative = integrate_poses(transforms, anchor_points)
    return TrajectoryEstimate(
        mode="regularized",
        step_transforms=transforms,
        anchor=anchor,
        world_poses=world,
        relative_poses=relative,
        rms_residual=rms,
        per_track_residuals=per_track,
        base_twist=xi,
        thetas=thetas,
        converged=converged,
        flags=flags,
    )
