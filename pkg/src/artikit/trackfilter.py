"""Track filters: static background, unreliable tracks, registration outliers.

All filters return (kept, removed) lists that preserve input order and
partition the input. The static filter is a rank split: scores are sorted
stably (ties keep input order) and the lowest floor(p/100 * N) are removed;
at percentile 100 everything except the tracks tied at the maximum goes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientTracksError

MAD_FLOOR = 1e-9  # keeps the outlier bound meaningful when residuals are near-identical


@dataclass
class FilterConfig:
    sigma_static: float = 50.0  # percentile of motion scores removed as static
    static_mode: str = "image2d"  # "image2d" (pixel tracks) or "world3d"
    sigma_reliable: float = 0.5  # max tolerated fraction of unobserved frames
    outlier_k: float = 3.0  # MAD multiplier for the residual gate

    def __post_init__(self):
        if not (0.0 <= self.sigma_static <= 100.0):
            raise ValueError(f"sigma_static must be in [0, 100], got {self.sigma_static}")
        if self.static_mode not in ("image2d", "world3d"):
            raise ValueError(f"static_mode must be 'image2d' or 'world3d', got {self.static_mode!r}")
        if not (0.0 <= self.sigma_reliable <= 1.0):
            raise ValueError(f"sigma_reliable must be in [0, 1], got {self.sigma_reliable}")
        if self.outlier_k < 0:
            raise ValueError(f"outlier_k must be >= 0, got {self.outlier_k}")


def motion_score(track, mode: str) -> float:
    """Total positional variance over observed frames (sum of per-axis variances).

    Tracks with fewer than two observations score zero: they carry no motion
    evidence and fall with the static background.
    """
    coords = track.uv if mode == "image2d" else track.world
    pts = coords[track.valid]
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.var(pts, axis=0)))


def filter_static(tracks, cfg: FilterConfig) -> tuple[list, list]:
    """Drop the least-moving fraction of tracks (background suppression)."""
    n = len(tracks)
    if n == 0:
        raise ValueError("filter_static requires at least one track")
    scores = np.array([motion_score(tr, cfg.static_mode) for tr in tracks])
    if cfg.sigma_static >= 100.0:
        k = n - int(np.sum(scores == scores.max()))
    else:
        k = math.floor(cfg.sigma_static / 100.0 * n)
    order = np.argsort(scores, kind="stable")
    removed_idx = set(int(i) for i in order[:k])
    kept = [tr for i, tr in enumerate(tracks) if i not in removed_idx]
    removed = [tr for i, tr in enumerate(tracks) if i in removed_idx]
    return kept, removed


def filter_unreliable(tracks, cfg: FilterConfig) -> tuple[list, list]:
    """Drop tracks unobserved for more than sigma_reliable of the segment."""
    kept, removed = [], []
    for tr in tracks:
        frac = 1.0 - float(np.mean(tr.valid))
        (removed if frac > cfg.sigma_reliable else kept).append(tr)
    return kept, removed


def filter_outliers(tracks, residuals: dict, cfg: FilterConfig) -> tuple[list, list]:
    """Drop tracks whose mean registration residual is median + k * MAD above
    the rest.

    ``residuals`` maps track id to the mean residual of an independent
    per-step rigid fit. A track that produced no correspondence pairs has no
    residual and is removed (it cannot support estimation either). Raises
    InsufficientTracksError when fewer than four tracks survive.
    """
    vals = np.array([residuals[tr.id] for tr in tracks if tr.id in residuals])
    if len(vals) == 0:
        raise InsufficientTracksError("no tracks carry registration residuals")
    med = float(np.median(vals))
    mad = float(np.median(np.abs(vals - med)))
    bound = med + cfg.outlier_k * max(mad, MAD_FLOOR)
    kept, removed = [], []
    for tr in tracks:
        r = residuals.get(tr.id)
        (kept if r is not None and r <= bound else removed).append(tr)
    if len(kept) < 4:
        raise InsufficientTracksError(
            f"only {len(kept)} tracks survive outlier filtering; need at least 4"
        )
    return kept, removed
