"""Interaction segmentation: smoothing, thresholding, duration bounds, IoU."""

import numpy as np
import pytest

from artikit.segmenter import (
    Segment,
    SegmenterConfig,
    extract_segments,
    match_segments,
    moving_average,
    segment_iou,
)


def naive_moving_average(signal, w_h):
    out = np.zeros(len(signal))
    for t in range(len(signal)):
        lo = max(t - w_h + 1, 0)
        out[t] = np.mean(signal[lo : t + 1])
    return out


def naive_runs(above):
    runs, start = [], None
    for t, f in enumerate(above):
        if f and start is None:
            start = t
        if not f and start is not None:
            runs.append((start, t - 1))
            start = None
    if start is not None:
        runs.append((start, len(above) - 1))
    return runs


def test_moving_average_matches_naive_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        sig = rng.random(rng.integers(1, 200))
        w = int(rng.integers(1, 12))
        assert np.allclose(moving_average(sig, w), naive_moving_average(sig, w), atol=1e-12)


def test_moving_average_warmup():
    sig = np.array([1.0, 0.0, 1.0, 1.0])
    out = moving_average(sig, 3)
    assert np.allclose(out, [1.0, 0.5, 2 / 3, 2 / 3])


def test_extract_boundaries_exact():
    # block of ones at 10..20 in 40 frames, w_h=6: the smoothed signal
    # reaches 3/6 at frame 12 and falls below after frame 23
    sig = np.zeros(40)
    sig[10:21] = 1.0
    cfg = SegmenterConfig(w_h=6, tau_h=0.5, t_min=1, t_max=90)
    segs = extract_segments(moving_average(sig, 6), cfg)
    assert segs == [Segment(12, 23)]


def test_extract_length_bounds_inclusive():
    cfg = SegmenterConfig(w_h=1, tau_h=0.5, t_min=3, t_max=5)
    sig = np.zeros(30)
    sig[0:2] = 1.0  # length 2: below t_min
    sig[5:8] = 1.0  # length 3: kept
    sig[12:17] = 1.0  # length 5: kept
    sig[20:26] = 1.0  # length 6: above t_max
    segs = extract_segments(sig, cfg)
    assert segs == [Segment(5, 7), Segment(12, 16)]


def test_extract_segment_at_signal_end():
    cfg = SegmenterConfig(w_h=1, tau_h=0.5, t_min=2, t_max=10)
    sig = np.zeros(10)
    sig[7:] = 1.0
    assert extract_segments(sig, cfg) == [Segment(7, 9)]


def test_extract_disjoint_sorted_property():
    rng = np.random.default_rng(1)
    cfg = SegmenterConfig(w_h=4, tau_h=0.5, t_min=2, t_max=50)
    for _ in range(50):
        sig = (rng.random(rng.integers(10, 300)) < 0.5).astype(float)
        sm = moving_average(sig, cfg.w_h)
        segs = extract_segments(sm, cfg)
        for a, b in zip(segs, segs[1:]):
            assert a.end < b.start
        # against the naive run scan
        expected = [
            Segment(s, e)
            for s, e in naive_runs(sm >= cfg.tau_h)
            if cfg.t_min <= e - s + 1 <= cfg.t_max
        ]
        assert segs == expected


def test_segment_length_and_validation():
    assert Segment(3, 3).length == 1
    assert Segment(0, 9).length == 10
    with pytest.raises(ValueError):
        Segment(5, 4)
    with pytest.raises(ValueError):
        Segment(-1, 4)


def test_iou_fixtures():
    assert segment_iou(Segment(10, 20), Segment(10, 20)) == 1.0
    assert segment_iou(Segment(10, 20), Segment(15, 25)) == 0.375
    assert segment_iou(Segment(0, 4), Segment(5, 9)) == 0.0
    assert segment_iou(Segment(0, 4), Segment(4, 9)) == 0.1


def test_match_requires_majority_overlap():
    # IoU exactly 0.5 must NOT match; strictly above must
    a, b = Segment(0, 9), Segment(5, 19)  # inter 5, union 20: 0.25
    assert match_segments([a], [b]) == []
    c, d = Segment(0, 9), Segment(0, 4)  # 0.5 exactly
    assert segment_iou(c, d) == 0.5
    assert match_segments([c], [d]) == []
    e, f = Segment(0, 9), Segment(0, 5)  # 0.6
    assert match_segments([e], [f]) == [(0, 0)]


def test_match_greedy_descending_one_to_one():
    preds = [Segment(0, 9), Segment(11, 20)]
    gts = [Segment(1, 10)]
    # pred 0 has the higher IoU and takes the only reference
    m = match_segments(preds, gts)
    assert m == [(0, 0)]


def test_match_order_independence():
    preds = [Segment(0, 10), Segment(20, 30), Segment(40, 52)]
    gts = [Segment(41, 52), Segment(1, 10), Segment(19, 30)]
    m1 = set(match_segments(preds, gts))
    # permute both sides; matched CONTENT must be identical
    perm_p = [preds[2], preds[0], preds[1]]
    perm_g = [gts[1], gts[2], gts[0]]
    m2 = set(match_segments(perm_p, perm_g))
    as_pairs_1 = {(preds[pi].start, gts[gi].start) for pi, gi in m1}
    as_pairs_2 = {(perm_p[pi].start, perm_g[gi].start) for pi, gi in m2}
    assert as_pairs_1 == as_pairs_2


def test_match_rejects_overlapping_inputs():
    with pytest.raises(ValueError):
        match_segments([Segment(0, 10), Segment(5, 15)], [Segment(0, 10)])


def test_config_validation():
    with pytest.raises(ValueError):
        SegmenterConfig(w_h=0)
    with pytest.raises(ValueError):
        SegmenterConfig(tau_h=0.0)
    with pytest.raises(ValueError):
        SegmenterConfig(tau_h=1.5)
    with pytest.raises(ValueError):
        SegmenterConfig(t_min=50, t_max=40)
