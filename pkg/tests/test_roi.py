from datetime import datetime, timedelta, timezone
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolab.errors import InputError
from thermolab.radiometry import TemperatureMap
from thermolab.roi import (ROI_ORDER, RoiBox, RoiLabel, RoiSet, RoiStats,
                           build_series, default_roi_layout, extract_stats)

TS = datetime(2019, 2, 21, 10, 0, tzinfo=timezone.utc)


def tmap_from_grid(grid):
    grid = np.asarray(grid, dtype=np.float64)
    h, w = grid.shape
    return TemperatureMap(width=w, height=h, temps=grid.reshape(-1),
                          source_timestamp=TS)


def single_box_set(x=0, y=0, w=2, h=2, label=RoiLabel.FOREHEAD):
    return RoiSet([RoiBox(label=label, x=x, y=y, w=w, h=h)])


# --- extract_stats -----------------------------------------------------------

def test_uniform_map_collapses_stats():
    tmap = tmap_from_grid(np.full((10, 10), 34.5))
    stats = extract_stats(tmap, single_box_set(2, 2, 4, 4))
    s = stats[0]
    assert s.min_c == s.max_c == s.mean_c == 34.5
    assert s.valid_pixel_fraction == 1.0


def test_two_value_box_mean():
    grid = np.full((4, 4), 34.0)
    grid[0:2, 1] = 35.0  # 2x2 box with two pixels at each value
    stats = extract_stats(tmap_from_grid(grid), single_box_set(0, 0, 2, 2))
    assert stats[0].mean_c == pytest.approx(34.5)
    assert stats[0].min_c == 34.0
    assert stats[0].max_c == 35.0


def test_face_fixture_means_match_direct_summation():
    # forehead box at 36.1, nose at 36.2, explicit summation as the oracle
    grid = np.full((120, 160), 25.0)
    layout = default_roi_layout(160, 120)
    fh, nose = layout[RoiLabel.FOREHEAD], layout[RoiLabel.NOSE]
    grid[fh.y:fh.y + fh.h, fh.x:fh.x + fh.w] = 36.1
    grid[nose.y:nose.y + nose.h, nose.x:nose.x + nose.w] = 36.2
    stats = {s.label: s for s in extract_stats(tmap_from_grid(grid), layout)}

    def direct_mean(box):
        total = 0.0
        count = 0
        for yy in range(box.y, box.y + box.h):
            for xx in range(box.x, box.x + box.w):
                total += grid[yy, xx]
                count += 1
        return total / count

    assert abs(stats[RoiLabel.FOREHEAD].mean_c - 36.1) < 1e-9
    assert abs(stats[RoiLabel.NOSE].mean_c - 36.2) < 1e-9
    assert stats[RoiLabel.FOREHEAD].mean_c == pytest.approx(direct_mean(fh), abs=1e-12)
    assert stats[RoiLabel.NOSE].mean_c == pytest.approx(direct_mean(nose), abs=1e-12)


def test_out_of_bounds_names_label():
    tmap = tmap_from_grid(np.full((8, 8), 30.0))
    rois = single_box_set(6, 6, 4, 4, label=RoiLabel.NOSE)
    with pytest.raises(InputError, match="nose"):
        extract_stats(tmap, rois)


def test_all_masked_box_names_label():
    grid = np.full((8, 8), 30.0)
    grid[0:2, 0:2] = np.nan
    with pytest.raises(InputError, match="forehead"):
        extract_stats(tmap_from_grid(grid), single_box_set(0, 0, 2, 2))


def test_masked_pixels_at_mean_change_only_fraction():
    grid = np.full((6, 6), 33.0)
    base = extract_stats(tmap_from_grid(grid), single_box_set(0, 0, 4, 4))[0]
    grid[1, 1] = np.nan
    grid[2, 3] = np.nan
    masked = extract_stats(tmap_from_grid(grid), single_box_set(0, 0, 4, 4))[0]
    assert masked.min_c == base.min_c
    assert masked.max_c == base.max_c
    assert masked.mean_c == base.mean_c
    assert masked.valid_pixel_fraction == pytest.approx(14 / 16)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=-80, max_value=1000), min_size=16, max_size=16))
def test_min_mean_max_ordering_property(quarters):
    # quarter-degree grid keeps all sums exact in binary floating point
    grid = (np.asarray(quarters, dtype=np.float64) / 4.0).reshape(4, 4)
    s = extract_stats(tmap_from_grid(grid), single_box_set(0, 0, 4, 4))[0]
    assert s.min_c <= s.mean_c <= s.max_c


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.integers(min_value=-60, max_value=800), min_size=16, max_size=16),
    st.integers(min_value=-20, max_value=20),
)
def test_translation_equivariance_exact(quarters, offset_quarters):
    grid = (np.asarray(quarters, dtype=np.float64) / 4.0).reshape(4, 4)
    c = offset_quarters / 4.0
    base = extract_stats(tmap_from_grid(grid), single_box_set(0, 0, 4, 4))[0]
    moved = extract_stats(tmap_from_grid(grid + c), single_box_set(0, 0, 4, 4))[0]
    assert moved.min_c == base.min_c + c
    assert moved.max_c == base.max_c + c
    assert moved.mean_c == base.mean_c + c


# --- default layout ----------------------------------------------------------

def boxes_disjoint(a: RoiBox, b: RoiBox) -> bool:
    return (a.x + a.w <= b.x or b.x + b.w <= a.x
            or a.y + a.h <= b.y or b.y + b.h <= a.y)


def test_default_layout_160x120():
    layout = default_roi_layout(160, 120)
    boxes = list(layout)
    assert {b.label for b in boxes} == set(ROI_ORDER)
    for i, a in enumerate(boxes):
        assert a.x >= 0 and a.y >= 0
        assert a.x + a.w <= 160 and a.y + a.h <= 120
        for b in boxes[i + 1:]:
            assert boxes_disjoint(a, b)


def test_default_layout_doubles_exactly():
    small = {b.label: b for b in default_roi_layout(160, 120)}
    big = {b.label: b for b in default_roi_layout(320, 240)}
    for label, s in small.items():
        b = big[label]
        assert (b.x, b.y, b.w, b.h) == (2 * s.x, 2 * s.y, 2 * s.w, 2 * s.h)


@settings(max_examples=200, deadline=None)
@given(width=st.integers(min_value=32, max_value=2000),
       height=st.integers(min_value=32, max_value=2000))
def test_default_layout_properties_any_size(width, height):
    layout = default_roi_layout(width, height)
    boxes = list(layout)
    for i, a in enumerate(boxes):
        assert a.x + a.w <= width and a.y + a.h <= height
        assert a.w >= 2 and a.h >= 2
        for b in boxes[i + 1:]:
            assert boxes_disjoint(a, b)
    nose = layout[RoiLabel.NOSE]
    center = nose.x + nose.w / 2
    assert width / 3 <= center <= 2 * width / 3


def test_layout_too_small_rejected():
    with pytest.raises(InputError, match="too small"):
        default_roi_layout(31, 120)


def test_roi_set_rejects_duplicates():
    with pytest.raises(InputError, match="duplicate"):
        RoiSet([RoiBox(RoiLabel.NOSE, 0, 0, 2, 2), RoiBox(RoiLabel.NOSE, 4, 4, 2, 2)])


def test_box_minimum_size():
    with pytest.raises(InputError):
        RoiBox(RoiLabel.NOSE, 0, 0, 1, 2)


# --- build_series ------------------------------------------------------------

def make_stats(label, mean, at):
    return RoiStats(label=label, min_c=mean - 0.5, max_c=mean + 0.5, mean_c=mean,
                    valid_pixel_fraction=1.0, timestamp=at)


def frame_stats(at, means):
    return [make_stats(label, means[i], at) for i, label in enumerate(ROI_ORDER)]


def test_build_series_shape():
    flat = []
    for i in range(3):
        flat += frame_stats(TS + timedelta(minutes=i), [34.0, 33.0, 32.0, 31.0])
    series = build_series(flat, phase="acclimatization")
    assert len(series) == 4
    assert all(len(s.samples) == 3 for s in series)
    assert [s.label for s in series] == list(ROI_ORDER)


def test_single_frame_not_classifiable():
    series = build_series(frame_stats(TS, [34.0, 33.0, 32.0, 31.0]), phase="x")
    assert all(len(s.samples) == 1 for s in series)
    assert all(not s.classifiable for s in series)


def test_build_series_order_independent():
    flat = []
    for i in range(5):
        flat += frame_stats(TS + timedelta(minutes=i), [34.0 + i, 33.0, 32.0, 31.0])
    shuffled = flat[:]
    random.Random(3).shuffle(shuffled)
    assert build_series(shuffled, phase="p") == build_series(flat, phase="p")


def test_build_series_duplicate_timestamps_rejected():
    flat = frame_stats(TS, [34.0, 33.0, 32.0, 31.0]) * 2
    with pytest.raises(InputError, match="duplicate"):
        build_series(flat, phase="p")
