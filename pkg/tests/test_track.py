import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curdrive.track import (
    TrackSpec,
    build_track,
    heading_error,
    lap_progress,
    project,
    wrap_angle,
)

CIRCLE = build_track(TrackSpec(shape="circle", radius=50.0, spacing=1.0))
OVAL = build_track(TrackSpec(shape="oval", straight_length=100.0, radius=20.0, spacing=1.0))
RECT = build_track(TrackSpec(shape="rounded_rectangle", width=120.0, height=60.0, radius=15.0, spacing=0.5))


def brute_force_distance(track, point, samples_per_segment=400):
    """Nearest distance to a densely resampled copy of the centerline."""
    t = np.linspace(0.0, 1.0, samples_per_segment)
    pts = track.points[:, None, :] + t[None, :, None] * track.seg_vec[:, None, :]
    return float(np.min(np.hypot(pts[..., 0] - point[0], pts[..., 1] - point[1])))


def test_circle_length():
    assert CIRCLE.total_length == pytest.approx(2 * math.pi * 50, rel=1e-3)


def test_oval_length():
    assert OVAL.total_length == pytest.approx(200 + 2 * math.pi * 20, rel=1e-3)


@pytest.mark.parametrize("track", [CIRCLE, OVAL, RECT])
def test_track_invariants(track):
    assert np.all(np.diff(track.arc_s) > 0)
    assert track.seg_len.max() <= 2.0
    # closure: the last segment returns to the origin
    gap = np.hypot(*(track.points[-1] - track.points[0]))
    assert gap <= track.seg_len.max() + 1e-12
    assert np.all(np.abs(track.heading_delta) < 0.2)
    assert np.all(track.headings > -math.pi) and np.all(track.headings <= math.pi)


@pytest.mark.parametrize("spacing", [5.0, 0.1, 0.0, -1.0])
def test_bad_spacing_rejected(spacing):
    with pytest.raises(ValueError):
        build_track(TrackSpec(shape="circle", radius=50.0, spacing=spacing))


@pytest.mark.parametrize("spec", [
    TrackSpec(shape="circle", radius=0.0),
    TrackSpec(shape="oval", straight_length=-5.0),
    TrackSpec(shape="rounded_rectangle", width=20.0, height=60.0, radius=15.0),
    TrackSpec(shape="triangle"),
])
def test_bad_dimensions_rejected(spec):
    with pytest.raises(ValueError):
        build_track(spec)


def test_build_is_deterministic():
    again = build_track(TrackSpec(shape="oval", straight_length=100.0, radius=20.0, spacing=1.0))
    assert np.array_equal(again.points, OVAL.points)
    assert np.array_equal(again.headings, OVAL.headings)


def test_project_on_centerline():
    p = project(CIRCLE, CIRCLE.points[37])
    assert p.lateral_offset_d == pytest.approx(0.0, abs=1e-9)


def test_project_radially_outward():
    # circle centre is (0, 50); waypoint 0 sits at the origin
    x, y, h = CIRCLE.point_at(80.0)
    cx, cy = 0.0, 50.0
    r = math.hypot(x - cx, y - cy)
    q = (cx + (x - cx) * (r + 1.5) / r, cy + (y - cy) * (r + 1.5) / r)
    p = project(CIRCLE, q)
    assert p.lateral_offset_d == pytest.approx(brute_force_distance(CIRCLE, q), abs=1.5e-3)
    assert p.lateral_offset_d == pytest.approx(1.5, abs=0.01)
    assert p.signed_offset < 0  # outside of a CCW loop is to the right


def test_project_origin():
    p = project(OVAL, (0.0, 0.0))
    assert p.nearest_s == 0.0
    assert p.lateral_offset_d == 0.0


def test_signed_offset_left_positive():
    p = project(OVAL, (50.0, 1.0))  # straight heading +x, so +y is left
    assert p.signed_offset == pytest.approx(1.0)
    assert p.tangent_heading == pytest.approx(0.0)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0.0, 325.0), n=st.floats(-5.0, 5.0), which=st.sampled_from(["circle", "oval", "rect"]))
def test_normal_offset_recovered(s, n, which):
    track = {"circle": CIRCLE, "oval": OVAL, "rect": RECT}[which]
    x, y, h = track.point_at(s)
    q = (x - n * math.sin(h), y + n * math.cos(h))
    p = project(track, q)
    assert abs(p.lateral_offset_d - abs(n)) < 0.01
    # oracle resolution: half of 1 m / 400 samples
    assert p.lateral_offset_d == pytest.approx(brute_force_distance(track, q), abs=1.5e-3)
    assert 0.0 <= p.nearest_s < track.total_length


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-80, 220), y=st.floats(-40, 80))
def test_project_idempotent(x, y):
    p = project(OVAL, (x, y))
    again = project(OVAL, p.nearest_point)
    assert again.lateral_offset_d <= 1e-6


def test_heading_error_examples():
    p = project(OVAL, (10.0, 0.0))
    t = p.tangent_heading
    assert heading_error(p, t) == 0.0
    assert heading_error(p, t + math.pi / 9) == pytest.approx(math.pi / 9)
    assert heading_error(p, t - 2 * math.pi + 0.1) == pytest.approx(0.1)


@given(st.floats(-100.0, 100.0))
def test_heading_error_range(angle):
    a = wrap_angle(angle)
    assert -math.pi < a <= math.pi
    assert math.isclose(math.cos(a), math.cos(angle), abs_tol=1e-9)


def test_lap_progress():
    L = OVAL.total_length
    assert lap_progress(OVAL, 0.0) == 0.0
    assert lap_progress(OVAL, L) == 1.0
    assert lap_progress(OVAL, 1.5 * L) == 1.5
    with pytest.raises(ValueError):
        lap_progress(OVAL, -1.0)


@given(st.floats(0, 1e4), st.floats(0, 1e4))
def test_lap_progress_linear(a, b):
    assert lap_progress(OVAL, a + b) == pytest.approx(lap_progress(OVAL, a) + lap_progress(OVAL, b))
