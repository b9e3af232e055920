"""Closed-loop track centerline and projection queries.

The centerline is a piecewise-linear polyline through waypoints sampled from
straights and circular arcs. Headings are stored per waypoint and linearly
interpolated (wrap-aware) along each segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_SPACING = 2.0
MIN_SPACING = 0.1


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into (-pi, pi]; in-range scalars pass through exactly."""
    if isinstance(angle, float) and -math.pi < angle <= math.pi:
        return angle
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2.0 * np.pi)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Waypoint:
    position: tuple[float, float]
    tangent_heading: float
    arc_length_s: float


@dataclass(frozen=True)
class TrackSpec:
    """Shape descriptor accepted by :func:`build_track`.

    ``shape`` is one of ``"circle"`` (uses ``radius``), ``"oval"`` (uses
    ``straight_length`` and ``radius``) or ``"rounded_rectangle"`` (uses
    ``width``, ``height`` and ``radius`` as the corner radius).
    """

    shape: str = "oval"
    radius: float = 20.0
    straight_length: float = 100.0
    width: float = 120.0
    height: float = 60.0
    spacing: float = 1.0
    lane_half_width: float = 2.0


@dataclass(frozen=True)
class TrackProjection:
    nearest_s: float
    lateral_offset_d: float
    signed_offset: float
    tangent_heading: float
    nearest_point: tuple[float, float]


@dataclass(frozen=True, eq=False)
class Track:
    points: np.ndarray  # (N, 2)
    headings: np.ndarray  # (N,)
    arc_s: np.ndarray  # (N,) arc length at each waypoint
    lane_half_width: float
    seg_vec: np.ndarray = field(repr=False)
    seg_len: np.ndarray = field(repr=False)
    heading_delta: np.ndarray = field(repr=False)

    @property
    def total_length(self) -> float:
        return float(self.arc_s[-1] + self.seg_len[-1])

    @property
    def waypoints(self) -> list[Waypoint]:
        return [
            Waypoint((float(p[0]), float(p[1])), float(h), float(s))
            for p, h, s in zip(self.points, self.headings, self.arc_s)
        ]

    def __len__(self) -> int:
        return len(self.points)

    def point_at(self, s: float) -> tuple[float, float, float]:
        """Return (x, y, heading) of the centerline at arc length ``s`` (wrapped)."""
        s = float(s) % self.total_length
        i = int(np.searchsorted(self.arc_s, s, side="right")) - 1
        t = (s - self.arc_s[i]) / self.seg_len[i]
        x = self.points[i, 0] + t * self.seg_vec[i, 0]
        y = self.points[i, 1] + t * self.seg_vec[i, 1]
        heading = wrap_angle(self.headings[i] + t * self.heading_delta[i])
        return float(x), float(y), heading


def _make_track(points: np.ndarray, headings: np.ndarray, lane_half_width: float) -> Track:
    seg_vec = np.roll(points, -1, axis=0) - points
    seg_len = np.hypot(seg_vec[:, 0], seg_vec[:, 1])
    arc_s = np.concatenate([[0.0], np.cumsum(seg_len[:-1])])
    heading_delta = wrap_angle(np.roll(headings, -1) - headings)
    arrays = [points, headings, arc_s, seg_vec, seg_len, heading_delta]
    for arr in arrays:
        arr.setflags(write=False)
    return Track(points, headings, arc_s, float(lane_half_width), seg_vec, seg_len, heading_delta)


def _sample_primitives(primitives: Sequence[tuple], spacing: float):
    """Sample ('straight', length) and ('arc', radius, sweep) pieces, CCW, from the origin."""
    x, y, h = 0.0, 0.0, 0.0
    pts, hds = [], []
    for prim in primitives:
        if prim[0] == "straight":
            length = prim[1]
            n = max(1, math.ceil(length / spacing - 1e-12))
            for k in range(n):
                step = length * k / n
                pts.append((x + step * math.cos(h), y + step * math.sin(h)))
                hds.append(h)
            x += length * math.cos(h)
            y += length * math.sin(h)
        else:
            _, radius, sweep = prim
            arc_len = radius * sweep
            # chord <= arc length, so sampling by arc length bounds the spacing
            n = max(1, math.ceil(arc_len / spacing - 1e-12))
            cx, cy = x - radius * math.sin(h), y + radius * math.cos(h)
            for k in range(n):
                phi = sweep * k / n
                hk = h + phi
                pts.append((cx + radius * math.sin(hk), cy - radius * math.cos(hk)))
                hds.append(hk)
            h += sweep
            x, y = cx + radius * math.sin(h), cy - radius * math.cos(h)
    return np.array(pts, dtype=float), wrap_angle(np.array(hds, dtype=float))


def build_track(spec: TrackSpec) -> Track:
    """Build a closed counter-clockwise track starting at the origin heading +x."""
    if not (MIN_SPACING < spec.spacing <= MAX_SPACING):
        raise ValueError(f"waypoint spacing must be in ({MIN_SPACING}, {MAX_SPACING}], got {spec.spacing}")
    if spec.lane_half_width <= 0:
        raise ValueError("lane_half_width must be positive")
    if spec.shape == "circle":
        if spec.radius <= 0:
            raise ValueError("circle radius must be positive")
        prims = [("arc", spec.radius, 2.0 * math.pi)]
    elif spec.shape == "oval":
        if spec.radius <= 0 or spec.straight_length <= 0:
            raise ValueError("oval dimensions must be positive")
        prims = [
            ("straight", spec.straight_length),
            ("arc", spec.radius, math.pi),
            ("straight", spec.straight_length),
            ("arc", spec.radius, math.pi),
        ]
    elif spec.shape == "rounded_rectangle":
        r = spec.radius
        sx, sy = spec.width - 2 * r, spec.height - 2 * r
        if r <= 0 or sx <= 0 or sy <= 0:
            raise ValueError("rounded rectangle needs positive radius and width, height > 2*radius")
        quarter = ("arc", r, math.pi / 2)
        prims = [("straight", sx), quarter, ("straight", sy), quarter,
                 ("straight", sx), quarter, ("straight", sy), quarter]
    else:
        raise ValueError(f"unknown track shape {spec.shape!r}")
    points, headings = _sample_primitives(prims, spec.spacing)
    return _make_track(points, headings, spec.lane_half_width)


def project(track: Track, point, heading: float | None = None) -> TrackProjection:
    """Nearest point on the centerline polyline to ``point``.

    ``heading`` is accepted for call-site symmetry with :func:`heading_error`
    and does not influence the result.
    """
    px, py = float(point[0]), float(point[1])
    rel_x = px - track.points[:, 0]
    rel_y = py - track.points[:, 1]
    vx, vy = track.seg_vec[:, 0], track.seg_vec[:, 1]
    t = np.clip((rel_x * vx + rel_y * vy) / (track.seg_len ** 2), 0.0, 1.0)
    dx = rel_x - t * vx
    dy = rel_y - t * vy
    dist2 = dx * dx + dy * dy
    i = int(np.argmin(dist2))  # first minimum == smallest s
    ti = float(t[i])
    s = (float(track.arc_s[i]) + ti * float(track.seg_len[i])) % track.total_length
    d = math.sqrt(float(dist2[i]))
    cross = float(vx[i]) * float(rel_y[i]) - float(vy[i]) * float(rel_x[i])
    signed = d if cross >= 0 else -d
    tangent = wrap_angle(float(track.headings[i]) + ti * float(track.heading_delta[i]))
    nearest = (px - float(dx[i]), py - float(dy[i]))
    return TrackProjection(s, d, signed, tangent, nearest)


def heading_error(projection: TrackProjection, vehicle_heading: float) -> float:
    """Signed heading error (vehicle minus track tangent) wrapped into (-pi, pi]."""
    return wrap_angle(vehicle_heading - projection.tangent_heading)


def lap_progress(track: Track, cumulative_distance: float) -> float:
    if cumulative_distance < 0:
        raise ValueError("cumulative distance must be non-negative")
    return cumulative_distance / track.total_length
