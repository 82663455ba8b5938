"""Chain domains: pieces joined by necks, realized as polygons.

A chain domain is described declaratively by a list of :class:`PieceSpec`
(closed curves made of segments, circular arcs and polylines), a list of
:class:`NeckSpec` (homotopies ``G(s, t)`` on ``[0, L] x [-1, 1]`` whose
``t = 0`` slice is the neck curve) and a :class:`WidthFamily` selecting the
sub-interval of ``[-1, 1]`` used by every neck.  :func:`build_chain_domain`
turns the description into a :class:`RealizedDomain` whose boundary is a
polyline at resolution ``h``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import shapely
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import minimize_scalar
from shapely.geometry import LinearRing, Polygon
from shapely.geometry.polygon import orient

from .errors import (
    AttachmentError,
    ConfigError,
    ConstantEstimationError,
    DegenerateNeckError,
    GeometryError,
)

# --------------------------------------------------------------------------
# small vector helpers


def segment_distance(points, a, b, chunk=4096):
    """Distance from each point to the closest of the segments ``a[k] -> b[k]``.

    Returns ``(dist, nearest)`` where ``nearest`` holds the closest boundary
    point for every query point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(a, dtype=float)
    ab = np.asarray(b, dtype=float) - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2[ab2 == 0.0] = 1.0
    dist = np.empty(len(points))
    nearest = np.empty_like(points)
    rows = max(1, chunk * 64 // max(len(a), 1))
    for lo in range(0, len(points), rows):
        p = points[lo : lo + rows]
        d = p[:, None, :] - a[None, :, :]
        u = np.clip((d[..., 0] * ab[:, 0] + d[..., 1] * ab[:, 1]) / ab2, 0.0, 1.0)
        qx = a[None, :, 0] + u * ab[None, :, 0]
        qy = a[None, :, 1] + u * ab[None, :, 1]
        d2 = (p[:, 0, None] - qx) ** 2 + (p[:, 1, None] - qy) ** 2
        k = np.argmin(d2, axis=1)
        idx = np.arange(len(p))
        dist[lo : lo + rows] = np.sqrt(d2[idx, k])
        nearest[lo : lo + rows, 0] = qx[idx, k]
        nearest[lo : lo + rows, 1] = qy[idx, k]
    return dist, nearest


def ring_segments(ring):
    ring = np.asarray(ring, dtype=float)
    return ring, np.roll(ring, -1, axis=0)


def three_point_curvature(p0, p1, p2):
    """Curvature of the circle through three points (vectorized)."""
    a = np.linalg.norm(p1 - p0, axis=-1)
    b = np.linalg.norm(p2 - p1, axis=-1)
    c = np.linalg.norm(p2 - p0, axis=-1)
    cross = (p1[..., 0] - p0[..., 0]) * (p2[..., 1] - p0[..., 1]) - (
        p1[..., 1] - p0[..., 1]
    ) * (p2[..., 0] - p0[..., 0])
    denom = a * b * c
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(denom > 0, 2.0 * np.abs(cross) / denom, 0.0)
    return k


def _angle_between(u, v):
    return math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1])


# --------------------------------------------------------------------------
# boundary arcs


class Segment:
    kind = "segment"

    def __init__(self, start, end):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)

    @property
    def length(self):
        return float(np.linalg.norm(self.end - self.start))

    def point(self, u):
        u = np.asarray(u, dtype=float)[..., None]
        return self.start + u * (self.end - self.start)

    def tangent(self, u):
        d = (self.end - self.start) / self.length
        return np.broadcast_to(d, np.shape(u) + (2,)).copy()

    def curvature(self, n):
        return np.zeros(n)

    def sample(self, h, curved_only=False):
        if curved_only:
            return self.start[None, :].copy()
        n = max(1, math.ceil(self.length / h))
        return self.point(np.arange(n) / n)

    def area_term(self):
        (x0, y0), (x1, y1) = self.start, self.end
        return 0.5 * (x0 * y1 - x1 * y0)

    def scaled(self, c):
        return Segment(c * self.start, c * self.end)

    def to_dict(self):
        return {"type": "segment", "start": self.start.tolist(), "end": self.end.tolist()}


class CircularArc:
    """Arc of the circle ``center + radius * (cos a, sin a)`` from ``start_angle``
    to ``end_angle`` (counter-clockwise when ``end_angle > start_angle``)."""

    kind = "arc"

    def __init__(self, center, radius, start_angle, end_angle):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.a0 = float(start_angle)
        self.a1 = float(end_angle)
        if self.radius <= 0 or self.a0 == self.a1:
            raise GeometryError("degenerate circular arc")

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)

    @property
    def length(self):
        return self.radius * abs(self.a1 - self.a0)

    def point(self, u):
        a = self.a0 + np.asarray(u, dtype=float) * (self.a1 - self.a0)
        return self.center + self.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)

    def tangent(self, u):
        a = self.a0 + np.asarray(u, dtype=float) * (self.a1 - self.a0)
        sgn = 1.0 if self.a1 > self.a0 else -1.0
        return sgn * np.stack([-np.sin(a), np.cos(a)], axis=-1)

    def curvature(self, n):
        # three-point circumradius on the parametric arc, not the polyline
        u = np.linspace(0.0, 1.0, n + 2)
        p = self.point(u)
        return three_point_curvature(p[:-2], p[1:-1], p[2:])

    def sample(self, h, curved_only=False):
        n = max(2, math.ceil(self.length / h))
        return self.point(np.arange(n) / n)

    def area_term(self):
        r, (cx, cy) = self.radius, self.center
        return 0.5 * (
            r * cx * (math.sin(self.a1) - math.sin(self.a0))
            - r * cy * (math.cos(self.a1) - math.cos(self.a0))
            + r * r * (self.a1 - self.a0)
        )

    def scaled(self, c):
        return CircularArc(c * self.center, c * self.radius, self.a0, self.a1)

    def to_dict(self):
        return {
            "type": "arc",
            "center": self.center.tolist(),
            "radius": self.radius,
            "start_angle": self.a0,
            "end_angle": self.a1,
        }


class PolylineArc:
    kind = "polyline"

    def __init__(self, points):
        self.points = np.asarray(points, dtype=float)
        if self.points.ndim != 2 or len(self.points) < 2:
            raise GeometryError("polyline arc needs at least two points")
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    @property
    def length(self):
        return float(self._cum[-1])

    def point(self, u):
        s = np.asarray(u, dtype=float) * self.length
        x = np.interp(s, self._cum, self.points[:, 0])
        y = np.interp(s, self._cum, self.points[:, 1])
        return np.stack([x, y], axis=-1)

    def tangent(self, u):
        s = np.atleast_1d(np.asarray(u, dtype=float) * self.length)
        k = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self.points) - 2)
        d = self.points[k + 1] - self.points[k]
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        return d.reshape(np.shape(u) + (2,))

    def curvature(self, n):
        p = self.points
        if len(p) < 3:
            return np.zeros(1)
        return three_point_curvature(p[:-2], p[1:-1], p[2:])

    def sample(self, h, curved_only=False):
        out = [self.points[:1]]
        for a, b in zip(self.points[:-1], self.points[1:]):
            n = max(1, math.ceil(np.linalg.norm(b - a) / h))
            out.append(a + np.outer(np.arange(1, n) / n, b - a))
            out.append(b[None, :])
        return np.concatenate(out)[:-1]

    def area_term(self):
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def scaled(self, c):
        return PolylineArc(c * self.points)

    def to_dict(self):
        return {"type": "polyline", "points": self.points.tolist()}


def arc_from_dict(d):
    kind = d.get("type")
    if kind == "segment":
        return Segment(d["start"], d["end"])
    if kind == "arc":
        return CircularArc(d["center"], d["radius"], d["start_angle"], d["end_angle"])
    if kind == "polyline":
        return PolylineArc(d["points"])
    raise ConfigError(f"unknown arc type {kind!r}")


# --------------------------------------------------------------------------
# pieces


@dataclass
class PieceSpec:
    """Closed, positively oriented boundary curve made of arcs.

    ``vertices`` lists arc junctions (junction ``k`` joins arc ``k - 1`` and
    arc ``k``) where the boundary is not smooth; ``None`` detects them from
    the tangent jump.
    """

    arcs: list
    vertices: list | None = None

    def __post_init__(self):
        if not self.arcs:
            raise GeometryError("piece without arcs")
        diam = self.diameter()
        for k, arc in enumerate(self.arcs):
            nxt = self.arcs[(k + 1) % len(self.arcs)]
            if np.linalg.norm(arc.end - nxt.start) > 1e-12 * max(diam, 1.0):
                raise GeometryError(f"arc {k} does not end where arc {k + 1} starts")
        if self.signed_area() <= 0:
            raise GeometryError("piece boundary must be positively oriented")
        if self.vertices is None:
            self.vertices = [
                k
                for k in range(len(self.arcs))
                if abs(self.junction_turn(k)) > 1e-6
            ]
        if not LinearRing(self.polyline(diam / 200.0)).is_simple:
            raise GeometryError("piece boundary is self-intersecting")

    def diameter(self):
        pts = np.concatenate([a.point(np.linspace(0, 1, 9)) for a in self.arcs])
        return float(np.ptp(pts, axis=0).max())

    def junction_turn(self, k):
        prev = self.arcs[k - 1].tangent(1.0)
        nxt = self.arcs[k].tangent(0.0)
        return _angle_between(prev, nxt)

    def interior_angle(self, k):
        return math.pi - self.junction_turn(k)

    def vertex_points(self):
        return np.array([self.arcs[k].start for k in self.vertices]).reshape(-1, 2)

    def signed_area(self):
        return float(sum(a.area_term() for a in self.arcs))

    @property
    def perimeter(self):
        return float(sum(a.length for a in self.arcs))

    def polyline(self, h, curved_only=False):
        return np.concatenate([a.sample(h, curved_only) for a in self.arcs])

    def scaled(self, c):
        return PieceSpec([a.scaled(c) for a in self.arcs], list(self.vertices))

    def to_dict(self):
        return {"arcs": [a.to_dict() for a in self.arcs], "vertices": list(self.vertices)}


# --------------------------------------------------------------------------
# neck homotopies


class StraightStrip:
    """``G(s, t) = origin + s * direction + t * half_width * normal``.

    ``normal`` is the direction rotated by +90 degrees.
    """

    kind = "straight-strip"
    straight = True

    def __init__(self, origin, direction, half_width):
        self.origin = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        self.direction = d / np.linalg.norm(d)
        self.normal = np.array([-self.direction[1], self.direction[0]])
        self.half_width = float(half_width)

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)[..., None]
        t = np.asarray(t, dtype=float)[..., None]
        return self.origin + s * self.direction + t * self.half_width * self.normal

    def ds(self, s, t):
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(self.direction, shape + (2,)).copy()

    def dt(self, s, t):
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(self.half_width * self.normal, shape + (2,)).copy()

    def scaled(self, c):
        return StraightStrip(c * self.origin, self.direction, c * self.half_width)

    def to_dict(self):
        return {
            "type": "straight-strip",
            "origin": self.origin.tolist(),
            "direction": self.direction.tolist(),
            "half_width": self.half_width,
        }


class ArcStrip:
    """Annular strip ``center + (radius + t * half_width) * e(phi(s))`` with
    ``phi(s) = start_angle + orientation * s / radius``."""

    kind = "arc-strip"
    straight = False

    def __init__(self, center, radius, start_angle, half_width, orientation=1):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.a0 = float(start_angle)
        self.half_width = float(half_width)
        self.orientation = 1.0 if orientation >= 0 else -1.0
        if self.half_width >= self.radius:
            raise DegenerateNeckError("arc strip half width must be below its radius")

    def _phi(self, s):
        return self.a0 + self.orientation * np.asarray(s, dtype=float) / self.radius

    def __call__(self, s, t):
        phi = self._phi(s)
        r = self.radius + np.asarray(t, dtype=float) * self.half_width
        return self.center + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)

    def ds(self, s, t):
        phi = self._phi(s)
        r = self.radius + np.asarray(t, dtype=float) * self.half_width
        f = self.orientation * r / self.radius
        return np.stack([-f * np.sin(phi), f * np.cos(phi)], axis=-1)

    def dt(self, s, t):
        phi = self._phi(s) + 0.0 * np.asarray(t, dtype=float)
        return self.half_width * np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def scaled(self, c):
        return ArcStrip(
            c * self.center, c * self.radius, self.a0, c * self.half_width, self.orientation
        )

    def to_dict(self):
        return {
            "type": "arc-strip",
            "center": self.center.tolist(),
            "radius": self.radius,
            "start_angle": self.a0,
            "half_width": self.half_width,
            "orientation": int(self.orientation),
        }


class SampledGrid:
    """Homotopy given by samples on an ``(s, t)`` grid, bicubic between them."""

    kind = "sampled-grid"
    straight = False

    def __init__(self, s, t, x, y):
        self.s = np.asarray(s, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self._fx = RectBivariateSpline(self.s, self.t, self.x, kx=3, ky=3)
        self._fy = RectBivariateSpline(self.s, self.t, self.y, kx=3, ky=3)

    def _ev(self, s, t, **kw):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        x = self._fx.ev(s.ravel(), t.ravel(), **kw).reshape(s.shape)
        y = self._fy.ev(s.ravel(), t.ravel(), **kw).reshape(s.shape)
        return np.stack([x, y], axis=-1)

    def __call__(self, s, t):
        return self._ev(s, t)

    def ds(self, s, t):
        return self._ev(s, t, dx=1)

    def dt(self, s, t):
        return self._ev(s, t, dy=1)

    def scaled(self, c):
        return SampledGrid(c * self.s, self.t, c * self.x, c * self.y)

    def to_dict(self):
        return {
            "type": "sampled-grid",
            "s": self.s.tolist(),
            "t": self.t.tolist(),
            "x": self.x.tolist(),
            "y": self.y.tolist(),
        }


def homotopy_from_dict(d):
    kind = d.get("type")
    if kind == "straight-strip":
        return StraightStrip(d["origin"], d["direction"], d["half_width"])
    if kind == "arc-strip":
        return ArcStrip(
            d["center"], d["radius"], d["start_angle"], d["half_width"], d.get("orientation", 1)
        )
    if kind == "sampled-grid":
        return SampledGrid(d["s"], d["t"], d["x"], d["y"])
    raise ConfigError(f"unknown homotopy type {kind!r}")


@dataclass
class NeckSpec:
    attach_i: int
    attach_j: int
    homotopy: object
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise DegenerateNeckError("neck length must be positive")

    def rail(self, t, n=2):
        s = np.linspace(0.0, self.length, n)
        return self.homotopy(s, np.full_like(s, t))

    def end(self, which, interval, n=9):
        t = np.linspace(interval[0], interval[1], n)
        s = np.zeros_like(t) if which == 0 else np.full_like(t, self.length)
        return self.homotopy(s, t)

    def slice_length(self, t, n=257):
        p = self.rail(t, n)
        return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))

    def width_at(self, s, interval):
        t1, t2 = interval
        s = np.asarray(s, dtype=float)
        return np.linalg.norm(
            self.homotopy(s, np.full_like(s, t2)) - self.homotopy(s, np.full_like(s, t1)),
            axis=-1,
        )

    def jacobian(self, s, t):
        a = self.homotopy.dt(s, t)
        b = self.homotopy.ds(s, t)
        return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]

    def scaled(self, c):
        return NeckSpec(self.attach_i, self.attach_j, self.homotopy.scaled(c), c * self.length)

    def to_dict(self):
        return {
            "i": self.attach_i,
            "j": self.attach_j,
            "homotopy": self.homotopy.to_dict(),
            "L": self.length,
        }


@dataclass
class WidthFamily:
    intervals: list

    def __post_init__(self):
        self.intervals = [tuple(float(v) for v in iv) for iv in self.intervals]
        for t1, t2 in self.intervals:
            if not (-1.0 < t1 < 0.0 < t2 < 1.0):
                raise GeometryError(f"width interval ({t1}, {t2}) must satisfy -1 < t1 < 0 < t2 < 1")
            if t2 - t1 < 1e-9:
                raise GeometryError("width interval too small")

    @classmethod
    def full(cls, count):
        # the base domain uses the closed interval [-1, 1]; callers pass it explicitly
        return [(-1.0, 1.0)] * count


def interval_for_width(neck: NeckSpec, width: float, tol=1e-12):
    """Symmetric interval ``(-a, a)`` whose realized minimum width equals ``width``."""

    def minw(a):
        s = np.linspace(0.0, neck.length, 129)
        return float(neck.width_at(s, (-a, a)).min())

    hi = 1.0 - 1e-9
    if width >= minw(hi):
        raise GeometryError(f"neck cannot reach width {width}")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if minw(mid) < width:
            lo = mid
        else:
            hi = mid
    return (-0.5 * (lo + hi), 0.5 * (lo + hi))


# --------------------------------------------------------------------------
# realized domains


@dataclass
class NeckRecord:
    index: int
    spec: NeckSpec
    interval: tuple
    min_width: float
    ends: tuple  # two (n, 2) polylines: G(0, I) and G(L, I)
    polygon: Polygon
    corners: np.ndarray  # G(0,t1), G(0,t2), G(L,t1), G(L,t2)


@dataclass
class RealizedDomain:
    polygon: Polygon
    rings: list
    area: float
    perimeter: float
    vertices: np.ndarray
    angles: np.ndarray
    vertex_kind: list
    necks: list
    pieces: list
    piece_polygons: list
    h: float
    neck_specs: list = field(default_factory=list)

    @property
    def segments(self):
        a = np.concatenate([r for r in self.rings])
        b = np.concatenate([np.roll(r, -1, axis=0) for r in self.rings])
        return a, b

    @property
    def diameter(self):
        x0, y0, x1, y1 = self.polygon.bounds
        return math.hypot(x1 - x0, y1 - y0)

    def boundary_distance(self, points):
        a, b = self.segments
        return segment_distance(points, a, b)[0]

    def contains(self, points, tol=0.0):
        points = np.atleast_2d(points)
        inside = shapely.contains_xy(self.polygon, points[:, 0], points[:, 1])
        if tol > 0:
            inside |= self.boundary_distance(points) <= tol
        return inside

    def piece_vertex_points(self):
        return self.vertices[[k == "piece" for k in self.vertex_kind]]

    def neck_corner_points(self):
        return self.vertices[[k == "neck" for k in self.vertex_kind]]

    def shortest_feature(self):
        """Shortest boundary stretch between consecutive vertices."""
        best = math.inf
        vset = {tuple(np.round(v, 12)) for v in self.vertices}
        for ring in self.rings:
            seg = np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1)
            marks = [i for i, p in enumerate(ring) if tuple(np.round(p, 12)) in vset]
            if len(marks) < 2:
                continue
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            for a, b in zip(marks, marks[1:] + [marks[0] + len(ring)]):
                length = cum[b] - cum[a] if b <= len(ring) else cum[-1] - cum[a] + cum[b - len(ring)]
                best = min(best, length)
        return best


def _subdivide(ring, h):
    out = []
    for a, b in zip(ring, np.roll(ring, -1, axis=0)):
        n = max(1, math.ceil(np.linalg.norm(b - a) / h - 1e-9))
        out.append(a + np.outer(np.arange(n) / n, b - a))
    return np.concatenate(out)


def _clean_ring(coords, keep, tol):
    ring = np.asarray(coords, dtype=float)[:-1]
    out = []
    for p in ring:
        if out and np.linalg.norm(p - out[-1]) <= tol:
            if any(np.linalg.norm(p - k) <= tol for k in keep):
                out[-1] = p
            continue
        out.append(p)
    if len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= tol:
        out.pop()
    return np.array(out)


def _interior_angles(ring):
    prev = ring - np.roll(ring, 1, axis=0)
    nxt = np.roll(ring, -1, axis=0) - ring
    turn = np.arctan2(
        prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0],
        prev[:, 0] * nxt[:, 0] + prev[:, 1] * nxt[:, 1],
    )
    return math.pi - turn


def _neck_polygon(neck: NeckSpec, interval, h, extend=0.0):
    t1, t2 = interval
    L = neck.length
    straight = getattr(neck.homotopy, "straight", False)
    n = 2 if straight else max(8, math.ceil(L / (0.5 * h)) + 1)
    s = np.linspace(0.0, L, n)
    lower = neck.homotopy(s, np.full_like(s, t1))
    upper = neck.homotopy(s, np.full_like(s, t2))
    if extend > 0:
        # push the ends into the attached pieces so the union has no slivers
        lo_d = neck.homotopy.ds(np.array([0.0, 0.0]), np.array([t1, t2]))
        hi_d = neck.homotopy.ds(np.array([L, L]), np.array([t1, t2]))
        lower = np.vstack([lower[0] - extend * lo_d[0], lower, lower[-1] + extend * hi_d[0]])
        upper = np.vstack([upper[0] - extend * lo_d[1], upper, upper[-1] + extend * hi_d[1]])
    m = 2 if straight else max(3, math.ceil(abs(t2 - t1) / 0.25) + 1)
    tt = np.linspace(t1, t2, m)
    end_hi = neck.homotopy(np.full_like(tt, L), tt) if extend == 0 else upper[-1:]
    end_lo = neck.homotopy(np.zeros_like(tt), tt) if extend == 0 else lower[:1]
    if extend == 0:
        coords = np.vstack([lower, end_hi[1:-1], upper[::-1], end_lo[::-1][1:-1]])
    else:
        coords = np.vstack([lower, upper[::-1]])
    poly = Polygon(coords)
    if not poly.is_valid:
        poly = shapely.make_valid(poly)
    return orient(poly, 1.0) if isinstance(poly, Polygon) else poly


def minimum_width(neck: NeckSpec, interval, h):
    """Minimum over ``s`` of the rail distance, refined to ``h / 10`` in ``s``."""
    L = neck.length
    n = max(65, 4 * math.ceil(L / h) + 1)
    s = np.linspace(0.0, L, n)
    w = neck.width_at(s, interval)
    k = int(np.argmin(w))
    if getattr(neck.homotopy, "straight", False):
        return float(w[k])
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, n - 1)]
    res = minimize_scalar(
        lambda x: float(neck.width_at(np.array([x]), interval)[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": h / 10.0},
    )
    return float(min(w[k], res.fun))


def _check_neck(neck: NeckSpec, k, pieces, interval, h, samples=17):
    ss = np.linspace(0.0, neck.length, samples)
    tt = np.linspace(-1.0, 1.0, samples)
    S, T = np.meshgrid(ss, tt, indexing="ij")
    det = neck.jacobian(S, T)
    scale = np.abs(det).max()
    if scale == 0 or det.min() * det.max() <= 0 or np.abs(det).min() < 1e-9 * scale:
        raise DegenerateNeckError(f"neck {k}: Jacobian vanishes or changes sign")
    for which, piece_idx in ((0, neck.attach_i), (1, neck.attach_j)):
        if not 0 <= piece_idx < len(pieces):
            raise AttachmentError(f"neck {k}: no piece {piece_idx}")
        piece = pieces[piece_idx]
        ring = piece.polyline(min(h, piece.perimeter / 400.0))
        ends = neck.end(which, interval, n=9)
        d = segment_distance(ends, *ring_segments(ring))[0]
        if d.max() > h:
            raise AttachmentError(
                f"neck {k} end {which} lies {d.max():.3g} away from piece {piece_idx}"
            )
        verts = piece.vertex_points()
        if len(verts):
            dv = np.linalg.norm(ends[:, None, :] - verts[None, :, :], axis=-1)
            if dv.min() < h:
                raise AttachmentError(f"neck {k} end {which} touches a vertex of piece {piece_idx}")


def build_chain_domain(
    pieces: Sequence[PieceSpec],
    necks: Sequence[NeckSpec],
    widths: WidthFamily | Sequence | None,
    h: float,
) -> RealizedDomain:
    """Realize ``Omega(w)`` as a polygon whose boundary is sampled at resolution ``h``."""
    if not h > 0:
        raise GeometryError("resolution h must be positive")
    if not isinstance(widths, WidthFamily):
        widths = WidthFamily(list(widths or []))
    if len(widths.intervals) != len(necks):
        raise GeometryError("one width interval per neck is required")
    for piece in pieces:
        shortest = min(a.length for a in piece.arcs)
        if h > shortest:
            raise GeometryError(f"h={h} exceeds the shortest boundary arc ({shortest:.3g})")

    records = []
    shapes = []
    for piece in pieces:
        poly = Polygon(piece.polyline(h, curved_only=True))
        if not poly.is_valid:
            raise GeometryError("piece polygon is not simple")
        shapes.append(poly)
    piece_polys = list(shapes)

    for k, (neck, iv) in enumerate(zip(necks, widths.intervals)):
        _check_neck(neck, k, pieces, iv, h)
        wmin = minimum_width(neck, iv, h)
        if h > wmin:
            raise GeometryError(f"h={h} exceeds the minimum width {wmin:.3g} of neck {k}")
        ext = 0.25 * min(h, wmin)
        shapes.append(_neck_polygon(neck, iv, h, extend=ext))
        exact = _neck_polygon(neck, iv, h)
        ends = (neck.end(0, iv, n=33), neck.end(1, iv, n=33))
        corners = np.array([ends[0][0], ends[0][-1], ends[1][0], ends[1][-1]])
        records.append(NeckRecord(k, neck, iv, wmin, ends, exact, corners))

    union = shapely.unary_union(shapes)
    if not isinstance(union, Polygon) or union.is_empty:
        raise GeometryError("chain domain is not a single connected polygon")
    if not union.is_valid:
        raise GeometryError("chain domain boundary self-intersects")
    union = orient(union, 1.0)

    candidates = [(p, "piece") for piece in pieces for p in piece.vertex_points()]
    candidates += [(c, "neck") for r in records for c in r.corners]
    keep = [c for c, _ in candidates]
    diam = math.hypot(*(np.array(union.bounds[2:]) - union.bounds[:2]))
    tol = 1e-9 * diam
    rings = [_clean_ring(union.exterior.coords, keep, tol)]
    rings += [_clean_ring(r.coords, keep, tol) for r in union.interiors]
    rings = [_subdivide(r, h) for r in rings]

    verts, angles, kinds = [], [], []
    for c, kind in candidates:
        best = None
        for ring in rings:
            d = np.linalg.norm(ring - c, axis=1)
            i = int(np.argmin(d))
            if d[i] <= h and (best is None or d[i] < best[0]):
                best = (d[i], ring, i)
        if best is None:
            continue
        _, ring, i = best
        verts.append(ring[i].copy())
        angles.append(_interior_angles(ring)[i])
        kinds.append(kind)

    polygon = Polygon(rings[0], rings[1:])
    if not polygon.is_valid:
        raise GeometryError("resampled boundary self-intersects")
    return RealizedDomain(
        polygon=polygon,
        rings=rings,
        area=float(polygon.area),
        perimeter=float(polygon.length),
        vertices=np.array(verts).reshape(-1, 2),
        angles=np.array(angles),
        vertex_kind=kinds,
        necks=records,
        pieces=list(pieces),
        piece_polygons=piece_polys,
        h=h,
        neck_specs=list(necks),
    )


def boundary_neighborhood_area(dom: RealizedDomain, t: float, quad_segs: int = 64) -> float:
    """Area of ``{x in Omega : dist(x, boundary) < t}`` by inward polygon offsetting."""
    if not 0 < t < dom.diameter:
        raise GeometryError("offset distance must lie in (0, diameter)")
    try:
        inner = dom.polygon.buffer(-t, quad_segs=quad_segs)
    except Exception as exc:  # GEOS failures surface as generic exceptions
        raise GeometryError(f"polygon offset failed: {exc}") from exc
    if not inner.is_valid:
        raise GeometryError("polygon offset produced an invalid shape")
    return float(dom.area - inner.area)


# --------------------------------------------------------------------------
# geometric constants


@dataclass
class GeometricConstants:
    rho_star: float
    kappa_star: float
    delta_star: float
    tau_star: float
    w_star: float
    A_star: float
    L_star: float
    provenance: str = "estimated"
    status: dict = field(default_factory=dict)


def base_metrics(pieces, necks):
    A = sum(p.signed_area() for p in pieces)
    L = sum(p.perimeter for p in pieces)
    for neck in necks:
        L += 2.0 * max(neck.slice_length(t) for t in np.linspace(-1.0, 1.0, 9))
    return A, L


def _curvature_samples(pieces, necks, samples):
    ks = [np.atleast_1d(a.curvature(samples)) for p in pieces for a in p.arcs]
    for neck in necks:
        s = np.linspace(0.0, neck.length, samples + 2)
        for t in np.linspace(-1.0, 1.0, 9):
            g = neck.homotopy(s, np.full_like(s, t))
            ks.append(three_point_curvature(g[:-2], g[1:-1], g[2:]))
    return np.concatenate(ks) if ks else np.zeros(1)


def _vertex_radii(pieces, necks, samples):
    """For every vertex: distance to the nearest foreign vertex or boundary
    part, and the largest tangent slope in the bisector frame."""
    tt = np.linspace(-1.0, 1.0, samples)
    families = []  # (points, family id)
    fam = 0
    for piece in pieces:
        for v in piece.vertex_points():
            families.append((v[None, :], fam))
            fam += 1
    for neck in necks:
        for which in (0, 1):
            s = np.zeros_like(tt) if which == 0 else np.full_like(tt, neck.length)
            families.append((neck.homotopy(s, tt), fam))
            fam += 1
    radii = []
    for pts, f in families:
        others = [q for q, g in families if g != f]
        if not others:
            continue
        others = np.concatenate(others)
        d = np.linalg.norm(pts[:, None, :] - others[None, :, :], axis=-1)
        radii.append(d.min())
    count = sum(len(p.vertices) for p in pieces) + 4 * len(necks)
    return np.array(radii), count


def _vertex_slopes(pieces, radius, samples):
    """Largest graph slope of the two sides inside the vertex ball, in the
    frame whose vertical axis bisects the corner; ``inf`` when a side leaves
    its cone of half-opening theta0 / 4."""
    worst = 0.0
    for piece in pieces:
        for k in piece.vertices:
            p = piece.arcs[k].start
            theta = piece.interior_angle(k)
            theta0 = theta if theta < math.pi else 2 * math.pi - theta
            for arc, sign in ((piece.arcs[k], 1.0), (piece.arcs[k - 1], -1.0)):
                u = np.linspace(0.0, 1.0, samples)
                if sign < 0:
                    u = u[::-1]
                pts = arc.point(u)
                tan = arc.tangent(u) * sign
                inside = np.linalg.norm(pts - p, axis=1) <= radius
                inside[0] = False
                t0 = tan[0]
                for q, tq in zip(pts[inside], tan[inside]):
                    chord = q - p
                    dev = abs(_angle_between(t0, chord))
                    if dev > theta0 / 4 + 1e-12:
                        return math.inf
                    # slope relative to the bisector: angle from vertical
                    ang = abs(_angle_between(t0, tq)) + theta0 / 2
                    slope = abs(math.tan(math.pi / 2 - ang)) if ang < math.pi / 2 else 0.0
                    worst = max(worst, slope)
            worst = max(worst, abs(1.0 / math.tan(theta0 / 2)) if theta0 < math.pi else 0.0)
    return worst


def _cut_distances(piece, points, normals, cap, tol, steps=48):
    ring = piece.polyline(min(piece.perimeter / 2000.0, cap / 8.0), curved_only=True)
    a, b = ring_segments(ring)
    s = np.linspace(0.0, cap, steps + 1)[1:]
    q = points[:, None, :] + s[None, :, None] * normals[:, None, :]
    d = segment_distance(q.reshape(-1, 2), a, b)[0].reshape(len(points), steps)
    bad = np.abs(d - s[None, :]) > tol
    first = np.where(bad.any(axis=1), bad.argmax(axis=1), steps)
    return np.where(first == 0, 0.0, np.concatenate([[0.0], s])[first])


def _tau_samples(pieces, L_star, delta_star, samples, tol):
    """Ratios cut-distance / eta over an eta grid, capped at 1."""
    eta_max = L_star * delta_star
    out = []
    for piece in pieces:
        verts = piece.vertex_points()
        for eta in eta_max * np.array([1.0, 0.5, 0.25, 0.125]):
            pts, nrm = [], []
            for arc in piece.arcs:
                u = np.linspace(0.0, 1.0, samples)
                p = arc.point(u)
                t = arc.tangent(u)
                n = np.stack([-t[:, 1], t[:, 0]], axis=1)  # inward for CCW curves
                if len(verts):
                    far = np.linalg.norm(p[:, None, :] - verts[None, :, :], axis=-1).min(axis=1) >= eta
                    p, n = p[far], n[far]
                pts.append(p)
                nrm.append(n)
            pts, nrm = np.concatenate(pts), np.concatenate(nrm)
            if not len(pts):
                continue
            c = _cut_distances(piece, pts, nrm, eta, tol)
            out.append(c / eta)
    return np.concatenate(out) if out else np.ones(1)


def _w_samples(necks, samples):
    out = {"ratio": [1.0], "ds_min": [1.0], "ds_max_inv": [1.0], "det": [1.0]}
    for neck in necks:
        s = np.linspace(0.0, neck.length, samples)
        t = np.linspace(-1.0, 1.0, samples)
        S, T = np.meshgrid(s, t, indexing="ij")
        gt = np.linalg.norm(neck.homotopy.dt(S, T), axis=-1)
        gs = np.linalg.norm(neck.homotopy.ds(S, T), axis=-1)
        det = np.abs(neck.jacobian(S, T))
        out["ratio"].append((gt.min(axis=1) / gt.max(axis=1)).min())
        out["ds_min"].append(gs.min())
        out["ds_max_inv"].append(1.0 / gs.max())
        out["det"].append((det / (gt * gs)).min())
    return {k: float(min(v)) for k, v in out.items()}


def _constant_checks(pieces, necks, c: GeometricConstants, samples):
    """Evaluate every defining inequality; returns ``{name: (ok, sample)}``."""
    rtol = 1e-9
    status = {}
    A, L = base_metrics(pieces, necks)
    rho = L * L / A
    status["rho"] = (c.rho_star >= rho * (1 - rtol), rho)
    kap = _curvature_samples(pieces, necks, samples)
    worst = float(kap.max())
    status["kappa"] = (worst <= c.kappa_star / L * (1 + rtol) + 1e-12, worst)
    radii, count = _vertex_radii(pieces, necks, samples)
    rmin = float(radii.min()) if len(radii) else math.inf
    slope = _vertex_slopes(pieces, c.delta_star * L, samples)
    ok = (
        c.delta_star * L <= rmin * (1 + rtol)
        and count <= 1.0 / c.delta_star * (1 + rtol)
        and slope <= 1.0 / c.delta_star * (1 + rtol)
    )
    status["delta"] = (ok, {"radius": rmin, "count": count, "slope": slope})
    tol = L * 1e-4
    ratios = _tau_samples(pieces, L, c.delta_star, samples, tol)
    status["tau"] = (float(ratios.min()) >= c.tau_star * (1 - 1e-6), float(ratios.min()))
    ws = _w_samples(necks, samples)
    status["w"] = (min(ws.values()) >= c.w_star * (1 - rtol), ws)
    return status


def estimate_geometric_constants(
    pieces: Sequence[PieceSpec],
    necks: Sequence[NeckSpec] = (),
    samples: int = 65,
    supplied: dict | None = None,
) -> GeometricConstants:
    """Admissible geometric constants of the base domain (necks on ``[-1, 1]``).

    With ``supplied`` the given constants are only verified.  Otherwise each
    constant is estimated from samples of the parametric boundary and then
    verified; a violated inequality raises :class:`ConstantEstimationError`.
    """
    A, L = base_metrics(pieces, necks)
    if supplied:
        c = GeometricConstants(
            rho_star=float(supplied["rho"]),
            kappa_star=float(supplied["kappa"]),
            delta_star=float(supplied["delta"]),
            tau_star=float(supplied["tau"]),
            w_star=float(supplied["w"]),
            A_star=A,
            L_star=L,
            provenance="user-supplied",
        )
    else:
        rho = L * L / A
        kappa = L * float(_curvature_samples(pieces, necks, samples).max())
        if kappa < 1e-9:
            kappa = 0.0
        radii, count = _vertex_radii(pieces, necks, samples)
        delta = float(min(1.0 / max(count, 1), (radii.min() / L) if len(radii) else 0.25))
        if count == 0:
            delta = 0.25
        # shrink until the corner cones and the slope bound hold
        for _ in range(60):
            slope = _vertex_slopes(pieces, delta * L, samples)
            if slope <= 1.0 / delta:
                break
            delta *= 0.8
        tol = L * 1e-4
        tau = min(1.0, float(_tau_samples(pieces, L, delta, samples, tol).min()))
        ws = _w_samples(necks, samples)
        wstar = min(1.0, min(ws.values()))
        c = GeometricConstants(rho, kappa, delta, tau, wstar, A, L, "estimated")
    status = _constant_checks(pieces, necks, c, samples)
    c.status = {k: v[0] for k, v in status.items()}
    for name, (ok, sample) in status.items():
        if not ok:
            raise ConstantEstimationError(f"constant {name} violates its definition", sample)
    return c


# --------------------------------------------------------------------------
# configuration


@dataclass
class DomainConfig:
    pieces: list
    necks: list
    widths: WidthFamily
    constants: dict | None = None
    extra: dict = field(default_factory=dict)

    def with_width(self, width):
        """Same domain with every neck realized at minimum width ``width``."""
        ivs = [interval_for_width(n, width) for n in self.necks]
        return DomainConfig(self.pieces, self.necks, WidthFamily(ivs), self.constants, self.extra)

    def build(self, h):
        return build_chain_domain(self.pieces, self.necks, self.widths, h)

    def scaled(self, c):
        return DomainConfig(
            [p.scaled(c) for p in self.pieces],
            [n.scaled(c) for n in self.necks],
            self.widths,
            self.constants,
            self.extra,
        )

    def to_dict(self):
        d = {
            "pieces": [p.to_dict() for p in self.pieces],
            "necks": [n.to_dict() for n in self.necks],
            "widths": [{"neck": k, "interval": list(iv)} for k, iv in enumerate(self.widths.intervals)],
        }
        if self.constants:
            d["constants"] = dict(self.constants)
        d.update(self.extra)
        return d


def config_from_dict(d: dict) -> DomainConfig:
    try:
        pieces = [
            PieceSpec([arc_from_dict(a) for a in p["arcs"]], p.get("vertices"))
            for p in d["pieces"]
        ]
        necks = [
            NeckSpec(int(n["i"]), int(n["j"]), homotopy_from_dict(n["homotopy"]), float(n["L"]))
            for n in d.get("necks", [])
        ]
        ivs = [None] * len(necks)
        for w in d.get("widths", []):
            ivs[int(w["neck"])] = tuple(w["interval"])
    except (KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"malformed domain config: {exc}") from exc
    if any(iv is None for iv in ivs):
        raise ConfigError("every neck needs a width interval")
    extra = {k: v for k, v in d.items() if k not in {"pieces", "necks", "widths", "constants"}}
    return DomainConfig(pieces, necks, WidthFamily(ivs), d.get("constants"), extra)


def load_config(path) -> DomainConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(data)
