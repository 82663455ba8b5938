"""Regions on the flat cylinder ``R / (P Z) x R`` and their first Dirichlet
eigenvalue.

Regions that wrap around the cylinder are stored as a polygon in the
universal cover whose vertical sides ``x = 0`` and ``x = P`` carry identical
node sets; the two sides are identified through a periodic degree of
freedom map.  Regions narrower than ``P`` are ordinary planar polygons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely

from .errors import GeometryError
from .fem import assemble, solve
from .mesh import triangulate_rings


@dataclass
class CylinderRegion:
    P: float
    kind: str
    ring: np.ndarray
    periodic: bool
    dirichlet_ring_nodes: np.ndarray | None = None  # ring indices carrying u = 0
    seam: np.ndarray | None = None  # (k, 2) ring index pairs (x = P node, x = 0 node)
    info: dict = field(default_factory=dict)

    @property
    def area(self):
        return float(shapely.Polygon(self.ring).area)

    def height(self):
        y = self.ring[:, 1]
        return float(y.max() - y.min())

    def first_eigenvalue(self, h, seed=0):
        """First Dirichlet eigenvalue by P1 finite elements at edge length ``h``."""
        mesh = triangulate_rings([self.ring], h, keep_boundary=self.periodic)
        K, M = assemble(mesh)
        n = len(mesh.vertices)
        if self.periodic:
            dof = np.arange(n)
            dof[self.seam[:, 0]] = self.seam[:, 1]
            spec = solve(K, M, "dirichlet", count=1, seed=seed,
                         dirichlet_nodes=self.dirichlet_ring_nodes, dof_map=dof)
        else:
            spec = solve(K, M, "dirichlet", count=1, seed=seed, mesh=mesh)
        return float(spec.mu[0]), mesh


def _resample(x, y, h):
    """Polyline through (x, y) with pieces no longer than h (endpoints kept)."""
    pts = np.stack([x, y], axis=1)
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, math.ceil(np.linalg.norm(b - a) / h - 1e-9))
        out.append(a + np.outer(np.arange(1, n + 1) / n, b - a))
    return np.concatenate(out)


def periodic_strip(P, lower, upper, h, kind="band", info=None) -> CylinderRegion:
    """Region ``lower(x) < y < upper(x)`` wrapping once around the cylinder.

    ``lower`` and ``upper`` must be ``P``-periodic with ``lower < upper``.
    """
    h = 0.999 * h  # boundary edges must not exceed the mesh size: they are never split
    nx = max(4, math.ceil(P / h))
    xs = np.linspace(0.0, P, nx + 1)
    lo, hi = lower(xs), upper(xs)
    if np.any(hi <= lo):
        raise GeometryError("strip bounds cross")
    if abs(lo[0] - lo[-1]) > 1e-12 or abs(hi[0] - hi[-1]) > 1e-12:
        raise GeometryError("strip bounds are not periodic")
    lo[-1], hi[-1] = lo[0], hi[0]
    bottom = _resample(xs, lo, h)
    top = _resample(xs[::-1], hi[::-1], h)
    ny = max(2, math.ceil((hi[0] - lo[0]) / h))
    ys = np.linspace(lo[0], hi[0], ny + 1)
    right = np.stack([np.full(ny - 1, P), ys[1:-1]], axis=1)
    left = np.stack([np.zeros(ny - 1), ys[1:-1][::-1]], axis=1)
    parts = [
        ("bottom", bottom[:-1]),  # (0, lo) ... up to but excluding (P, lo)
        ("corner", np.array([[P, lo[0]]])),
        ("right", right),
        ("corner", np.array([[P, hi[0]]])),
        ("top", top[1:-1]),
        ("corner", np.array([[0.0, hi[0]]])),
        ("left", left),
    ]
    ring, tags = [], []
    for tag, pts in parts:
        ring.append(pts)
        tags += [tag] * len(pts)
    ring = np.concatenate(ring)
    tags = np.array(tags)
    dirichlet = np.flatnonzero(np.isin(tags, ["bottom", "top", "corner"]))
    r_idx = np.flatnonzero(tags == "right")
    l_idx = np.flatnonzero(tags == "left")
    # left runs downward, right upward: pair them by height
    seam = [(r, l) for r, l in zip(r_idx, l_idx[::-1])]
    # corners on x = P map to the corners on x = 0; bottom[0] is (0, lo)
    c_idx = np.flatnonzero(tags == "corner")
    top_left = int(c_idx[ring[c_idx, 0] == 0.0][0])
    for c in c_idx[ring[c_idx, 0] == P]:
        seam.append((c, 0 if ring[c, 1] == lo[0] else top_left))
    seam = np.array(seam, dtype=int)
    if np.any(ring[seam[:, 0], 1] != ring[seam[:, 1], 1]):
        raise GeometryError("seam nodes do not match")
    return CylinderRegion(P, kind, ring, True, dirichlet, seam, dict(info or {}))


def band(P, area, h) -> CylinderRegion:
    """Section ``S_A = {0 < y < A / P}`` of area ``A``."""
    H = area / P
    return periodic_strip(P, lambda x: np.zeros_like(x), lambda x: np.full_like(x, H), h,
                          "band", {"area": area})


def wavy_band(P, mean_height, amplitude, h, mode=1, phase=0.0) -> CylinderRegion:
    k = 2.0 * math.pi * mode / P
    return periodic_strip(
        P,
        lambda x: amplitude * np.sin(k * x + phase),
        lambda x: mean_height + 0.5 * amplitude * np.cos(k * x),
        h,
        "wavy-band",
        {"mean_height": mean_height, "amplitude": amplitude},
    )


def geodesic_disc(P, radius, h, center=None) -> CylinderRegion:
    if not 0 < 2 * radius < P:
        raise GeometryError("disc must not wrap around the cylinder")
    c = np.array(center if center is not None else (0.5 * P, 0.0), dtype=float)
    n = max(16, math.ceil(2 * math.pi * radius / h))
    a = 2 * math.pi * np.arange(n) / n
    ring = c + radius * np.stack([np.cos(a), np.sin(a)], axis=1)
    return CylinderRegion(P, "disc", ring, False, info={"radius": radius})


def star_region(P, seed, h, max_extent=0.8) -> CylinderRegion:
    """Random star-shaped region, scaled so its width stays below ``max_extent * P``."""
    rng = np.random.default_rng(seed)
    modes = np.arange(2, 7)
    amp = rng.uniform(0.0, 0.25, len(modes)) / modes
    phase = rng.uniform(0.0, 2 * math.pi, len(modes))
    n = 2048
    a = 2 * math.pi * np.arange(n) / n
    r = 1.0 + np.sum(amp[:, None] * np.cos(modes[:, None] * a + phase[:, None]), axis=0)
    pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
    width = np.ptp(pts[:, 0])
    scale = max_extent * P / width * rng.uniform(0.3, 1.0)
    pts *= scale
    # resample by arclength at resolution h
    closed = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    m = max(24, math.ceil(cum[-1] / h))
    s = cum[-1] * np.arange(m) / m
    ring = np.stack([np.interp(s, cum, closed[:, 0]), np.interp(s, cum, closed[:, 1])], axis=1)
    ring += np.array([0.5 * P, 0.0])
    if not shapely.Polygon(ring).is_valid:
        raise GeometryError("random star region is not simple")
    return CylinderRegion(P, "star", ring, False, info={"seed": seed})
