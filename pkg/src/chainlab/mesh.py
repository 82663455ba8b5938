"""Boundary-conforming triangulations of realized chain domains.

Meshes are produced by Shewchuk's Triangle (constrained Delaunay with
Ruppert refinement) and then pushed below the target edge length by
area-driven re-refinement.  :func:`refine` performs uniform red refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import shapely
import triangle as tr
from scipy.spatial import cKDTree

from .errors import GeometryError, MeshError, OutsideDomainError

QUALITY_ANGLE = 20.0
FALLBACK_ANGLE = 15.0


@dataclass(frozen=True, eq=False)
class TriMesh:
    """P1 triangulation.

    ``triangles`` are positively oriented vertex triples; ``region`` holds the
    neck index of each triangle (``-1`` outside every neck).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: tuple
    region: np.ndarray
    quality_fallback: bool = False
    meta: dict = field(default_factory=dict)

    @cached_property
    def areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def area(self):
        return float(self.areas.sum())

    @cached_property
    def edges(self):
        """Unique undirected edges, sorted, and the triangle-to-edge map."""
        t = self.triangles
        e = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
        e.sort(axis=1)
        uniq, inv = np.unique(e, axis=0, return_inverse=True)
        return uniq, inv.reshape(3, -1).T

    @cached_property
    def edge_lengths(self):
        e, _ = self.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    @property
    def h_max(self):
        return float(self.edge_lengths.max())

    @cached_property
    def neighbors(self):
        """``neighbors[t, k]`` is the triangle across the edge opposite vertex ``k``."""
        _, t2e = self.edges
        owner = np.full((t2e.max() + 1, 2), -1)
        nb = np.full(self.triangles.shape, -1)
        flat = t2e.ravel()
        tri = np.repeat(np.arange(len(self.triangles)), 3)
        order = np.argsort(flat, kind="stable")
        f, tt = flat[order], tri[order]
        first = np.ones(len(f), dtype=bool)
        first[1:] = f[1:] != f[:-1]
        owner[f[first], 0] = tt[first]
        owner[f[~first], 1] = tt[~first]
        for k in range(3):
            o = owner[t2e[:, k]]
            me = np.arange(len(self.triangles))
            nb[:, k] = np.where(o[:, 0] == me, o[:, 1], o[:, 0])
        return nb

    @cached_property
    def boundary_nodes(self):
        return np.unique(self.boundary_edges.ravel())

    @cached_property
    def angles(self):
        p = self.vertices[self.triangles]
        out = np.empty(self.triangles.shape)
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            out[:, k] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out

    @property
    def min_angle(self):
        return float(self.angles.min())

    def euler_characteristic(self):
        e, _ = self.edges
        return len(self.vertices) - len(e) + len(self.triangles)

    @cached_property
    def _centroid_tree(self):
        return cKDTree(self.vertices[self.triangles].mean(axis=1))

    def barycentric(self, tri_idx, points):
        p = self.vertices[self.triangles[tri_idx]]
        points = np.asarray(points, dtype=float)
        v0 = p[..., 1, :] - p[..., 0, :]
        v1 = p[..., 2, :] - p[..., 0, :]
        v2 = points - p[..., 0, :]
        det = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
        l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / det
        l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / det
        return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)

    def interpolate(self, values, points):
        """Evaluate the P1 function with nodal ``values`` at ``points``."""
        tri, bary = locate_many(self, points)
        return np.einsum("ij,ij->i", values[self.triangles[tri]], bary)


# --------------------------------------------------------------------------
# construction


def _size_field(dom, h, neck_h):
    """Callable giving the local target edge length at points."""
    if neck_h is None or neck_h >= h:
        return lambda pts: np.full(len(pts), h)
    zone = shapely.unary_union([r.polygon for r in dom.necks]).buffer(2.0 * h)
    shapely.prepare(zone)

    def size(pts):
        inside = shapely.contains_xy(zone, pts[:, 0], pts[:, 1])
        return np.where(inside, neck_h, h)

    return size


def _pslg(dom, size, constraints):
    verts, segs = [], []
    offset = 0
    holes = []
    for k, ring in enumerate(dom.rings):
        nxt = np.roll(ring, -1, axis=0)
        mids = 0.5 * (ring + nxt)
        lengths = np.linalg.norm(nxt - ring, axis=1)
        local = size(mids)
        pts = []
        for a, b, ell, s in zip(ring, nxt, lengths, local):
            n = max(1, math.ceil(ell / s - 1e-9))
            pts.append(a + np.outer(np.arange(n) / n, b - a))
        pts = np.concatenate(pts)
        n = len(pts)
        verts.append(pts)
        idx = np.arange(n) + offset
        segs.append(np.stack([idx, np.roll(idx, -1)], axis=1))
        offset += n
        if k > 0:
            hole = shapely.Polygon(ring)
            rp = hole.representative_point()
            holes.append([rp.x, rp.y])
    d = {"vertices": np.concatenate(verts), "segments": np.concatenate(segs)}
    if constraints:
        d = _add_constraints(d, constraints, size)
    if holes:
        d["holes"] = np.array(holes)
    return d


def _add_constraints(pslg, constraints, size):
    """Node boundary and interior polylines into one planar straight line graph."""
    v, s = pslg["vertices"], pslg["segments"]
    lines = [shapely.LineString(v[[a, b]]) for a, b in s]
    for line in constraints:
        line = np.asarray(line, dtype=float)
        for a, b in zip(line[:-1], line[1:]):
            n = max(1, math.ceil(np.linalg.norm(b - a) / float(size(((a + b) / 2)[None])[0]) - 1e-9))
            pts = a + np.outer(np.arange(n + 1) / n, b - a)
            lines += [shapely.LineString(pts[k : k + 2]) for k in range(n)]
    noded = shapely.node(shapely.MultiLineString(lines))
    coords, index = [], {}
    segs = []
    tol = 1e-12 * max(np.ptp(v, axis=0).max(), 1.0)
    for line in shapely.get_parts(noded):
        c = shapely.get_coordinates(line)
        ids = []
        for p in c:
            key = (round(p[0] / tol), round(p[1] / tol))
            if key not in index:
                index[key] = len(coords)
                coords.append(p)
            ids.append(index[key])
        segs += [(a, b) for a, b in zip(ids[:-1], ids[1:]) if a != b]
    segs = np.unique(np.sort(np.array(segs), axis=1), axis=0)
    return {"vertices": np.array(coords), "segments": segs}


def _run_triangle(pslg, size, angle, keep_boundary=False):
    h0 = float(size(pslg["vertices"][:1])[0])
    extra = "Y" if keep_boundary else ""
    opts = f"pq{angle}a{math.sqrt(3.0) / 4.0 * h0 * h0:.17g}{extra}Q"
    try:
        out = tr.triangulate(pslg, opts)
    except Exception as exc:  # Triangle reports failures as RuntimeError
        raise MeshError(f"triangulation failed: {exc}") from exc
    for _ in range(40):
        p = out["vertices"][out["triangles"]]
        longest = np.max(
            np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2), axis=1
        )
        target = size(p.mean(axis=1))
        bad = longest > target * (1.0 + 1e-12)
        if not bad.any():
            return out
        area = 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )
        limit = np.where(bad, 0.5 * area, -1.0)
        seeded = dict(out)
        seeded["triangle_max_area"] = limit[:, None]
        out = tr.triangulate(seeded, f"rpq{angle}a{extra}Q")
    raise MeshError("edge length target not reached")


def _boundary_edges(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    # keep the oriented copy so the domain lies on the left
    single = cnt[inv.ravel()] == 1
    return e[single]


def _tag_edges(dom, verts, bedges):
    necks = [r.polygon for r in dom.necks]
    vset = dom.vertices
    mids = 0.5 * (verts[bedges[:, 0]] + verts[bedges[:, 1]])
    tags = []
    in_neck = np.zeros(len(bedges), dtype=bool)
    for poly in necks:
        grown = poly.buffer(1e-9 * max(dom.diameter, 1.0))
        in_neck |= shapely.contains_xy(grown, mids[:, 0], mids[:, 1])
    if len(vset):
        tree = cKDTree(vset)
        d0, _ = tree.query(verts[bedges[:, 0]])
        d1, _ = tree.query(verts[bedges[:, 1]])
        at_vertex = np.minimum(d0, d1) <= 1e-12 * max(dom.diameter, 1.0)
    else:
        at_vertex = np.zeros(len(bedges), dtype=bool)
    for v, n in zip(at_vertex, in_neck):
        tags.append("vertex" if v else ("neck" if n else "side"))
    return tuple(tags)


def _regions(dom, verts, tris):
    c = verts[tris].mean(axis=1)
    region = np.full(len(tris), -1)
    for rec in dom.necks:
        region[shapely.contains_xy(rec.polygon, c[:, 0], c[:, 1])] = rec.index
    return region


def triangulate(dom, h, neck_h=None, constraints=None) -> TriMesh:
    """Quality triangulation of ``dom`` with longest edge at most ``h``.

    Parameters
    ----------
    dom : RealizedDomain
    h : float
        Target edge length.
    neck_h : float, optional
        Finer edge length used inside (and ``2 h`` around) the necks.
    constraints : list of (n, 2) arrays, optional
        Interior polylines that must appear as mesh edges.
    """
    if not h > 0:
        raise MeshError("h must be positive")
    local_neck = neck_h if neck_h is not None and neck_h < h else h
    for rec in dom.necks:
        if local_neck > rec.min_width / 3.0 * (1 + 1e-12):
            raise MeshError(
                f"h={local_neck} leaves fewer than three elements across neck "
                f"{rec.index} (width {rec.min_width:.3g})"
            )
    feature = dom.shortest_feature()
    if h > feature * (1 + 1e-12):
        raise MeshError(f"h={h} exceeds the shortest boundary feature {feature:.3g}")
    if not dom.polygon.is_valid:
        raise GeometryError("boundary self-intersects")

    size = _size_field(dom, h, neck_h)
    pslg = _pslg(dom, size, constraints)
    out = _run_triangle(pslg, size, QUALITY_ANGLE)
    verts = np.ascontiguousarray(out["vertices"], dtype=float)
    tris = np.ascontiguousarray(out["triangles"], dtype=np.int64)
    mesh = _finish(dom, verts, tris, False, h, neck_h)
    if mesh.min_angle < QUALITY_ANGLE - 1e-6:
        # small input angles at reflex or sharp corners cannot always be fixed
        out = _run_triangle(pslg, size, FALLBACK_ANGLE)
        verts = np.ascontiguousarray(out["vertices"], dtype=float)
        tris = np.ascontiguousarray(out["triangles"], dtype=np.int64)
        mesh = _finish(dom, verts, tris, True, h, neck_h)
        if mesh.min_angle < FALLBACK_ANGLE - 1e-6:
            raise MeshError(f"minimum angle {mesh.min_angle:.2f} below the fallback floor")
    rel = abs(mesh.area - dom.area) / dom.area
    if rel > 1e-10:
        raise MeshError(f"mesh area differs from domain area by {rel:.2e}")
    return mesh


def triangulate_rings(rings, h, keep_boundary=False) -> TriMesh:
    """Triangulate the polygon with boundary ``rings`` (outer ring first).

    With ``keep_boundary`` no Steiner points are added on the boundary, so
    the input ring nodes are exactly the boundary vertices and keep their
    indices (ring by ring, in order) in the output.
    """
    size = lambda pts: np.full(len(pts), h)  # noqa: E731
    verts, segs, holes = [], [], []
    offset = 0
    for k, ring in enumerate(rings):
        ring = np.asarray(ring, dtype=float)
        idx = np.arange(len(ring)) + offset
        verts.append(ring)
        segs.append(np.stack([idx, np.roll(idx, -1)], axis=1))
        offset += len(ring)
        if k > 0:
            rp = shapely.Polygon(ring).representative_point()
            holes.append([rp.x, rp.y])
    pslg = {"vertices": np.concatenate(verts), "segments": np.concatenate(segs)}
    if holes:
        pslg["holes"] = np.array(holes)
    fallback = False
    out = _run_triangle(pslg, size, QUALITY_ANGLE, keep_boundary)
    mesh = mesh_from_arrays(out["vertices"], out["triangles"])
    if mesh.min_angle < QUALITY_ANGLE - 1e-6:
        out = _run_triangle(pslg, size, FALLBACK_ANGLE, keep_boundary)
        mesh = mesh_from_arrays(out["vertices"], out["triangles"])
        fallback = True
    meta = {"h": h, "quality_fallback": fallback}
    return TriMesh(mesh.vertices, mesh.triangles, mesh.boundary_edges, mesh.edge_tags,
                   mesh.region, fallback, meta)


def _finish(dom, verts, tris, fallback, h, neck_h):
    p = verts[tris]
    sgn = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = sgn < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    bedges = _boundary_edges(tris)
    return TriMesh(
        vertices=verts,
        triangles=tris,
        boundary_edges=bedges,
        edge_tags=_tag_edges(dom, verts, bedges),
        region=_regions(dom, verts, tris),
        quality_fallback=fallback,
        meta={"h": h, "neck_h": neck_h},
    )


def mesh_from_arrays(vertices, triangles, region=None) -> TriMesh:
    """Wrap explicit arrays (used for hand-built test meshes)."""
    verts = np.asarray(vertices, dtype=float)
    tris = np.asarray(triangles, dtype=np.int64).copy()
    p = verts[tris]
    sgn = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    tris[sgn < 0] = tris[sgn < 0][:, [0, 2, 1]]
    bedges = _boundary_edges(tris)
    if region is None:
        region = np.full(len(tris), -1)
    return TriMesh(verts, tris, bedges, tuple("side" for _ in bedges), np.asarray(region))


def refine(mesh: TriMesh) -> TriMesh:
    """Red refinement: every triangle is split into four similar ones."""
    edges, t2e = mesh.edges
    nv = len(mesh.vertices)
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    verts = np.vstack([mesh.vertices, mids])
    a, b, c = mesh.triangles.T
    # t2e[:, k] is the edge opposite vertex k
    bc, ca, ab = (t2e[:, k] + nv for k in range(3))
    tris = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    order = np.arange(len(tris)).reshape(4, -1).T.ravel()
    tris = tris[order]
    region = np.repeat(mesh.region, 4)
    key = {tuple(sorted(e)): k for k, e in enumerate(map(tuple, edges))}
    bedges, tags = [], []
    for (u, v), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        m = key[tuple(sorted((u, v)))] + nv
        bedges += [(u, m), (m, v)]
        tags += [tag, tag]
    meta = dict(mesh.meta)
    meta["refined"] = meta.get("refined", 0) + 1
    return TriMesh(
        vertices=verts,
        triangles=tris.astype(np.int64),
        boundary_edges=np.array(bedges, dtype=np.int64),
        edge_tags=tuple(tags),
        region=region,
        quality_fallback=mesh.quality_fallback,
        meta=meta,
    )


# --------------------------------------------------------------------------
# point location


def locate(mesh: TriMesh, x, tol=None):
    """Triangle containing ``x`` and its barycentric coordinates.

    Walks from the triangle whose centroid is nearest to ``x`` across the
    edge with the most negative coordinate.
    """
    x = np.asarray(x, dtype=float)
    if tol is None:
        tol = 1e-6 * mesh.h_max
    _, t = mesh._centroid_tree.query(x)
    t = int(t)
    nb = mesh.neighbors
    for _ in range(len(mesh.triangles) + 1):
        lam = mesh.barycentric(t, x)
        k = int(np.argmin(lam))
        if lam[k] >= -1e-12:
            return t, _clip_bary(lam)
        nxt = nb[t, k]
        if nxt < 0:
            break
        t = int(nxt)
    return _scan(mesh, x, tol)


def _clip_bary(lam):
    lam = np.clip(lam, 0.0, 1.0)
    return lam / lam.sum()


def _scan(mesh, x, tol):
    p = mesh.vertices[mesh.triangles]
    lam = mesh.barycentric(np.arange(len(mesh.triangles)), np.broadcast_to(x, (len(p), 2)))
    worst = lam.min(axis=1)
    t = int(np.argmax(worst))
    if worst[t] >= -1e-12:
        return t, _clip_bary(lam[t])
    # outside every triangle: accept if within tol of the boundary
    e = mesh.boundary_edges
    a, b = mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]
    ab = b - a
    u = np.clip(np.einsum("ij,ij->i", x - a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
    q = a + u[:, None] * ab
    d = np.linalg.norm(q - x, axis=1)
    if d.min() > tol:
        raise OutsideDomainError(f"point {x.tolist()} lies outside the mesh")
    return t, _clip_bary(lam[t])


def locate_many(mesh: TriMesh, points, k=12):
    """Vectorized :func:`locate` for many points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k = min(k, len(mesh.triangles))
    _, cand = mesh._centroid_tree.query(points, k=k)
    cand = cand.reshape(len(points), k)
    lam = mesh.barycentric(cand, points[:, None, :])
    worst = lam.min(axis=2)
    best = np.argmax(worst, axis=1)
    idx = np.arange(len(points))
    tri = cand[idx, best]
    bary = lam[idx, best]
    ok = worst[idx, best] >= -1e-12
    for i in np.flatnonzero(~ok):
        tri[i], bary[i] = locate(mesh, points[i])
    bary = np.clip(bary, 0.0, 1.0)
    bary /= bary.sum(axis=1, keepdims=True)
    return tri, bary


# --------------------------------------------------------------------------
# export


def write_off(mesh: TriMesh, path):
    """OFF text file: header, counts, vertex lines (z = 0), face lines."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")


def read_off(path):
    tokens = open(path).read().split()
    if tokens[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    vals = np.array(tokens[4 : 4 + 3 * nv], dtype=float).reshape(nv, 3)
    faces = np.array(tokens[4 + 3 * nv : 4 + 3 * nv + 4 * nf], dtype=np.int64).reshape(nf, 4)
    return vals[:, :2], faces[:, 1:]
