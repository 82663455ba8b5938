"""The delta-partition of a chain domain and its partition of unity.

Labels follow the successive set differences

    Omega2 (vertex discs) -> Omega4 (thin-neck ends) -> Omega3 (thin-neck
    body) -> Omega1 (boundary collar) -> Omega0 (the rest),

and the cutoffs ``chi_0..chi_4`` are built from quintic smoothstep profiles
of distances, normalized so that ``sum chi_j^2 = 1`` exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import shapely

from .errors import OutsideDomainError, ParamError, StraighteningError
from .geometry import CircularArc, RealizedDomain, segment_distance


class PartitionLabel(enum.IntEnum):
    Omega0 = 0
    Omega1 = 1
    Omega2 = 2
    Omega3 = 3
    Omega4 = 4


def delta_bound(dom: RealizedDomain, consts) -> float:
    """Largest admissible delta, ``min{L delta* / 20, L / (kappa* tau*)}``."""
    L = dom.perimeter
    first = L * consts.delta_star / 20.0
    denom = consts.kappa_star * consts.tau_star
    second = math.inf if denom == 0 else L / denom
    return min(first, second)


def admissible_delta(dom: RealizedDomain, consts, delta: float) -> bool:
    return bool(delta > 0 and delta <= delta_bound(dom, consts))


def classifier_delta(area, mu, beta):
    """``delta = |Omega|^(1/2 - beta) mu^(-beta)``."""
    if not 0 < beta < 0.5:
        raise ParamError("beta must lie in (0, 1/2)")
    if mu <= 0:
        return math.inf
    return area ** (0.5 - beta) * mu ** (-beta)


@dataclass(frozen=True)
class PartitionParams:
    delta: float
    tau_star: float
    kappa_star: float
    delta_star: float
    regimes: tuple  # "wide" or "thin" per neck

    @property
    def collar(self):
        return 0.75 * self.tau_star * self.delta

    def thin(self, k):
        return self.regimes[k] == "thin"


def partition_params(dom: RealizedDomain, consts, delta: float) -> PartitionParams:
    if not admissible_delta(dom, consts, delta):
        raise ParamError(
            f"delta={delta} is not admissible (bound {delta_bound(dom, consts):.4g})"
        )
    regimes = tuple("wide" if r.min_width > 4.0 * delta else "thin" for r in dom.necks)
    params = PartitionParams(delta, consts.tau_star, consts.kappa_star, consts.delta_star, regimes)
    centers = _disc_centers(dom, params)
    if len(centers) > 1:
        d = np.linalg.norm(centers[:, None] - centers[None, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() < 2.0 * delta:
            raise ParamError("vertex discs of radius delta overlap")
    return params


def _disc_centers(dom, params):
    pts = [dom.piece_vertex_points()]
    for rec in dom.necks:
        if not params.thin(rec.index):
            pts.append(rec.corners)
    return np.concatenate(pts).reshape(-1, 2)


# --------------------------------------------------------------------------
# distances (independent of delta, so they can be reused across eigenpairs)


@dataclass
class DistanceData:
    """Distances from sample points to every feature the partition uses.

    ``*_dir`` arrays hold unit vectors ``(x - nearest) / d`` (zero where
    ``d == 0``) and are only present when gradients were requested.
    """

    d_piece_vertex: np.ndarray
    d_corner: np.ndarray  # (n_necks, N)
    d_end: np.ndarray  # (n_necks, N)
    d_boundary: np.ndarray
    in_neck: np.ndarray  # (n_necks, N) bool
    dir_piece_vertex: np.ndarray | None = None
    dir_corner: np.ndarray | None = None
    dir_end: np.ndarray | None = None
    dir_boundary: np.ndarray | None = None


def _unit(diff, d):
    with np.errstate(invalid="ignore", divide="ignore"):
        u = diff / d[:, None]
    u[d == 0] = 0.0
    return u


def _point_set_distance(points, centers):
    if len(centers) == 0:
        return np.full(len(points), np.inf), np.zeros_like(points)
    diff = points[:, None, :] - centers[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    k = np.argmin(d, axis=1)
    idx = np.arange(len(points))
    return d[idx, k], _unit(diff[idx, k], d[idx, k])


def point_distances(dom: RealizedDomain, points, gradients=False) -> DistanceData:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    dv, uv = _point_set_distance(points, dom.piece_vertex_points())
    nn = len(dom.necks)
    dc = np.full((nn, n), np.inf)
    de = np.full((nn, n), np.inf)
    inn = np.zeros((nn, n), dtype=bool)
    uc = np.zeros((nn, n, 2))
    ue = np.zeros((nn, n, 2))
    for rec in dom.necks:
        k = rec.index
        dc[k], uc[k] = _point_set_distance(points, rec.corners)
        ends = [np.asarray(e) for e in rec.ends]
        a = np.concatenate([e[:-1] for e in ends])
        b = np.concatenate([e[1:] for e in ends])
        de[k], near = segment_distance(points, a, b)
        ue[k] = _unit(points - near, de[k])
        inn[k] = shapely.contains_xy(rec.polygon, points[:, 0], points[:, 1])
    # collinear subdivision nodes do not change distances but slow them down
    boundary = shapely.simplify(dom.polygon.boundary, 0.0)
    shapely.prepare(boundary)
    pts = shapely.points(points)
    db = shapely.distance(pts, boundary)
    data = DistanceData(dv, dc, de, db, inn)
    if gradients:
        line = shapely.shortest_line(pts, boundary)
        near = shapely.get_coordinates(line).reshape(n, 2, 2)[:, 1, :]
        data.dir_piece_vertex = uv
        data.dir_corner = uc
        data.dir_end = ue
        data.dir_boundary = _unit(points - near, db)
    return data


# --------------------------------------------------------------------------
# labels


def labels_from_distances(data: DistanceData, params: PartitionParams) -> np.ndarray:
    delta = params.delta
    n = len(data.d_boundary)
    lab = np.zeros(n, dtype=np.int8)
    d2 = data.d_piece_vertex.copy()
    thin_end = np.full(n, np.inf)
    in_thin = np.zeros(n, dtype=bool)
    for k, regime in enumerate(params.regimes):
        if regime == "wide":
            d2 = np.minimum(d2, data.d_corner[k])
        else:
            thin_end = np.minimum(thin_end, data.d_end[k])
            in_thin |= data.in_neck[k]
    is2 = d2 < delta
    is4 = ~is2 & (thin_end < delta)
    is3 = ~is2 & ~is4 & in_thin
    is1 = ~is2 & ~is4 & ~is3 & (data.d_boundary < params.collar)
    lab[is1] = PartitionLabel.Omega1
    lab[is2] = PartitionLabel.Omega2
    lab[is3] = PartitionLabel.Omega3
    lab[is4] = PartitionLabel.Omega4
    return lab


def classify_point(dom: RealizedDomain, params: PartitionParams, x) -> PartitionLabel:
    x = np.asarray(x, dtype=float)
    if not dom.contains(x[None, :], tol=dom.h * 1e-6)[0]:
        raise OutsideDomainError(f"point {x.tolist()} is outside the domain")
    data = point_distances(dom, x[None, :])
    return PartitionLabel(int(labels_from_distances(data, params)[0]))


# --------------------------------------------------------------------------
# cutoffs


def smoothstep(r):
    r = np.clip(r, 0.0, 1.0)
    return r * r * r * (r * (6.0 * r - 15.0) + 10.0)


def smoothstep_slope(r):
    inside = (r > 0.0) & (r < 1.0)
    rc = np.clip(r, 0.0, 1.0)
    return np.where(inside, 30.0 * rc * rc * (rc - 1.0) ** 2, 0.0)


def _falloff(d, start, width):
    """1 for ``d <= start``, 0 for ``d >= start + width``; value and d-slope."""
    r = (d - start) / width
    return 1.0 - smoothstep(r), -smoothstep_slope(r) / width


@dataclass
class CutoffValues:
    chi: np.ndarray  # (N, 5)
    grad: np.ndarray | None  # (N, 5, 2)

    @property
    def gradient_constant(self):
        return None if self.grad is None else float(np.linalg.norm(self.grad, axis=-1).max())


def cutoffs_from_distances(data: DistanceData, params: PartitionParams, gradients=False):
    """Partition of unity at the sample points behind ``data``.

    ``phi2`` (vertex discs) falls from 1 to 0 over ``[delta/4, delta/2]``,
    ``phi4`` (thin-neck ends) over the same range of end distance and the
    boundary profile ``b`` over ``[3/8, 3/4] tau* delta``.  Inside a thin
    neck the raw vector is ``(0, 0, 0, 1 - phi4, phi4)``; elsewhere it is
    ``((1-phi2)(1-phi4)(1-b), (1-phi2)(1-phi4) b, phi2, 0, phi4)``.
    """
    delta = params.delta
    n = len(data.d_boundary)
    # vertex-disc distance (wide-neck corners count as vertices)
    dv = data.d_piece_vertex.copy()
    gv = data.dir_piece_vertex.copy() if gradients else None
    de = np.full(n, np.inf)
    ge = np.zeros((n, 2)) if gradients else None
    in_thin = np.zeros(n, dtype=bool)
    for k, regime in enumerate(params.regimes):
        if regime == "wide":
            closer = data.d_corner[k] < dv
            dv = np.where(closer, data.d_corner[k], dv)
            if gradients:
                gv[closer] = data.dir_corner[k][closer]
        else:
            closer = data.d_end[k] < de
            de = np.where(closer, data.d_end[k], de)
            if gradients:
                ge[closer] = data.dir_end[k][closer]
            in_thin |= data.in_neck[k]

    p2, s2 = _falloff(dv, 0.25 * delta, 0.25 * delta)
    p4, s4 = _falloff(de, 0.25 * delta, 0.25 * delta)
    cb = 0.375 * params.tau_star * delta
    b, sb = _falloff(data.d_boundary, cb, cb)

    raw = np.zeros((n, 5))
    out = ~in_thin
    q = (1.0 - p2) * (1.0 - p4)
    raw[out, 0] = (q * (1.0 - b))[out]
    raw[out, 1] = (q * b)[out]
    raw[out, 2] = p2[out]
    raw[out, 4] = p4[out]
    raw[in_thin, 3] = 1.0 - p4[in_thin]
    raw[in_thin, 4] = p4[in_thin]
    norm = np.sqrt(np.einsum("ij,ij->i", raw, raw))
    chi = raw / norm[:, None]
    if not gradients:
        return CutoffValues(chi, None)

    g2 = s2[:, None] * gv
    g4 = s4[:, None] * ge
    gb = sb[:, None] * data.dir_boundary
    graw = np.zeros((n, 5, 2))
    gq = -g2 * (1.0 - p4)[:, None] - g4 * (1.0 - p2)[:, None]
    g0 = gq * (1.0 - b)[:, None] - q[:, None] * gb
    g1 = gq * b[:, None] + q[:, None] * gb
    graw[out, 0] = g0[out]
    graw[out, 1] = g1[out]
    graw[out, 2] = g2[out]
    graw[out, 4] = g4[out]
    graw[in_thin, 3] = -g4[in_thin]
    graw[in_thin, 4] = g4[in_thin]
    # d(r/|r|) = (dr - chi (chi . dr)) / |r|
    proj = np.einsum("ij,ijk->ik", chi, graw)
    grad = (graw - chi[:, :, None] * proj[:, None, :]) / norm[:, None, None]
    return CutoffValues(chi, grad)


class CutoffField:
    """Evaluator of ``(chi_0..chi_4)`` and their gradients for one delta."""

    def __init__(self, dom: RealizedDomain, params: PartitionParams):
        self.dom = dom
        self.params = params

    def __call__(self, points, gradients=True) -> CutoffValues:
        data = point_distances(self.dom, points, gradients=gradients)
        return cutoffs_from_distances(data, self.params, gradients=gradients)

    def gradient_constant(self, points):
        """Realized ``C* = max delta |grad chi_j|`` over the sample points."""
        vals = self(points, gradients=True)
        return self.params.delta * vals.gradient_constant


def cutoffs(dom: RealizedDomain, params: PartitionParams, x):
    """``(chi, grad)`` at one point or an array of points."""
    x = np.asarray(x, dtype=float)
    vals = CutoffField(dom, params)(np.atleast_2d(x))
    if x.ndim == 1:
        return vals.chi[0], vals.grad[0]
    return vals.chi, vals.grad


def sample_points(dom: RealizedDomain, n, seed=0):
    """``n`` uniform random points in the domain (rejection sampling)."""
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = dom.polygon.bounds
    out = []
    have = 0
    while have < n:
        m = max(64, int(1.5 * (n - have) * (x1 - x0) * (y1 - y0) / dom.area))
        p = rng.uniform([x0, y0], [x1, y1], size=(m, 2))
        p = p[shapely.contains_xy(dom.polygon, p[:, 0], p[:, 1])]
        out.append(p)
        have += len(p)
    return np.concatenate(out)[:n]


# --------------------------------------------------------------------------
# straightening maps


@dataclass
class StraighteningMap:
    """``F`` on the parameter rectangle ``[s0, s1] x [t0, t1]``."""

    kind: str
    rect: tuple
    forward: object
    jacobian: object
    jacobian_range: tuple


def straighten(dom: RealizedDomain, kind, ident, eta, consts, samples=33) -> StraighteningMap:
    """Straightening map of a piece side (``ident = (piece, arc)``) or a neck.

    Side maps are ``F(s, t) = gamma(s) + t n(s)`` on ``b_eta x [0, 3/4 tau* eta]``
    where ``b_eta`` is the part of the arc at distance at least ``eta`` from
    the piece vertices.  Neck maps rescale the transverse variable so that the
    parameter rectangle is ``[0, L] x (-w, w)``.
    """
    L = dom.perimeter
    if kind == "side":
        denom = consts.kappa_star * consts.tau_star
        limit = L * min(consts.delta_star, math.inf if denom == 0 else 1.0 / denom)
        if not 0 < eta <= limit * (1 + 1e-12):
            raise ParamError(f"eta={eta} exceeds the straightening limit {limit:.4g}")
        piece_idx, arc_idx = ident
        piece = dom.pieces[piece_idx]
        arc = piece.arcs[arc_idx]
        verts = piece.vertex_points()
        u = np.linspace(0.0, 1.0, 4 * samples + 1)
        pts = arc.point(u)
        if len(verts):
            keep = np.linalg.norm(pts[:, None] - verts[None], axis=-1).min(axis=1) >= eta
        else:
            keep = np.ones(len(u), dtype=bool)
        if not keep.any():
            raise StraighteningError("no part of the side lies eta away from the vertices")
        u0, u1 = u[keep][0], u[keep][-1]
        depth = 0.75 * consts.tau_star * eta
        ell = arc.length

        def gamma(s):
            return arc.point(np.asarray(s) / ell)

        def normal(s):
            t = arc.tangent(np.asarray(s) / ell)
            return np.stack([-t[..., 1], t[..., 0]], axis=-1)

        if isinstance(arc, CircularArc):
            curv = (1.0 if arc.a1 > arc.a0 else -1.0) / arc.radius
            signed_k = lambda s: np.full(np.shape(s), curv)  # noqa: E731
        elif arc.kind == "segment":
            signed_k = lambda s: np.zeros(np.shape(s))  # noqa: E731
        else:
            raise StraighteningError("sides given as polylines have no smooth normal field")

        def forward(s, t):
            s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
            return gamma(s) + t[..., None] * normal(s)

        def jac(s, t):
            s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
            return 1.0 - t * signed_k(s)

        spread = 0.75 * consts.tau_star * consts.kappa_star * eta / L
        lo, hi = 1.0 - spread, 1.0 + spread
        S, T = np.meshgrid(
            np.linspace(u0 * ell, u1 * ell, samples), np.linspace(0.0, depth, samples)
        )
        J = jac(S, T)
        if J.min() < lo - 1e-12 or J.max() > hi + 1e-12 or lo < 0.25 or hi > 1.75:
            raise StraighteningError(f"Jacobian samples in [{J.min():.4g}, {J.max():.4g}]")
        return StraighteningMap("side", (u0 * ell, u1 * ell, 0.0, depth), forward, jac, (lo, hi))

    if kind == "neck":
        try:
            rec = dom.necks[ident]
        except (IndexError, TypeError) as exc:
            raise ParamError(f"no neck {ident}") from exc
        neck = rec.spec
        t1, t2 = rec.interval
        w = rec.min_width
        scale = (t2 - t1) / (2.0 * w)

        def forward(s, t):
            s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
            return neck.homotopy(s, t1 + (t + w) * scale)

        def jac(s, t):
            s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
            return np.abs(neck.jacobian(s, t1 + (t + w) * scale)) * scale

        S, T = np.meshgrid(np.linspace(0, neck.length, samples), np.linspace(-w, w, samples))
        J = jac(S, T)
        if not np.all(np.isfinite(J)) or J.min() <= 0:
            raise StraighteningError("neck Jacobian degenerates")
        return StraighteningMap("neck", (0.0, neck.length, -w, w), forward, jac, (J.min(), J.max()))

    raise ParamError(f"unknown straightening kind {kind!r}")
