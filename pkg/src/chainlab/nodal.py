"""Nodal domains of discrete eigenfunctions: extraction, Courant report,
and the bulk/boundary/corner/neck classification by mass fractions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ClassificationGapError, NullEigenfunctionError, ParamError
from .fem import rayleigh_on_region
from .partition import (
    cutoffs_from_distances,
    classifier_delta,
    delta_bound,
    partition_params,
    point_distances,
)

BULK, BOUNDARY, CORNER, NECK = 0, 1, 2, 3
CLASS_NAMES = ("bulk", "boundary", "corner", "neck")

# 7-point degree-5 rule on the reference triangle (barycentric, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
QUAD_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _B1, _B1],
        [_B1, _A1, _B1],
        [_B1, _B1, _A1],
        [_A2, _B2, _B2],
        [_B2, _A2, _B2],
        [_B2, _B2, _A2],
    ]
)
QUAD_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


@dataclass
class NodalDomain:
    triangles: np.ndarray
    sign: int
    area: float
    mass: float


@dataclass
class NodalDecomposition:
    domains: list
    zero_tol: float
    tri_label: np.ndarray  # domain index per triangle, -1 when unsigned or filtered

    @property
    def nu(self):
        return len(self.domains)

    def masses(self):
        return np.array([d.mass for d in self.domains])


def _triangle_signs(vals):
    s = np.sign(vals)
    pos = (s > 0).sum(axis=1)
    neg = (s < 0).sum(axis=1)
    out = np.zeros(len(vals), dtype=np.int8)
    out[pos > neg] = 1
    out[neg > pos] = -1
    tie = (pos == neg) & (pos > 0)
    avg = np.sign(vals[tie].sum(axis=1)).astype(np.int8)
    out[tie] = avg
    return out


def extract_nodal_domains(mesh, pair, zero_tol=None, mass_matrix_data=None) -> NodalDecomposition:
    """Connected sign components of a P1 eigenfunction.

    Vertices with ``|u| < zero_tol`` carry no sign.  A triangle takes the
    sign of its signed vertices when they agree and the majority sign
    otherwise (a one-to-one tie goes to the sign of the vertex average).
    Edge-adjacent triangles of equal sign are merged; components with mass
    below ``zero_tol**2`` are discarded.
    """
    u = np.asarray(getattr(pair, "coeffs", pair), dtype=float)
    umax = float(np.abs(u).max())
    if zero_tol is None:
        zero_tol = 1e-8 * umax
    if umax < zero_tol or umax == 0.0:
        raise NullEigenfunctionError("eigenfunction vanishes below the zero tolerance")
    v = np.where(np.abs(u) < zero_tol, 0.0, u)
    tri_sign = _triangle_signs(v[mesh.triangles])

    nb = mesh.neighbors
    T = len(mesh.triangles)
    rows = np.repeat(np.arange(T), 3)
    cols = nb.ravel()
    ok = cols >= 0
    rows, cols = rows[ok], cols[ok]
    same = (tri_sign[rows] == tri_sign[cols]) & (tri_sign[rows] != 0)
    g = sp.coo_matrix((np.ones(same.sum()), (rows[same], cols[same])), shape=(T, T))
    _, comp = connected_components(g, directed=False)

    areas = mesh.areas
    uu = u[mesh.triangles]
    tri_mass = areas * (np.sum(uu * uu, axis=1) + np.sum(uu, axis=1) ** 2) / 12.0
    signed = np.flatnonzero(tri_sign != 0)
    order = np.argsort(comp[signed], kind="stable")
    groups = np.split(signed[order], np.flatnonzero(np.diff(comp[signed][order])) + 1)
    domains = []
    label = np.full(T, -1)
    for tris in groups:
        if len(tris) == 0:
            continue
        tris = np.sort(tris)
        mass = float(tri_mass[tris].sum())
        if mass < zero_tol**2:
            continue
        label[tris] = len(domains)
        domains.append(NodalDomain(tris, int(tri_sign[tris[0]]), float(areas[tris].sum()), mass))
    # deterministic order: by first triangle index
    perm = np.argsort([d.triangles[0] for d in domains], kind="stable")
    domains = [domains[k] for k in perm]
    remap = np.full(len(perm) + 1, -1)
    remap[perm] = np.arange(len(perm))
    label = np.where(label >= 0, remap[label], -1)
    return NodalDecomposition(domains, zero_tol, label)


def domain_rayleigh(mesh, pair, domain: NodalDomain, data=None):
    """``(energy, mass, ratio)`` of ``u`` over one nodal domain.

    The integrals run over ``{sign u > 0}`` inside the domain's triangles and
    their edge neighbours, so the sub-triangle pieces cut off by the discrete
    nodal line are counted on both sides.  For an eigenfunction the ratio
    approaches ``mu`` (integrate by parts with ``u = 0`` on the nodal line).
    """
    nb = mesh.neighbors[domain.triangles].ravel()
    tris = np.union1d(domain.triangles, nb[nb >= 0])
    return rayleigh_on_region(mesh, pair, tris, data, sign=domain.sign)


# --------------------------------------------------------------------------
# Courant report


def eigenvalue_clusters(mu, rtol=2e-3, atol=None):
    """Group consecutive eigenvalues whose gap is below ``rtol`` times their
    size (plus ``atol``).  Returns ``(first, last)`` 1-based indices per pair."""
    mu = np.asarray(mu, dtype=float)
    if atol is None:
        atol = 1e-8 * max(float(mu[1]) if len(mu) > 1 else 1.0, 1e-300)
    first = np.empty(len(mu), dtype=int)
    last = np.empty(len(mu), dtype=int)
    start = 0
    for k in range(1, len(mu) + 1):
        if k == len(mu) or mu[k] - mu[k - 1] > rtol * abs(mu[k]) + atol:
            first[start:k] = start + 1
            last[start:k] = k
            start = k
    return first, last


@dataclass
class CourantRow:
    m: int
    mu: float
    nu: int
    cluster: int  # first index of the eigenvalue cluster
    cluster_last: int
    sharp: bool
    violation: bool


def courant_report(spectrum, decomps, rtol=2e-3):
    """Courant bound and sharpness per eigenpair.

    A pair is sharp when ``nu`` equals the first index of its eigenvalue
    cluster (only then is ``mu_k < mu_m`` for every ``k < m``).  The bound
    check allows the last index of the cluster, since the discretization
    splits degenerate eigenvalues and the solver basis is arbitrary.
    """
    first, last = eigenvalue_clusters(spectrum.mu[: len(decomps)], rtol)
    rows = []
    for k, dec in enumerate(decomps):
        nu = dec.nu
        rows.append(
            CourantRow(
                m=k + 1,
                mu=float(spectrum.mu[k]),
                nu=nu,
                cluster=int(first[k]),
                cluster_last=int(last[k]),
                sharp=nu == first[k],
                violation=nu > last[k],
            )
        )
    return rows


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassifierParams:
    epsilon: float = 0.1
    beta: float = 0.375

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ParamError("epsilon must lie in (0, 1/2)")
        if not 0 < self.beta < 0.5:
            raise ParamError("beta must lie in (0, 1/2)")

    def delta(self, area, mu):
        return classifier_delta(area, mu, self.beta)


@dataclass
class ClassCounts:
    nu: int
    counts: tuple  # (nu0, nu1, nu2, nu3)
    membership: np.ndarray  # bitmask per domain, bit j for class j
    fractions: np.ndarray  # (nu, 6): u0, u1, u2, u3, u4 in pieces, u4 in necks
    delta: float
    delta_formula: float
    delta_clamped: bool

    @property
    def nu0(self):
        return self.counts[0]

    @property
    def nu1(self):
        return self.counts[1]

    @property
    def nu2(self):
        return self.counts[2]

    @property
    def nu3(self):
        return self.counts[3]


class QuadratureCache:
    """Quadrature points of a mesh with their (delta independent) distances."""

    def __init__(self, mesh, dom):
        self.mesh = mesh
        self.dom = dom
        p = mesh.vertices[mesh.triangles]  # (T, 3, 2)
        self.points = np.einsum("qk,tkd->tqd", QUAD_BARY, p).reshape(-1, 2)
        self.weights = (mesh.areas[:, None] * QUAD_W[None, :]).ravel()
        self.distances = point_distances(dom, self.points)
        self.in_neck = self.distances.in_neck.any(axis=0) if len(dom.necks) else np.zeros(
            len(self.points), dtype=bool
        )

        self._chi = {}

    def chi_squared(self, pparams):
        """Squared cutoffs at the quadrature points, memoized per ``delta``
        (the clamped ``delta`` is shared by many eigenpairs)."""
        key = pparams.delta
        if key not in self._chi:
            if len(self._chi) > 8:
                self._chi.clear()
            self._chi[key] = cutoffs_from_distances(self.distances, pparams).chi ** 2
        return self._chi[key]

    def values(self, coeffs):
        return np.einsum("qk,tk->tq", QUAD_BARY, coeffs[self.mesh.triangles]).ravel()


def class_fractions(cache: QuadratureCache, pair, decomp, pparams):
    """Per-domain squared masses of ``chi_j u`` (with the two ``u4`` parts)."""
    chi2 = cache.chi_squared(pparams)
    u = cache.values(pair.coeffs)
    wu2 = cache.weights * u * u
    cols = np.empty((len(u), 6))
    cols[:, :4] = chi2[:, :4] * wu2[:, None]
    c4 = chi2[:, 4] * wu2
    cols[:, 4] = np.where(cache.in_neck, 0.0, c4)
    cols[:, 5] = np.where(cache.in_neck, c4, 0.0)
    per_tri = cols.reshape(len(cache.mesh.triangles), len(QUAD_W), 6).sum(axis=1)
    lab = decomp.tri_label
    ok = lab >= 0
    return np.stack(
        [np.bincount(lab[ok], weights=per_tri[ok, j], minlength=decomp.nu) for j in range(6)],
        axis=1,
    )


def classify_nodal_domains(mesh, pair, decomp, dom, consts, params: ClassifierParams,
                           cache: QuadratureCache | None = None, delta=None) -> ClassCounts:
    """Apply the mass-fraction thresholds to every nodal domain.

    ``delta`` defaults to ``|Omega|^(1/2 - beta) mu^(-beta)``, clamped to the
    largest admissible value when the formula exceeds it.
    """
    cache = cache or QuadratureCache(mesh, dom)
    formula = params.delta(dom.area, pair.mu) if delta is None else delta
    bound = delta_bound(dom, consts)
    d = min(formula, bound * (1 - 1e-12))
    pparams = partition_params(dom, consts, d)
    frac = class_fractions(cache, pair, decomp, pparams)
    total = frac.sum(axis=1)
    eps = params.epsilon
    bulk = frac[:, 0] >= (1 - eps) * total
    boundary = frac[:, 1] >= eps / 4 * total
    corner = (frac[:, 2] >= eps / 4 * total) | (frac[:, 4] >= eps / 8 * total)
    neck = (frac[:, 3] >= eps / 4 * total) | (frac[:, 5] >= eps / 8 * total)
    member = (
        bulk.astype(int) << BULK
        | boundary.astype(int) << BOUNDARY
        | corner.astype(int) << CORNER
        | neck.astype(int) << NECK
    )
    if np.any(member == 0):
        k = int(np.flatnonzero(member == 0)[0])
        raise ClassificationGapError(f"nodal domain {k} belongs to no class: {frac[k] / total[k]}")
    counts = tuple(int(x.sum()) for x in (bulk, boundary, corner, neck))
    return ClassCounts(
        nu=decomp.nu,
        counts=counts,
        membership=member,
        fractions=frac / total[:, None],
        delta=d,
        delta_formula=formula,
        delta_clamped=bool(formula > d),
    )
