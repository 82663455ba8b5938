"""P1 finite elements for the Laplacian: assembly, eigen-solves, counting.

Stiffness and consistent mass matrices are assembled element by element.
Eigenpairs come from shift-invert Lanczos (ARPACK through
:func:`scipy.sparse.linalg.eigsh`) on a sparse LU factorization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import (
    AssemblyError,
    DegenerateRegionError,
    SolverError,
    TruncationError,
)

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True, eq=False)
class ElementData:
    """Per-triangle gradients of the hat functions and areas."""

    grads: np.ndarray  # (T, 3, 2)
    areas: np.ndarray  # (T,)

    @cached_property
    def stiffness(self):
        return self.areas[:, None, None] * np.einsum("tid,tjd->tij", self.grads, self.grads)

    @cached_property
    def mass(self):
        return self.areas[:, None, None] * _MASS_REF[None, :, :]


def element_data(mesh) -> ElementData:
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    if np.any(area < 1e-14 * area.sum()):
        raise AssemblyError("degenerate triangle in mesh")
    # gradient of hat k is the rotated opposite edge divided by 2 * area
    grads = np.empty((len(p), 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        grads[:, k, 0] = -e[:, 1] / det
        grads[:, k, 1] = e[:, 0] / det
    return ElementData(grads, area)


def assemble(mesh, data: ElementData | None = None):
    """Global stiffness ``K`` and consistent mass ``M`` (CSR, symmetric)."""
    data = data or element_data(mesh)
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = len(mesh.vertices)
    # COO -> CSR sums duplicates in a fixed order, so results are reproducible
    K = sp.coo_matrix((data.stiffness.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((data.mass.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    return K.tocsr(), M.tocsr()


@dataclass(frozen=True, eq=False)
class EigenPair:
    mu: float
    coeffs: np.ndarray
    index: int  # 1-based position in the spectrum
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ordered eigenpairs of one discrete problem.

    ``coeffs[:, k]`` is the vertex coefficient vector of pair ``k + 1``.
    """

    mu: np.ndarray
    coeffs: np.ndarray
    bc: str
    residuals: np.ndarray
    converged: bool = True
    warnings: tuple = ()
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.mu)

    def __getitem__(self, k) -> EigenPair:
        return EigenPair(float(self.mu[k]), self.coeffs[:, k], k + 1, float(self.residuals[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))


def _expand(P, coeffs):
    return coeffs if P is None else P @ coeffs


def _fix_sign(vecs):
    k = np.argmax(np.abs(vecs), axis=0)
    s = np.sign(vecs[k, np.arange(vecs.shape[1])])
    s[s == 0] = 1.0
    return vecs * s


def periodic_projector(n, dof_map):
    """Matrix ``P`` with ``P[i, dof_map[i]] = 1`` (identifies vertices)."""
    dof_map = np.asarray(dof_map)
    _, dofs = np.unique(dof_map, return_inverse=True)
    return sp.csr_matrix((np.ones(n), (np.arange(n), dofs)), shape=(n, dofs.max() + 1))


def solve(
    K,
    M,
    bc="neumann",
    count=20,
    seed=0,
    dirichlet_nodes=None,
    dof_map=None,
    sigma=None,
    tol=1e-9,
    maxiter=None,
    mesh=None,
) -> Spectrum:
    """Lowest ``count`` eigenpairs of ``K u = mu M u``.

    Parameters
    ----------
    bc : {"neumann", "dirichlet"}
        Dirichlet conditions eliminate the rows and columns of
        ``dirichlet_nodes`` (default: the mesh boundary nodes).
    dof_map : array, optional
        Vertex to degree-of-freedom map identifying periodic vertices.
    sigma : float, optional
        Shift; defaults to ``-1e-8`` times the operator scale.

    Returns
    -------
    Spectrum
        ``converged`` is False (and a warning recorded) when ARPACK stopped
        early or a residual exceeds ``tol``; the converged prefix is kept.
    """
    if bc not in ("neumann", "dirichlet"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    n_full = K.shape[0]
    P = None
    if dof_map is not None:
        P = periodic_projector(n_full, dof_map)
    if bc == "dirichlet":
        if dirichlet_nodes is None:
            if mesh is None:
                raise SolverError("dirichlet solve needs boundary nodes")
            dirichlet_nodes = mesh.boundary_nodes
        dirichlet_nodes = np.asarray(dirichlet_nodes)
        if len(dirichlet_nodes) == 0:
            raise SolverError("dirichlet solve needs boundary nodes")
        keep = np.ones(n_full, dtype=bool)
        keep[dirichlet_nodes] = False
        E = sp.identity(n_full, format="csr")[:, np.flatnonzero(keep)]
        P = E if P is None else _restrict_periodic(P, keep)
    Kr = K if P is None else (P.T @ K @ P).tocsc()
    Mr = M if P is None else (P.T @ M @ P).tocsc()
    dim = Kr.shape[0]
    if not 0 < count < dim / 2:
        raise SolverError(f"requested {count} pairs from a problem of dimension {dim}")

    scale = float(Kr.diagonal().max() / Mr.diagonal().max())
    if sigma is None:
        sigma = -1e-8 * scale
    try:
        lu = sla.splu((Kr - sigma * Mr).tocsc())
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    op = sla.LinearOperator(Kr.shape, matvec=lu.solve, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(dim)
    notes = []
    ncv = min(dim - 1, max(2 * count + 1, count + 32))
    try:
        vals, vecs = sla.eigsh(
            Kr, k=count, M=Mr, sigma=sigma, which="LM", OPinv=op, v0=v0,
            ncv=ncv, tol=tol * 1e-3, maxiter=maxiter,
        )
        converged = True
    except sla.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        converged = False
        notes.append(f"ARPACK converged {len(vals)} of {count} pairs")
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    # M-normalize
    norms = np.sqrt(np.einsum("ij,ij->j", vecs, Mr @ vecs))
    vecs = _fix_sign(vecs / norms)
    knorm = sla.norm(Kr, 1)
    res = np.linalg.norm(Kr @ vecs - (Mr @ vecs) * vals, axis=0) / (
        knorm * np.linalg.norm(vecs, axis=0)
    )
    if np.any(res > tol):
        converged = False
        notes.append(f"largest relative residual {res.max():.2e} exceeds {tol:.0e}")
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    full = _expand(P, vecs)
    return Spectrum(
        mu=np.asarray(vals, dtype=float),
        coeffs=np.ascontiguousarray(full),
        bc=bc,
        residuals=res,
        converged=converged,
        warnings=tuple(notes),
        provenance={"dimension": dim, "sigma": sigma, "seed": seed, "n_vertices": n_full},
    )


def _restrict_periodic(P, keep):
    # drop the degrees of freedom carried by any eliminated vertex
    P = P.tocsr()
    killed = np.unique(P[~keep].indices)
    cols = np.setdiff1d(np.arange(P.shape[1]), killed)
    return P[:, cols].tocsr()


def solve_mesh(mesh, bc="neumann", count=20, seed=0, **kw) -> Spectrum:
    K, M = assemble(mesh)
    spec = solve(K, M, bc=bc, count=count, seed=seed, mesh=mesh, **kw)
    spec.provenance["h_max"] = mesh.h_max
    return spec


def counting_function(spec: Spectrum, mu: float) -> int:
    """``#{k : mu_k < mu}`` counted with multiplicity.

    Every eigenvalue below ``mu`` is known when ``mu`` does not exceed the
    largest computed eigenvalue; beyond that the count would be truncated.
    """
    if mu > spec.mu[-1]:
        raise TruncationError(
            f"mu={mu} exceeds the largest computed eigenvalue {spec.mu[-1]:.6g}"
        )
    return int(np.count_nonzero(spec.mu < mu))


# --------------------------------------------------------------------------
# Rayleigh quotients on subregions


def _clip_weights(vals, sign):
    """Exact integrals of ``1`` and ``u^2`` over ``{sign * u > 0}`` in a
    reference triangle (area 1), for linear ``u`` with nodal ``vals``.

    Returns ``(area_fraction, mass_fraction)`` arrays.
    """
    v = sign * vals
    pos = v > 0
    area = np.zeros(len(v))
    mass = np.zeros(len(v))
    full = pos.all(axis=1)
    vv = vals[full]
    area[full] = 1.0
    mass[full] = (np.sum(vv**2, axis=1) + np.sum(vv, axis=1) ** 2) / 12.0
    one = pos.sum(axis=1) == 1
    two = pos.sum(axis=1) == 2
    for mask, single_pos in ((one, True), (two, False)):
        if not mask.any():
            continue
        vm = v[mask]
        # index of the vertex alone on its side
        lone = np.argmax(vm > 0, axis=1) if single_pos else np.argmax(vm <= 0, axis=1)
        idx = np.arange(len(vm))
        a = vm[idx, lone]
        b = vm[idx, (lone + 1) % 3]
        c = vm[idx, (lone + 2) % 3]
        # zero crossings along the two edges leaving the lone vertex
        tb = np.where(a != b, a / (a - b), 0.0)
        tc = np.where(a != c, a / (a - c), 0.0)
        # sub-triangle at the lone vertex: area fraction tb * tc; u linear on it
        # with values a, 0, 0, so int u^2 = area * a^2 / 6
        sub_area = tb * tc
        sub_mass = sub_area * a * a / 6.0
        tot_mass = (np.sum(vm**2, axis=1) + np.sum(vm, axis=1) ** 2) / 12.0
        if single_pos:
            area[mask] = sub_area
            mass[mask] = sub_mass
        else:
            area[mask] = 1.0 - sub_area
            mass[mask] = tot_mass - sub_mass
    return area, mass


def rayleigh_on_region(mesh, pair: EigenPair, region, data: ElementData | None = None, sign=None):
    """Dirichlet energy, mass and their ratio over a set of triangles.

    ``region`` is a boolean mask or index array of triangles.  With ``sign``
    (``+1`` or ``-1``) the integrals are restricted to the part of each
    triangle where ``sign * u > 0``, integrated exactly for the P1 function.
    """
    data = data or element_data(mesh)
    tris = np.asarray(region)
    if tris.dtype == bool:
        tris = np.flatnonzero(tris)
    if len(tris) == 0:
        raise DegenerateRegionError("empty region")
    u = pair.coeffs[mesh.triangles[tris]]
    area = data.areas[tris]
    if sign is None:
        energy = float(np.einsum("ti,tij,tj->", u, data.stiffness[tris], u))
        mass = float(np.einsum("ti,tij,tj->", u, data.mass[tris], u))
    else:
        grad = np.einsum("ti,tid->td", u, data.grads[tris])
        frac_area, frac_mass = _clip_weights(u, sign)
        energy = float(np.sum(area * frac_area * np.einsum("td,td->t", grad, grad)))
        mass = float(np.sum(area * frac_mass))
    if mass <= 0.0:
        raise DegenerateRegionError("region carries no mass")
    return energy, mass, energy / mass
