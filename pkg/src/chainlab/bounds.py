"""Numerical checks of the quantitative inequalities behind the nodal count
bounds: the Pleijel constant, the per-class counting bounds, the Weyl lower
bound, the cylinder Faber-Krahn inequality, linear growth of the boundary
neighbourhood area and the width-uniform Courant-sharp certificate.

Constants that only exist in the analysis are fitted from data and
reported; the inequalities that hold for every domain are asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParamError, TruncationError
from .geometry import boundary_neighborhood_area
from .special import j0_zero

KINDS = ("bulk", "boundary", "corner", "neck")


def disc_eigenvalue() -> float:
    """First Dirichlet eigenvalue of the unit disc, ``j_{0,1}^2``."""
    return j0_zero() ** 2


def pleijel_constant() -> float:
    """``4 / j_{0,1}^2``, the limit of ``nu_m / m`` allowed by Pleijel's theorem."""
    return 4.0 / disc_eigenvalue()


@dataclass
class BoundReport:
    """One measured inequality ``lhs <= rhs``.

    ``tol`` is the absolute slack granted to the comparison (zero unless a
    discretization error is being accounted for).  ``log`` carries
    diagnostics that are reported but never asserted.
    """

    id: str
    lhs: float
    rhs: float
    constants: dict = field(default_factory=dict)
    context: dict = field(default_factory=dict)
    tol: float = 0.0
    log: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return bool(self.lhs <= self.rhs + self.tol)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


# --------------------------------------------------------------------------
# per-class bounds


def _check_params(x, eps, beta):
    if not np.all(np.asarray(x) > 0):
        raise ParamError("x = |Omega| mu must be positive")
    if not 0 < eps < 0.5:
        raise ParamError("epsilon must lie in (0, 1/2)")
    if not 0 < beta < 0.5:
        raise ParamError("beta must lie in (0, 1/2)")


def _class_terms(kind, x, eps, beta):
    """``(a, b)`` with ``class_bound = a + C * b``."""
    x = np.asarray(x, dtype=float)
    if kind == "bulk":
        s = 1.0 / (math.pi * disc_eigenvalue())
        return s * (1 + eps) / (1 - eps) * x, s * (1 + 1 / eps) / (1 - eps) * x ** (2 * beta)
    if kind == "boundary":
        return np.zeros_like(x), x ** (1 - beta) / eps
    if kind == "corner":
        return np.zeros_like(x), x ** (3 - 6 * beta) / eps**4
    if kind == "neck":
        return np.zeros_like(x), x ** (1 - beta) / eps + x ** (3 - 6 * beta) / eps**4
    raise ParamError(f"unknown class {kind!r}; expected one of {KINDS}")


def class_bound(kind, x, eps=0.1, beta=0.375, C=1.0):
    """Upper bound on the number of nodal domains of one class.

    Parameters
    ----------
    kind : {"bulk", "boundary", "corner", "neck"}
    x : float or array
        Normalized eigenvalue ``|Omega| mu``.
    eps, beta : float
        Classifier parameters, both in ``(0, 1/2)``.
    C : float
        The (fitted) constant in front of the lower order terms.
    """
    _check_params(x, eps, beta)
    a, b = _class_terms(kind, x, eps, beta)
    out = a + C * b
    return float(out) if np.ndim(out) == 0 else out


def fit_constants(measured, kind, eps=0.1, beta=0.375) -> float:
    """Smallest ``C >= 0`` with ``class_bound(kind, x, C=C) >= nu`` at every
    measured ``(x, nu)`` point."""
    data = np.asarray(list(measured), dtype=float).reshape(-1, 2)
    if len(data) == 0:
        raise ParamError("no data points to fit")
    x, nu = data[:, 0], data[:, 1]
    _check_params(x, eps, beta)
    a, b = _class_terms(kind, x, eps, beta)
    return float(max(0.0, np.max((nu - a) / b)))


def class_reports(x, counts, eps, beta, constants, context=None):
    """One report per class comparing ``nu_j`` with its fitted bound."""
    out = []
    for kind, nu, C in zip(KINDS, counts, constants):
        out.append(
            BoundReport(
                f"class-{kind}",
                float(nu),
                class_bound(kind, x, eps, beta, C),
                {"C": C, "eps": eps, "beta": beta},
                dict(context or {}, x=x),
                tol=1e-9 * max(1.0, float(nu)),  # a fitted C makes the tightest point an equality
            )
        )
    return out


def cover_report(nu, counts, context=None) -> BoundReport:
    """``nu <= nu0 + nu1 + nu2 + nu3``: every nodal domain lies in some class."""
    return BoundReport("class-cover", float(nu), float(sum(counts)), context=dict(context or {}))


def courant_reports(rows, context=None):
    """Courant bound ``nu(u_m) <= m`` per row of a Courant report, with the
    eigenvalue cluster's last index as ``m``."""
    return [
        BoundReport(
            "courant",
            float(r.nu),
            float(r.cluster_last),
            context=dict(context or {}, m=r.m, mu=r.mu, cluster=r.cluster),
            log={"sharp": r.sharp},
        )
        for r in rows
    ]


def hinge_value(eps=0.1) -> float:
    """Leading coefficient of the bulk bound, ``(1+eps)/((1-eps) pi j^2)``.

    The final contradiction needs it below the Weyl coefficient ``1/(4 pi)``.
    """
    _check_params(1.0, eps, 0.375)
    return (1 + eps) / ((1 - eps) * math.pi * disc_eigenvalue())


def hinge_report(eps=0.1) -> BoundReport:
    return BoundReport("hinge", hinge_value(eps), 1.0 / (4.0 * math.pi), {"eps": eps})


def second_term_ratios(kind, xs, eps=0.1, beta=0.375, C=1.0):
    """``class_bound(x) / x`` minus the leading coefficient (zero except for
    the bulk class), which should decrease in ``x``."""
    xs = np.asarray(xs, dtype=float)
    lead = hinge_value(eps) if kind == "bulk" else 0.0
    return class_bound(kind, xs, eps, beta, C) / xs - lead


# --------------------------------------------------------------------------
# Weyl lower bound


def square_neumann_eigenvalues(side, mu_max):
    """Every Neumann eigenvalue ``(pi/side)^2 (m^2 + n^2) <= mu_max`` of a square."""
    k = math.pi / side
    n = int(math.isqrt(int(mu_max / k**2)) + 1)
    m = np.arange(n + 1)
    vals = (k**2 * (m[:, None] ** 2 + m[None, :] ** 2)).ravel()
    return np.sort(vals[vals <= mu_max])


def _count_below(mu_values, mu, complete_to):
    if mu > complete_to:
        raise TruncationError(f"mu={mu} exceeds the range {complete_to:.6g} where the spectrum is complete")
    return int(np.count_nonzero(np.asarray(mu_values) < mu))


def weyl_check(spectrum, area, mu_grid, complete_to=None):
    """Weyl deficit ``|Omega| mu / (4 pi) - N(mu)`` against ``C (|Omega| mu)^(3/4)``.

    ``spectrum`` is a :class:`~chainlab.fem.Spectrum` or a sorted array of
    eigenvalues.  An array is taken as complete up to ``complete_to``
    (default: its largest entry).  ``C`` is the smallest nonnegative
    constant valid on the whole grid; the signed supremum of
    ``deficit / x^(3/4)`` and the Weyl ratio are logged per point.
    """
    mu_values = np.asarray(getattr(spectrum, "mu", spectrum), dtype=float)
    if complete_to is None:
        complete_to = float(mu_values[-1])
    grid = np.asarray(mu_grid, dtype=float)
    x = area * grid
    lead = x / (4.0 * math.pi)
    N = np.array([_count_below(mu_values, m, complete_to) for m in grid])
    deficit = lead - N
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(x > 0, deficit / x**0.75, 0.0)
    sup = float(scaled.max())
    C = max(0.0, sup)
    reports = []
    for k, m in enumerate(grid):
        reports.append(
            BoundReport(
                "weyl",
                float(deficit[k]),
                float(C * x[k] ** 0.75),
                {"C": C},
                {"mu": float(m), "area": area},
                log={
                    "N": int(N[k]),
                    "ratio": float(N[k] / lead[k]) if lead[k] > 0 else math.nan,
                    "scaled_deficit": float(scaled[k]),
                    "signed_sup": sup,
                },
            )
        )
    return reports


# --------------------------------------------------------------------------
# cylinder Faber-Krahn


def cylinder_lemma_bound(P, lam) -> float:
    """``min(pi j^2 / lam, P j / sqrt(lam))``: lower bound for the area of a
    region on the cylinder of circumference ``P`` with first Dirichlet
    eigenvalue ``lam``."""
    j2 = disc_eigenvalue()
    return min(math.pi * j2 / lam, P * math.sqrt(j2 / lam))


def cylinder_conjectured_bound(P, lam) -> float:
    """``min(pi j^2 / lam, P pi / sqrt(lam))``; sharp for bands and discs."""
    return min(math.pi * disc_eigenvalue() / lam, P * math.pi / math.sqrt(lam))


def cylinder_fk_check(region, h, lam=None, seed=0) -> BoundReport:
    """Faber-Krahn on the cylinder: ``lemma bound <= Area(region)``.

    The conjectured sharp bound and the two single-branch values (the band
    value ``P pi / sqrt(lam)`` and the disc value ``pi j^2 / lam``) are
    logged for comparison only.
    """
    if lam is None:
        lam, _ = region.first_eigenvalue(h, seed=seed)
    area = region.area
    j2 = disc_eigenvalue()
    return BoundReport(
        "cylinder-fk",
        cylinder_lemma_bound(region.P, lam),
        area,
        context={"P": region.P, "kind": region.kind, "lambda": lam, "h": h, **region.info},
        log={
            "conjectured": cylinder_conjectured_bound(region.P, lam),
            "band_value": region.P * math.pi / math.sqrt(lam),
            "disc_value": math.pi * j2 / lam,
        },
    )


# --------------------------------------------------------------------------
# boundary neighbourhood growth


def m_linear_threshold(dom, consts) -> float:
    """Largest ``t`` for which linear growth of ``M(t)`` is claimed."""
    kap = math.inf if consts.kappa_star == 0 else 1.0 / consts.kappa_star
    return 0.75 * dom.perimeter * min(consts.tau_star * consts.delta_star, kap)


def m_linear_check(dom, consts, t_grid):
    """Fit the smallest ``C`` with ``M(t) <= C L t`` on ``t_grid``.

    ``M(t)`` is the area within distance ``t`` of the boundary.  Returns one
    report per grid point, all sharing the fitted ``C``; ``log`` records the
    ratio ``M / (L t)`` and whether ``M`` is increasing along the grid.
    """
    t = np.sort(np.asarray(t_grid, dtype=float))
    limit = m_linear_threshold(dom, consts)
    if np.any(t <= 0) or np.any(t >= limit):
        raise ParamError(f"t must lie in (0, {limit:.6g})")
    M = np.array([boundary_neighborhood_area(dom, s) for s in t])
    ratio = M / (dom.perimeter * t)
    C = float(ratio.max())
    monotone = bool(np.all(np.diff(M) > 0))
    if not np.all(np.isfinite(M)):
        raise ParamError("boundary neighbourhood area is not finite")
    return [
        BoundReport(
            "m-linear",
            float(M[k]),
            C * dom.perimeter * float(t[k]),
            {"C": C},
            {"t": float(t[k]), "perimeter": dom.perimeter},
            tol=1e-12 * float(M[k]),
            log={"ratio": float(ratio[k]), "monotone": monotone},
        )
        for k in range(len(t))
    ]


# --------------------------------------------------------------------------
# Courant-sharp certificate


@dataclass
class WidthRecord:
    """Measurements for one member of a width family."""

    width: float
    area: float
    mu: np.ndarray
    nu: np.ndarray  # nodal counts for the leading eigenpairs
    sharp: np.ndarray  # bool per eigenpair


@dataclass
class SharpCertificate:
    rows: list  # dicts: width, last_sharp, x, computed, depth_ok
    certificate: float | None
    flatness: float | None
    pleijel: dict  # width -> (m, nu/m) arrays
    reports: list


def sharp_certificate(records) -> SharpCertificate:
    """Largest Courant-sharp normalized eigenvalue per width.

    For each width ``x_w = |Omega(w)| mu_m`` with ``m`` the largest sharp
    index; ``m = 1`` does not count, so a width with no sharp index above
    one has ``x_w = None``.  ``depth_ok`` records whether eigenpairs were
    computed up to three times that index.  The certificate is the largest
    ``x_w`` and the flatness is ``max x_w / min x_w``.
    """
    rows, pleijel = [], {}
    for rec in records:
        sharp = np.flatnonzero(np.asarray(rec.sharp)) + 1
        sharp = sharp[sharp > 1]
        n = len(rec.nu)
        last = int(sharp.max()) if len(sharp) else None
        x = rec.area * float(rec.mu[last - 1]) if last else None
        rows.append(
            {
                "width": rec.width,
                "last_sharp": last,
                "x": x,
                "computed": n,
                "depth_ok": bool(last is None or n >= 3 * last),
            }
        )
        m = np.arange(1, n + 1)
        pleijel[rec.width] = (m, np.asarray(rec.nu, dtype=float) / m)
    xs = [r["x"] for r in rows if r["x"] is not None]
    cert = max(xs) if xs else None
    flat = max(xs) / min(xs) if len(xs) == len(rows) and xs and min(xs) > 0 else None
    reports = [
        BoundReport(
            "sharp-certificate",
            r["x"],
            cert,
            {"C": cert},
            {"width": r["width"], "m": r["last_sharp"]},
            log={"depth_ok": r["depth_ok"], "flatness": flat},
        )
        for r in rows
        if r["x"] is not None
    ]
    return SharpCertificate(rows, cert, flat, pleijel, reports)


def square_nodal_table(side, count):
    """Analytic ``(mu, nu)`` of the first ``count`` Neumann eigenfunctions
    ``cos(m pi x / side) cos(n pi y / side)`` on a square, ordered by
    eigenvalue (ties by ``m``)."""
    k = int(math.isqrt(4 * count)) + 2
    m, n = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    m, n = m.ravel(), n.ravel()
    mu = (math.pi / side) ** 2 * (m**2 + n**2)
    order = np.lexsort((m, mu))[:count]
    return mu[order], ((m + 1) * (n + 1))[order]
