"""End-to-end runs: geometry, constants, mesh, spectrum, nodal domains and
bound reports, plus width sweeps over a family of chain domains."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bounds as B
from . import io
from .errors import ChainlabError, ConfigError, GeometryError, ParamError
from .fem import solve_mesh
from .geometry import DomainConfig, estimate_geometric_constants, load_config, minimum_width
from .mesh import triangulate, write_off
from .nodal import (
    ClassifierParams,
    QuadratureCache,
    classify_nodal_domains,
    courant_report,
    extract_nodal_domains,
)
from .svg import render_svg

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Settings of one run or sweep.

    ``neck_h`` is the mesh size inside the necks; by default it is the
    global ``h`` capped at a quarter of the thinnest neck width.
    """

    config: str | Path | DomainConfig
    h: float = 0.05
    n: int = 40
    eps: float = 0.1
    beta: float = 0.375
    seed: int = 0
    out: str | Path | None = None
    widths: tuple = ()
    render: tuple = (2,)
    neck_h: float | None = None
    vectors: bool = False
    classify: bool = True

    def validate(self):
        if self.n < 2:
            raise ParamError("eigencount must be at least 2")
        if not self.h > 0:
            raise ParamError("h must be positive")
        ClassifierParams(self.eps, self.beta)
        w = list(self.widths)
        if any(b >= a for a, b in zip(w[:-1], w[1:])):
            raise ParamError("sweep widths must be strictly decreasing")
        if any(m < 1 or m > self.n for m in self.render):
            raise ParamError("rendered eigenfunctions must lie within the eigencount")
        return self


def domain_config(cfg: RunConfig) -> DomainConfig:
    if isinstance(cfg.config, DomainConfig):
        return cfg.config
    return load_config(cfg.config)


@dataclass
class RunResult:
    dom: object
    consts: object
    mesh: object
    spectrum: object
    decomps: list
    courant: list
    counts: list
    reports: list
    files: list = field(default_factory=list)
    width: float | None = None


def geometry_resolution(spec: DomainConfig, h):
    """Boundary resolution: ``h``, or half the thinnest neck when that is smaller."""
    if not spec.necks:
        return h
    w = min(minimum_width(n, iv, h) for n, iv in zip(spec.necks, spec.widths.intervals))
    return min(h, 0.5 * w)


def neck_mesh_size(dom, h):
    if not dom.necks:
        return None
    w = min(n.min_width for n in dom.necks)
    return min(h, w / 4.0) if w / 3.0 < h else None


def _fit_reports(dom, counts, params):
    """Class bounds with constants fitted over the whole run."""
    top = max(mu for mu, _ in counts)
    # the zero mode has x = 0, where the bounds are not defined
    pts = [(dom.area * mu, c) for mu, c in counts if c is not None and mu > 1e-8 * top]
    if not pts:
        return []
    consts = [
        B.fit_constants([(x, c.counts[j]) for x, c in pts], kind, params.epsilon, params.beta)
        for j, kind in enumerate(B.KINDS)
    ]
    out = []
    for x, c in pts:
        out += B.class_reports(x, c.counts, params.epsilon, params.beta, consts,
                               {"mu": x / dom.area})
    return out


def run(cfg: RunConfig) -> RunResult:
    """Run the pipeline once and write its outputs when ``cfg.out`` is set."""
    cfg.validate()
    spec = domain_config(cfg)
    consts = estimate_geometric_constants(spec.pieces, spec.necks, supplied=spec.constants)
    dom = spec.build(geometry_resolution(spec, cfg.h))
    neck_h = cfg.neck_h if cfg.neck_h is not None else neck_mesh_size(dom, cfg.h)
    mesh = triangulate(dom, cfg.h, neck_h=neck_h)
    spectrum = solve_mesh(mesh, "neumann", count=cfg.n, seed=cfg.seed)
    decomps = [extract_nodal_domains(mesh, pair) for pair in spectrum]
    rows = courant_report(spectrum, decomps)

    params = ClassifierParams(cfg.eps, cfg.beta)
    counts = [None] * len(decomps)
    if cfg.classify:
        cache = QuadratureCache(mesh, dom)
        counts = [
            classify_nodal_domains(mesh, pair, dec, dom, consts, params, cache)
            for pair, dec in zip(spectrum, decomps)
        ]

    ctx = {"width": _width(dom), "h": cfg.h}
    reports = B.courant_reports(rows, ctx)
    reports += [B.cover_report(d.nu, c.counts, dict(ctx, m=k + 1))
                for k, (d, c) in enumerate(zip(decomps, counts)) if c is not None]
    reports += _fit_reports(dom, [(p.mu, c) for p, c in zip(spectrum, counts)], params)
    reports += _weyl_reports(dom, spectrum)
    reports += _m_linear_reports(dom, consts)
    reports.append(B.hinge_report(cfg.eps))

    result = RunResult(dom, consts, mesh, spectrum, decomps, rows, counts, reports,
                       width=_width(dom))
    if cfg.out is not None:
        result.files = write_run(result, cfg)
    return result


def _width(dom):
    return min((n.min_width for n in dom.necks), default=None)


def _weyl_reports(dom, spectrum, points=8):
    mu = spectrum.mu
    if len(mu) < 3 or mu[-1] <= mu[1]:
        return []
    grid = np.linspace(mu[1], mu[-1], points)
    return B.weyl_check(spectrum, dom.area, grid)


def _m_linear_reports(dom, consts, points=5):
    t_max = min(B.m_linear_threshold(dom, consts), 0.25 * dom.shortest_feature())
    return B.m_linear_check(dom, consts, t_max * np.arange(1, points + 1) / (points + 1))


def write_run(result: RunResult, cfg: RunConfig):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "spectrum.csv", out / "nodal.csv", out / "bounds.csv", out / "domain.off"]
    io.write_spectrum(files[0], result.spectrum)
    io.write_nodal(files[1], result.courant, result.counts)
    io.write_bounds(files[2], result.reports)
    write_off(result.mesh, files[3])
    for m in cfg.render:
        p = out / f"eigenfunction_{m:03d}.svg"
        render_svg(result.mesh, result.decomps[m - 1], p,
                   title=f"m={m} mu={result.spectrum.mu[m - 1]:.6g}")
        files.append(p)
    if cfg.vectors:
        p = out / "vectors.bin"
        io.write_vectors(p, result.spectrum.coeffs)
        files.append(p)
    return files


# --------------------------------------------------------------------------
# width sweeps


@dataclass
class SweepEntry:
    width: float
    record: B.WidthRecord | None
    error: str | None = None
    n_vertices: int | None = None


def _sweep_one(args):
    cfg, width = args
    try:
        spec = domain_config(cfg).with_width(width)
        sub = replace(cfg, config=spec, out=None, widths=(), render=())
        res = run(sub)
        rec = B.WidthRecord(
            width,
            res.dom.area,
            np.asarray(res.spectrum.mu),
            np.array([r.nu for r in res.courant]),
            np.array([r.sharp for r in res.courant]),
        )
        return SweepEntry(width, rec, None, len(res.mesh.vertices))
    except ChainlabError as exc:
        log.warning("width %g failed: %s", width, exc)
        return SweepEntry(width, None, f"{type(exc).__name__}: {exc}")


def worker_count(jobs):
    env = os.environ.get("CHAINLAB_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, jobs))


def sweep(cfg: RunConfig):
    """Run every width of ``cfg.widths`` and build the sharp certificate.

    Failing widths are recorded and skipped.  Returns
    ``(entries, certificate)``.
    """
    cfg.validate()
    if len(cfg.widths) < 2:
        raise ParamError("a sweep needs at least two widths")
    spec = domain_config(cfg)
    if not spec.necks:
        raise GeometryError("a width sweep needs a domain with necks")
    cfg = replace(cfg, config=spec)
    jobs = [(cfg, w) for w in cfg.widths]
    workers = worker_count(len(jobs))
    if workers == 1:
        entries = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            entries = list(pool.map(_sweep_one, jobs))
    cert = B.sharp_certificate([e.record for e in entries if e.record is not None])
    if cfg.out is not None:
        write_sweep(entries, cert, cfg.out)
    return entries, cert


def write_sweep(entries, cert, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    by_width = {r["width"]: r for r in cert.rows}
    rows = []
    for e in entries:
        r = by_width.get(e.width, {})
        area = e.record.area if e.record else None
        rows.append([e.width, area, r.get("last_sharp"), r.get("x"), r.get("computed"),
                     r.get("depth_ok"), None, e.error or ""])
    rows.append(["max", None, None, cert.certificate, None, None, cert.flatness, ""])
    io.write_table(out / "certificate.csv",
                   ["width", "area", "last_sharp", "x", "computed", "depth_ok", "flatness", "error"],
                   rows)
    prow = []
    for e in entries:
        if e.record is None:
            continue
        m, ratio = cert.pleijel[e.width]
        prow += [[e.width, int(k), int(nu), q] for k, nu, q in zip(m, e.record.nu, ratio)]
    io.write_table(out / "pleijel.csv", ["width", "m", "nu", "ratio"], prow)
    return [out / "certificate.csv", out / "pleijel.csv"]


def render(cfg: RunConfig):
    """Compute a run and write one SVG per eigenfunction ``1..n``."""
    cfg = replace(cfg, render=tuple(range(1, cfg.n + 1)), classify=False)
    cfg.validate()
    if cfg.out is None:
        raise ConfigError("render needs an output directory")
    res = run(replace(cfg, out=None))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for m in cfg.render:
        p = out / f"eigenfunction_{m:03d}.svg"
        render_svg(res.mesh, res.decomps[m - 1], p, title=f"m={m} mu={res.spectrum.mu[m - 1]:.6g}")
        files.append(p)
    return files
