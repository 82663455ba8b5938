"""SVG pictures of eigenfunction sign patterns."""

from __future__ import annotations

from pathlib import Path

import numpy as np

POSITIVE = "#d6604d"
NEGATIVE = "#4393c3"
UNSIGNED = "#f0f0f0"


def _path(points):
    # points: (T, 3, 2) triangles or (k, 2, 2) segments
    if points.shape[1] == 3:
        return "".join(
            f"M{a[0]:.5f} {a[1]:.5f}L{b[0]:.5f} {b[1]:.5f}L{c[0]:.5f} {c[1]:.5f}Z"
            for a, b, c in points
        )
    return "".join(f"M{a[0]:.5f} {a[1]:.5f}L{b[0]:.5f} {b[1]:.5f}" for a, b in points)


def svg_string(mesh, decomp, title=None, width=800):
    """SVG text: triangles filled by sign, nodal domain boundaries and the
    domain outline stroked.  ``nu`` goes into the title."""
    v = mesh.vertices * np.array([1.0, -1.0])  # SVG y axis points down
    lo, hi = v.min(axis=0), v.max(axis=0)
    span = hi - lo
    pad = 0.02 * span.max()
    height = int(round(width * (span[1] + 2 * pad) / (span[0] + 2 * pad)))
    stroke = 0.002 * span.max()

    lab = decomp.tri_label
    sign = np.zeros(len(lab), dtype=int)
    ok = lab >= 0
    sign[ok] = [decomp.domains[k].sign for k in lab[ok]]
    tri = v[mesh.triangles]

    # nodal boundaries: interior edges whose two triangles carry different labels
    e, t2e = mesh.edges
    owner = np.full((len(e), 2), -1)
    tri_of_edge = np.repeat(np.arange(len(mesh.triangles)), 3)
    edge_ids = t2e.ravel()
    order = np.lexsort((tri_of_edge, edge_ids))
    edge_ids, tri_of_edge = edge_ids[order], tri_of_edge[order]
    first = np.r_[True, edge_ids[1:] != edge_ids[:-1]]
    owner[edge_ids[first], 0] = tri_of_edge[first]
    owner[edge_ids[~first], 1] = tri_of_edge[~first]
    inner = owner[:, 1] >= 0
    cut = inner & (lab[owner[:, 0]] != lab[np.maximum(owner[:, 1], 0)])
    nodal_edges = v[e[cut]]
    outline = v[mesh.boundary_edges]

    nu = decomp.nu
    label = f"nu={nu}" if title is None else f"{title} nu={nu}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{lo[0] - pad:.5f} {lo[1] - pad:.5f} {span[0] + 2 * pad:.5f} {span[1] + 2 * pad:.5f}" '
        f'data-nu="{nu}">',
        f"<title>{label}</title>",
    ]
    for s, color in ((1, POSITIVE), (-1, NEGATIVE), (0, UNSIGNED)):
        sel = sign == s
        if sel.any():
            parts.append(
                f'<path class="sign{s:+d}" fill="{color}" stroke="{color}" '
                f'stroke-width="{stroke / 4:.6f}" d="{_path(tri[sel])}"/>'
            )
    if len(nodal_edges):
        parts.append(
            f'<path class="nodal" fill="none" stroke="#000000" stroke-width="{stroke:.6f}" '
            f'd="{_path(nodal_edges)}"/>'
        )
    parts.append(
        f'<path class="outline" fill="none" stroke="#000000" stroke-width="{2 * stroke:.6f}" '
        f'd="{_path(outline)}"/>'
    )
    parts.append("</svg>\n")
    return "\n".join(parts)


def render_svg(mesh, decomp, path, title=None):
    """Write :func:`svg_string` to ``path`` and return the path."""
    path = Path(path)
    path.write_text(svg_string(mesh, decomp, title))
    return path
