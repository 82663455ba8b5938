"""CSV tables and the binary eigenvector sidecar.

Floats are written with ``repr`` so that identical inputs give identical
bytes.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

SIDECAR_MAGIC = b"CHLBVEC1"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_table(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_spectrum(path, spectrum):
    """``index, eigenvalue, residual`` with 1-based indices."""
    write_table(
        path,
        ["index", "eigenvalue", "residual"],
        [(k + 1, mu, r) for k, (mu, r) in enumerate(zip(spectrum.mu, spectrum.residuals))],
    )


def write_vectors(path, coeffs):
    """Eigenvectors as little-endian float64, one vector after another.

    Header: 8 magic bytes, then dimension and count as little-endian uint64.
    """
    c = np.asarray(coeffs, dtype="<f8")
    dim, count = c.shape
    with open(path, "wb") as f:
        f.write(SIDECAR_MAGIC)
        f.write(struct.pack("<QQ", dim, count))
        f.write(np.ascontiguousarray(c.T).tobytes())


def read_vectors(path):
    data = Path(path).read_bytes()
    if data[:8] != SIDECAR_MAGIC:
        raise ValueError(f"{path}: not an eigenvector sidecar")
    dim, count = struct.unpack("<QQ", data[8:24])
    v = np.frombuffer(data, dtype="<f8", offset=24)
    if v.size != dim * count:
        raise ValueError(f"{path}: truncated sidecar")
    return v.reshape(count, dim).T.copy()


NODAL_HEADER = ["m", "mu", "nu", "nu0", "nu1", "nu2", "nu3", "sharp", "cluster",
                "cluster_last", "delta", "delta_clamped"]


def write_nodal(path, rows, counts):
    """One row per eigenpair: Courant row fields and class counts."""
    out = []
    for r, c in zip(rows, counts):
        cc = c.counts if c is not None else (None,) * 4
        out.append([r.m, r.mu, r.nu, *cc, r.sharp, r.cluster, r.cluster_last,
                    c.delta if c is not None else None,
                    c.delta_clamped if c is not None else None])
    write_table(path, NODAL_HEADER, out)


def _context(d):
    return json.dumps(d, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def write_bounds(path, reports):
    """``id, context, LHS, RHS, C, satisfied`` with the context as compact JSON."""
    write_table(
        path,
        ["id", "context", "LHS", "RHS", "C", "satisfied"],
        [(r.id, _context(r.context), r.lhs, r.rhs, r.constants.get("C"), r.satisfied)
         for r in reports],
    )
