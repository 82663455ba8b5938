"""Neumann spectrum and nodal counts of the square [0, 2]^2.

Compares the first eigenvalues with (pi/2)^2 (m^2 + n^2), prints the
Courant report and writes an SVG of the fourth eigenfunction.

    python demos/square_spectrum.py [out_dir]
"""

import sys
from pathlib import Path

from chainlab.bounds import square_neumann_eigenvalues
from chainlab.fem import solve_mesh
from chainlab.mesh import triangulate
from chainlab.nodal import courant_report, extract_nodal_domains
from chainlab.presets import square
from chainlab.svg import render_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
out.mkdir(parents=True, exist_ok=True)

h = 0.03
mesh = triangulate(square(2.0, (1.0, 1.0)).build(h), h)
spec = solve_mesh(mesh, count=16)
exact = square_neumann_eigenvalues(2.0, 100.0)[:16]
decs = [extract_nodal_domains(mesh, pair) for pair in spec]

print(f"{len(mesh.vertices)} vertices, h_max {mesh.h_max:.4f}")
print(" m      mu_h     exact   nu  cluster  sharp")
for row, ex in zip(courant_report(spec, decs), exact):
    print(f"{row.m:2d} {row.mu:9.4f} {ex:9.4f} {row.nu:4d}  {row.cluster:2d}-{row.cluster_last:<2d}   {row.sharp}")

path = render_svg(mesh, decs[3], out / "square_m4.svg", title="square m=4")
print("wrote", path)
