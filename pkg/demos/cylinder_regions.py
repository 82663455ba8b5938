"""Faber-Krahn on the flat cylinder R/(PZ) x R.

A band of area A has first Dirichlet eigenvalue P^2 pi^2 / A^2, so
P pi / sqrt(lambda) recovers its area; a small disc recovers its area
through pi j^2 / lambda.  Random star regions satisfy the lemma bound
min(pi j^2 / lambda, P j / sqrt(lambda)) <= area with a margin.

    python demos/cylinder_regions.py
"""

from chainlab.bounds import cylinder_fk_check
from chainlab.cylinder import band, geodesic_disc, star_region

P = 1.0
cases = [band(P, 0.5, 0.02), geodesic_disc(P, 0.2, 0.01)] + [star_region(P, s, 0.02) for s in range(4)]
print(f"{'kind':6s} {'area':>8s} {'lambda':>9s} {'lemma':>8s} {'band':>8s} {'disc':>8s}")
for region in cases:
    rep = cylinder_fk_check(region, 0.02 if region.kind != "disc" else 0.01)
    print(f"{region.kind:6s} {rep.rhs:8.4f} {rep.context['lambda']:9.3f} {rep.lhs:8.4f} "
          f"{rep.log['band_value']:8.4f} {rep.log['disc_value']:8.4f}")
