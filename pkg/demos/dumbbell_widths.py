"""Two unit squares joined by a neck of shrinking width.

For each width the largest Courant-sharp index m and the normalized
eigenvalue |Omega| mu_m are printed; the ratio of the largest to the
smallest value across widths is the flatness of the certificate.  A coarse
mesh keeps this to a minute; the acceptance suite runs it at h = 0.02.

    python demos/dumbbell_widths.py
"""

from chainlab.pipeline import RunConfig, sweep
from chainlab.presets import two_squares

cfg = RunConfig(two_squares(0.5), h=0.04, n=40, widths=(0.5, 0.2, 0.05), classify=False)
entries, cert = sweep(cfg)
for e, row in zip(entries, cert.rows):
    print(f"w={e.width:<5} vertices={e.n_vertices:6d} last sharp m={row['last_sharp']} "
          f"x={row['x']:.3f}")
print(f"certificate {cert.certificate:.3f}, flatness {cert.flatness:.3f}")
for e in entries:
    m, ratio = cert.pleijel[e.width]
    print(f"w={e.width}: max nu/m over m >= 10 is {ratio[9:].max():.3f}")
