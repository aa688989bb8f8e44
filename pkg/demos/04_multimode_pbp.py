"""Joint statistics of a resonant triad.

The probability flux of the three-mode equation vanishes on the product of
Rayleigh-Jeans exponentials and the discrete residual falls at second order
with the grid.  Product PDFs built from a kinetic steady state that carries a
cascade are not stationary: their residual grows with the departure from
equipartition.  Projected onto a pair of intensities, the flux of such a
state circulates.
"""

import numpy as np

from waveturb import pbp
from waveturb.experiments import kz_flux_scan

rs = pbp.synthetic_triad()
print("thermodynamic residual against grid size")
prev = None
for cells in (12, 24, 48):
    r = pbp.divergence_residual(pbp.thermodynamic_pdf(rs, pbp.tensor_grid(12.0 / rs.omega, cells)))
    print(f"  {cells:3d}^3  {r:.3e}" + (f"   ratio {prev / r:.2f}" if prev else ""))
    prev = r

scan = kz_flux_scan()
print("\nresidual of product PDFs along kinetic steady states n = (1 + lam d)/omega")
print("(the injected flux is proportional to lam (1 - lam), so it peaks at lam = 1/2)")
table = scan.tables[next(iter(scan.tables))]
print("  " + "  ".join(f"{c:>10s}" for c in table.columns))
for row in table.rows:
    print("  " + "  ".join(f"{v:10.3e}" for v in row))

n = np.array([1.0, 0.5, 0.5]) / rs.omega * 2.5
gt = pbp.balancing_sources(rs, n)
pdf = pbp.product_pdf(rs, n, pbp.tensor_grid(12.0 * n, 32), gamma_tilde=gt)
s1, s2, F1, F2 = pbp.vortex_projection(pbp.pbp_flux(pdf, "peierls"), pdf, 1, 2)
thermo = pbp.thermodynamic_pdf(rs, pbp.tensor_grid(12.0 / rs.omega, 32))
t1, t2, G1, G2 = pbp.vortex_projection(pbp.pbp_flux(thermo, "peierls"), thermo, 1, 2)
print(f"\ncirculation in the (s1, s2) plane: cascade state {pbp.circulation(s1, s2, F1, F2):.3e}, "
      f"thermodynamic {pbp.circulation(t1, t2, G1, G2):.3e}")
