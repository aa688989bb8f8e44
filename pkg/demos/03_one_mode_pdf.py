"""One-mode intensity statistics.

Without flux the steady PDF is the Rayleigh exponential, whose moments are
p! n^p.  A constant probability flux toward large intensity (F < 0) lifts the
tail above Rayleigh; a flux toward small intensity (F > 0) depletes it.  The
finite-volume solver relaxes an arbitrary start to the Rayleigh state.
"""

import numpy as np

from waveturb.onemode import (evolve_pdf, geometric_grid, initial_pdf, max_steady_flux, pdf_moments,
                              rayleigh_pdf, steady_density, steady_moments)

n, eta = 1.0, 1.0
print("steady moments / (p! n^p):", steady_moments(5, eta, eta / n) / np.cumprod([1, 1, 2, 3, 4, 5]))

s_cut = 12.0
F_pos = 0.5 * max_steady_flux(n, eta, s_cut)  # positive fluxes are bounded by positivity of P
s = np.array([2.0, 5.0, 8.0, 10.0, 11.5])
print(f"\n  s     Rayleigh    F=-0.01     F=+{F_pos:.1e}   (s_cut = {s_cut:g})")
for si, r, a, b in zip(s, rayleigh_pdf(s, n), steady_density(s, n, -0.01, eta, s_cut),
                       steady_density(s, n, F_pos, eta, s_cut)):
    print(f"  {si:4.0f}  {r:.3e}  {a:.3e}  {b:.3e}")

pdf = initial_pdf(geometric_grid(40.0, 300, 1e-5), lambda x: np.exp(-((x - 3.0) / 0.5) ** 2), n, eta, eta / n)
print("\nrelaxation of a bump at s = 3 (mean intensity obeys dn/dt = eta - gamma n)")
t = 0.0
for steps in (0, 20, 40, 80, 160):
    if steps:
        pdf = evolve_pdf(pdf, 0.025, steps)
        t += 0.025 * steps
    M = pdf_moments(pdf, 2)
    print(f"  t={t:5.2f}  mass {M[0]:.12f}  <s> {M[1]:.4f}  <s^2>/(2<s>^2) {M[2] / (2 * M[1] ** 2):.4f}")
