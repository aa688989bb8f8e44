"""Time kernels and the weak-nonlinearity expansion.

The resonance kernel Delta(x) = int_0^T exp(ixt) dt sharpens as T grows: its
squared modulus carries weight 2 pi T concentrated in a width 2 pi / T.  The
second part integrates a random capillary field and shows that the residual
after subtracting the first two iterates falls as eps^3.
"""

import numpy as np

from waveturb.acceptance import kernel_norm
from waveturb.experiments import perturbation_scaling
from waveturb.perturbation import delta_kernel

print("int |Delta|^2 dx against 2 pi T")
for T in (1.0, 10.0, 100.0):
    print(f"  T={T:6.1f}  ratio {kernel_norm(T) / (2 * np.pi * T):.6f}  "
          f"|Delta(0)|={abs(delta_kernel(0.0, T)):.1f}  |Delta(2pi/T)|={abs(delta_kernel(2 * np.pi / T, T)):.1e}")

res = perturbation_scaling("capillary", d=1, n_side=32)
print("\nresidual norms for a 1-D capillary field (T = 1)")
print("  eps      |a-a0|     |a-a0-eps a1|   |a-a0-eps a1-eps^2 a2|")
for eps, r0, r1, r2 in res.tables["scaling"].rows:
    print(f"  {eps:.3f}  {r0:.3e}  {r1:.3e}       {r2:.3e}")
print(f"slopes: {res.summary['slope_order0']:.2f}, {res.summary['slope_order1']:.2f}, {res.summary['slope']:.2f}")
