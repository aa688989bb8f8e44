"""Does an ensemble of random-phase fields follow the kinetic equation?

A 2-D capillary lattice is filled with Rayleigh-distributed amplitudes and
uniform phases, each realization is integrated exactly over one window, and
the ensemble mean of d|a|^2/dt is compared with eta - gamma n.  Antithetic
pairs (a, -a) cancel the odd orders of the expansion; the centred initial
intensities serve as control variates.

Usage: python 02_kinetic_closure.py [R] [workers]

The 20% tolerance is set for R = 1000; smaller ensembles are noisier.
"""

import sys

import numpy as np

from waveturb.experiments import mc_kinetic

R = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
workers = int(sys.argv[2]) if len(sys.argv) > 2 else 1
res = mc_kinetic(order=3, R=R, workers=workers)
rows = res.tables["rates"].rows
sel = rows[:, -1] == 1
print(f"{res.summary['resonances']} triads, kernel width {res.summary['kernel_width']:.3f}, R={R}")
print("  k       n        predicted     measured      s.e.")
for row in rows[sel][np.argsort(-np.abs(rows[sel][:, 5]))]:
    print(f"  {row[1]:5.2f}  {row[2]:.3f}  {row[5]: .3e}  {row[6]: .3e}  {row[7]:.1e}")
for v in res.verdicts:
    print(v.line())
