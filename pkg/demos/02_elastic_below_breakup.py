"""Elastic nd scattering below breakup.

Between the deuteron threshold and E = 0 only the nd channel is open, so the
S-matrix is the single number S11 = exp(2 i delta). Its modulus measures how
well the finite box and the asymptotic fit conserve flux.

Run: python3 demos/02_elastic_below_breakup.py
"""

import numpy as np

from faddeev import solver
from faddeev.extraction import cm_to_elab, scatter_energy

setup = solver.ScatteringSetup.build(solver.DESK)
E_d = setup.deuteron.energy
print(f"deuteron energy {E_d:.7f} MeV, desk box {setup.config.rho_extent_fm:.0f} fm "
      f"(scaled rho_max = {setup.rho_max:.3f})\n")
print(f"{'E (MeV)':>9} {'E_lab':>8} {'Re S11':>11} {'Im S11':>11} {'delta (deg)':>12} {'|1-|S|^2|':>10} {'iter':>5}")
for E in (-2.1, -2.0, -1.5, -1.0, -0.5, -0.1):
    res = scatter_energy(setup, E, ("nd",))
    S = res.S11
    delta = 0.5 * np.degrees(np.angle(S))
    print(f"{E:9.3f} {float(cm_to_elab(E, E_d)):8.4f} {S.real:11.7f} {S.imag:11.7f} {delta:12.4f} "
          f"{abs(1 - abs(S) ** 2):10.1e} {res.diagnostics['nd']['iterations']:5d}")
