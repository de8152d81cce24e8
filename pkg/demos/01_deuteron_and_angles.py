"""Two-body input and the hyperangular basis.

Solves the Malfliet-Tjon pair potentials for their bound states, shows where
the deuteron-adapted alpha grid puts its knots, and checks that the spline
Jacobi transform maps s-wave Delves functions onto multiples of themselves.

Run: python3 demos/01_deuteron_and_angles.py
"""

import numpy as np

from faddeev import kinematics, solver
from faddeev.discretization import build_alpha_grid
from faddeev.operators import jacobi_kernel_matrix
from faddeev.twobody import MT_SINGLET, MT_TRIPLET, bound_state_basis, solve_bound_states

ms = kinematics.MassSystem.equal()
tau_x, tau_y = kinematics.tau_factors(ms, 1)
basis = bound_state_basis(solver.DESK.bound_r_max_fm, tau_x, solver.DESK.bound_intervals)

print("pair potentials at r = 1 fm (MeV):")
for name, pot in (("singlet", MT_SINGLET), ("triplet", MT_TRIPLET)):
    states = solve_bound_states(pot, 0, basis, tau_x)
    found = ", ".join(f"{s.energy:.7f} MeV" for s in states) or "none"
    print(f"  {name:8s} V(1) = {float(pot(1.0)):9.4f}   bound states: {found}")

# The solver's alpha grid crowds knots near alpha = pi/2, where the deuteron
# tail x = rho cos(alpha) lives at large rho.
setup = solver.ScatteringSetup.build(solver.DESK)
knots = setup.data.grid.alpha.knots
print(f"\ndesk alpha grid: {knots.size - 1} intervals; fraction of knots above pi/4: "
      f"{np.mean(knots > np.pi / 4):.2f}")
print("smallest / largest interval:", f"{np.diff(knots).min():.2e} / {np.diff(knots).max():.2e}")

# Delves functions sin(nu alpha) are eigenfunctions of the summed transform.
print("\nJacobi transform eigenvalues (uniform 64-point basis):")
uni = build_alpha_grid(64)
pts = uni.collocation_points()
K = jacobi_kernel_matrix(uni, pts, ms)
for nu in (2, 4, 6, 8):
    c = uni.hermite_coefficients(np.sin(nu * uni.knots), nu * np.cos(nu * uni.knots))
    out = K @ c
    ref = np.sin(nu * pts)
    beta = np.dot(out, ref) / np.dot(ref, ref)
    print(f"  nu = {nu}: beta = {beta:+.6f}, max |K D - beta D| = {np.max(np.abs(out - beta * ref)):.1e}")
