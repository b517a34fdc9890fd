"""Basis pursuit recovery of a sparse vector and its Gaussian phase transition.

Run with ``python demos/03_phase_transition.py [trials]`` (default 50 trials
per grid point; 200 takes about half a minute).  The number of measurements
is m_t = floor(delta + t tau), and the chance of exact recovery is compared
with Phi(t).
"""

import sys

from conicvol import L1Descent, RngStream, estimate_moments
from conicvol.intrinsic_volumes import exact_distribution
from conicvol.cones import Orthant
from conicvol.phase_transition import (
    DEFAULT_T_GRID, crofton_bounds, delta_bounds_l1, phase_curve, psi_l1, psi_schatten,
)

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 50
d, s = 100, 10

# psi(rho) turns the statistical dimension of the l1 descent cone into a curve.
print("rho    gamma*     psi(rho)   psi_schatten(rho, 1)")
for rho in (0.05, 0.1, 0.25, 0.5, 0.75):
    c = psi_l1(rho)
    print(f"{rho:4.2f}  {c.gamma_star:9.6f}  {c.psi:9.6f}  {psi_schatten(rho, 1.0).psi:9.6f}")
print()

b = delta_bounds_l1(d, s)
est = estimate_moments(L1Descent(d, s), 20_000, RngStream(3))
print(f"L1Descent({d},{s}): {b.lower:.3f} <= delta_hat = {est.delta_hat:.3f} <= {b.upper:.3f}")
print(f"tau^2_hat = {est.tau_sq_hat:.3f}")
print()

# The Crofton formula gives the chance a random subspace misses a cone exactly.
ivd = exact_distribution(Orthant(6))
for m in range(7):
    cb = crofton_bounds(ivd, m)
    print(f"Orthant(6), codim {m}: {cb.lower:.4f} <= {cb.exact:.4f} <= {cb.upper:.4f}")
print()

curve = phase_curve(d, s, DEFAULT_T_GRID, trials=trials, stream=RngStream(121))
print(f"phase curve, {trials} trials per point")
print("    t    m   p_hat     se   Phi(t)")
for r in curve.rows:
    print(f"{r.t:5.1f} {r.m:4d}  {r.p_hat:6.3f}  {r.se:5.3f}  {r.phi_t:6.3f}")
