"""Statistical dimension and conic variance of a few common cones.

Run with ``python demos/01_statistical_dimension.py``.  Each cone is probed
with Gaussian vectors: the squared length of the projection has mean delta
and variance sigma^2 = tau^2 + 2 delta, where tau^2 is the variance of the
intrinsic-volume law V.
"""

import math

import numpy as np

from conicvol import (
    ChamberA, Circular, Orthant, PSD, RngStream, closed_form_moments, estimate_moments,
    exact_distribution, polar,
)
from conicvol.intrinsic_volumes import circular_delta

stream = RngStream(seed=2024)

# The Moreau decomposition splits any point into a cone part and a polar part
# that are orthogonal and add back up to the point.
cone = Circular(5, math.pi / 5)
x = stream.substream(0).generator().standard_normal((1, 5))
P, Q = cone.split(x)
print("x           ", np.round(x[0], 4))
print("Pi_C(x)     ", np.round(P[0], 4))
print("Pi_C0(x)    ", np.round(Q[0], 4))
print("<P, Q>      ", float(P[0] @ Q[0]))
print()

# For polyhedral cones the intrinsic volumes are often known exactly.
ivd = exact_distribution(ChamberA(6))
print("ChamberA(6) intrinsic volumes:", [str(v) for v in ivd.exact])
print(f"delta = {ivd.delta:.6f}, tau^2 = {ivd.tau_sq:.6f}")
print("polar law is the reversal:", [str(v) for v in exact_distribution(polar(ChamberA(6))).exact])
print()

# Monte Carlo against the closed forms.
print(f"{'cone':<22}{'delta_hat':>12}{'se':>8}{'closed':>10}{'tau2_hat':>12}{'se':>8}{'closed':>10}")
for k, c in enumerate([Orthant(100), ChamberA(20), Circular(50, math.pi / 6), PSD(10)]):
    est = estimate_moments(c, 50_000, stream.substream(1 + k))
    cf = closed_form_moments(c)
    flag = " (asymptotic)" if cf.asymptotic else ""
    name = type(c).__name__ + f"[{c.dim}]"
    print(f"{name:<22}{est.delta_hat:12.4f}{est.se_delta:8.4f}{cf.delta:10.4f}"
          f"{est.tau_sq_hat:12.4f}{est.se_tau_sq:8.4f}{cf.tau_sq:10.4f}{flag}")
print()

# The circular entry is only right to leading order: d sin^2(alpha) misses a
# cos(2 alpha) term that quadrature recovers.
a = math.pi / 6
print(f"Circular(50, pi/6): d sin^2(a) = {50 * math.sin(a) ** 2:.4f}, "
      f"quadrature = {circular_delta(50, a):.6f}, "
      f"d sin^2(a) + cos(2a) = {50 * math.sin(a) ** 2 + math.cos(2 * a):.4f}")
