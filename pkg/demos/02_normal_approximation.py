"""How close are the squared projection length and V to a normal law?

Run with ``python demos/02_normal_approximation.py``.  The empirical
Kolmogorov distances are set next to the explicit bounds; the Berry-Esseen
constants are large, so the bounds only bite in very high dimension.
"""

import math

import numpy as np

from conicvol import Circular, Orthant, RngStream, exact_distribution, polar
from conicvol.intrinsic_volumes import sample_squared_projections
from conicvol.normal_approx import (
    berry_esseen_vc, concentration_tail, kolmogorov_distance, sample_W, tv_bound_projection,
)

stream = RngStream(seed=7)

print(f"{'d':>6}{'KS(G)':>10}{'TV bound':>10}{'KS(W)':>10}{'2 sigma/delta':>15}{'BE(V)':>10}")
for k, d in enumerate([25, 100, 400, 1600]):
    cone = Orthant(d)
    ivd = exact_distribution(cone)
    G, _ = sample_squared_projections(cone, 40_000, stream.substream(k))
    ks_g = kolmogorov_distance((G - ivd.delta) / math.sqrt(ivd.sigma_sq))
    ks_w = kolmogorov_distance(sample_W(ivd, 40_000, stream.substream(100 + k)))
    tv = tv_bound_projection(ivd.delta, ivd.sigma_sq).value
    be = berry_esseen_vc(ivd.delta, ivd.tau_sq).simplified.value
    print(f"{d:6d}{ks_g:10.4f}{tv:10.4f}{ks_w:10.4f}{2 * math.sqrt(ivd.sigma_sq) / ivd.delta:15.4f}{be:10.2f}")
print()

# Concentration of the squared distance to a cone about its mean.
print("upper tails of F = d^2(g, C) - E d^2(g, C), E = 10")
for k, (name, cone) in enumerate([("polar Orthant(20)", polar(Orthant(20))),
                                  ("Circular(20, pi/4)", Circular(20, math.pi / 4))]):
    _, dist_sq = sample_squared_projections(cone, 100_000, stream.substream(200 + k))
    F = dist_sq - 10.0
    print(f"  {name}")
    for t in (2.0, 5.0, 10.0, 20.0):
        print(f"    t={t:5.1f}  empirical {np.mean(F > t):.5f}  bound {concentration_tail(10.0, t):.5f}")
