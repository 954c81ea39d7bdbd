#!/usr/bin/env python3
"""The recurrence/transience transition at spectral dimension 2.

Because s_h = 2 ln(nu)/ln(1/p) varies continuously with p, the walk
crosses from recurrent (s_h <= 2, equivalently p nu <= 1) to transient
(s_h > 2) along a parameter path.  The Green function -- the time
integral of the return probability -- is the order parameter: finite
exactly in the transient phase, divergent otherwise.  Monte Carlo
trajectories show the same thing qualitatively.
"""

import numpy as np

from hierspec import (DivergentIntegralError, LatticeParams,
                      green_tail_integral, green_tail_partial_sum,
                      hier_distance, resolvent_zero, sample_end_sites)

print("Green function G = int_0^inf p(t,x,x) dt along p at nu = 4:")
for p in (0.15, 0.2, 0.249, 0.25, 0.26, 0.4, 0.6):
    params = LatticeParams(4, p)
    try:
        value = green_tail_integral(params, 0.0, 0.0)
        print(f"  p={p:<6} s_h={params.s_h:6.3f}  G = {value:10.6f}  "
              f"(transient)")
    except DivergentIntegralError:
        partial = green_tail_partial_sum(params, 0.0, 0.0, 200)
        print(f"  p={p:<6} s_h={params.s_h:6.3f}  G diverges "
              f"(200-term partial sum {partial:.3g})")

print("\nclosed form in the transient phase: G = p(nu-1)/(p nu - 1)")
pa = LatticeParams(4, 0.5)
print(f"  nu=4, p=1/2: {resolvent_zero(pa, 0)} (= 1.5 exactly)")
print(f"  off-diagonal decay: G(r) = {resolvent_zero(pa, 1):.6g}, "
      f"{resolvent_zero(pa, 2):.6g}, {resolvent_zero(pa, 3):.6g} "
      f"at r = 1, 2, 3")

print("\nMonte Carlo: fraction of walks back at the origin at time t")
for nu, p, label in [(2, 0.25, "recurrent (s_h = 1)"),
                     (4, 0.5, "transient (s_h = 4)")]:
    params = LatticeParams(nu, p)
    for horizon in (5.0, 25.0):
        ends, _ = sample_end_sites(params, 0, horizon, 4000, seed=7)
        at_origin = sum(1 for e in ends if e == 0) / len(ends)
        far = sum(1 for e in ends if hier_distance(0, e, nu) > 3) / len(ends)
        print(f"  nu={nu} p={p} t={horizon:5.1f}: at origin {at_origin:.3f},"
              f" beyond rank 3 {far:.3f}   [{label}]")
