"""
Conditional eraser: trading events for visibility
=================================================

A beamsplitter of transmittance t_bs diverts part of the pi photon from
atom B to a which-way detector.  Keeping only the events where that
detector stays silent rebalances the two paths.  At t_bs = t the surviving
subensemble shows full visibility, above the bound sqrt(1 - P^2) that holds
for the whole ensemble.  Its own predictability drops to zero, so
P_cond^2 + C_cond^2 = 1 still holds.
"""

import math

from eraser_sim import run_conditional

t = 0.25
print(f"{'t_bs':>5} {'S':>7} {'P_cond':>7} {'V_cond':>7} {'S*C_cond':>8}")
for t_bs in (1.0, 0.75, 0.5, 0.25, 0.1):
    s = run_conditional(t, t_bs).simulated
    print(f"{t_bs:5.2f} {s.S:7.4f} {s.P_cond:7.4f} {s.V_QE_cond:7.4f} {s.S * s.C_cond:8.4f}")

r = run_conditional(t, t)
cert = r.audit("conventional-bound-exceeded")
print(f"\nconditioned visibility {cert.lhs:.6f} > unconditional bound {cert.rhs:.6f}")
print(f"failure probability {r.extras['failure_probability']:.6f} equals P = {r.simulated.P:.6f}")
print(f"unconditional bound from P directly: {math.sqrt(1 - r.simulated.P ** 2):.6f}")

# Partially coherent emission caps the conditioned visibility at M.
print("M = 0.5:", run_conditional(t, t, 0.5).simulated.V_QE_cond)
