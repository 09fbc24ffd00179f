"""
Predictability, concurrence and the plain eraser
================================================

With the filter at transmittance t, the sigma photon carries partial path
information (predictability P).  Detecting the pi photon at the point
equidistant from both atoms erases it, and the sigma photon shows a fringe
whose contrast V_QE equals the concurrence C.
"""

import numpy as np

from eraser_sim import run_conventional

print(f"{'t':>5} {'P':>8} {'C':>8} {'V_QE':>8} {'P^2+C^2':>9}")
for t in np.linspace(0, 1, 6):
    r = run_conventional(t)
    s = r.simulated
    print(f"{t:5.2f} {s.P:8.4f} {s.C:8.4f} {s.V_QE:8.4f} {s.P**2 + s.C**2:9.6f}")

# Every report carries its audits: each inequality with both sides and the margin.
r = run_conventional(0.25)
for a in r.audits:
    print(f"{a.name:34s} {a.lhs:.6f} {a.relation:2s} {a.rhs:.6f}  margin {a.margin:+.2e}")
