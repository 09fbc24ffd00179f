"""
Partially coherent emission
===========================

A coherence factor M < 1 damps the interference between the two emission
paths.  Concurrence and eraser visibility scale with M, and
C^2 + P^2 = P^2 + M^2 (1 - P^2) no longer reaches 1.  The table below is
the M = 1/2 dataset: C^2, P^2 and their sum against t.
"""

import csv
import sys

import numpy as np

from eraser_sim import coherence_dataset

rows = coherence_dataset(np.linspace(0, 1, 21), M=0.5)
w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
w.writeheader()
for row in rows:
    w.writerow({k: f"{v:.6f}" for k, v in row.items()})
