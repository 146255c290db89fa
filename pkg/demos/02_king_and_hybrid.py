"""
King lattice and the hybrid annulus graph
=========================================

The king lattice has diagonal steps; its return probabilities decay like
2/(3 pi n).  The hybrid graph glues king annuli into Z^2 at doubly
exponential radii, so locally it looks like one lattice or the other.
"""

import math

import numpy as np

from rangelab import kernels
from rangelab.graphs import make_graph

king = make_graph("king")
p = kernels.return_series(king, (0, 0), 600).values

ns = np.array([100, 200, 400, 600])
print("n p_n on the king lattice:", np.round(ns * p[ns], 5), " 2/(3pi) =", round(2 / (3 * math.pi), 5))
partial = p[1:601].sum() / math.log(600)
print("sum_{k<=600} p_k / log 600 =", round(partial, 4))

# hybrid graph: schedule R = 4, 16, 256, ... by default
hy = make_graph("hybrid-annuli")
print("\nschedule radii:", hy.schedule.radii[:4])
for v in [(0, 0), (10, 0), (100, 0), (1000, 0)]:
    print(f"degree at {v}: {hy.degree(v)}")

# deep inside an annulus the short-time kernel is exactly the king one
k = 128
inside = kernels.return_series(hy, (1000, 0), k).values
ref = kernels.return_series(king, (0, 0), k).values
print("\nmax |p_j(v,v) - king p_j| for j <=", k, ":", np.abs(inside - ref).max())

# and the walk overall is still recurrent with the last-exit identity
s = kernels.return_series(hy, (10, 0), 300)
print("last-exit residual at (10,0):", kernels.last_exit_identity_check(s, kernels.survival(kernels.first_return(s))))
