"""
Range of the simple random walk on Z^2
======================================

Exact return probabilities, the first-return law and the expected range,
all from one kernel evolution plus the closed-form extension.
"""

import math

import numpy as np

from rangelab import kernels
from rangelab.graphs import make_graph

sq = make_graph("square")

# return probabilities p_k(0, 0); odd times vanish
p = kernels.return_series(sq, (0, 0), 1000)
for n in (10, 100, 500):
    print(f"n={n:4d}  n p_2n = {n * p.values[2 * n]:.6f}   (1/pi = {1 / math.pi:.6f})")

# first-return law and survival q(m) = P(T_0 > m)
f = kernels.first_return(p)
q = kernels.survival(f)
print("f_2, f_4 =", f.values[2], f.values[4])
print("q(1000) log 1000 =", q.values[1000] * math.log(1000))

# last-exit decomposition: sum_k p_k q(m - k) = 1 for every m
print("last-exit residual", kernels.last_exit_identity_check(p, q))

# E[R_n] = sum_{k<=n} q(k); past n=1000 the kernel is the closed form
er = kernels.expected_range_series(sq, (0, 0), 10 ** 6, exact_upto=1000)
print("\n        n   E[R_n] log n / n")
for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
    print(f"{n:9d}   {er[n] * math.log(n) / n:.4f}")
print("the slow climb toward pi =", round(math.pi, 4), "is the log n correction")

# exact enumeration over all 4^n paths for tiny n agrees
print("\nE[R_2] by enumeration:", kernels.expected_range_enumeration(sq, (0, 0), 2))
print("E[R_8] three ways:", float(kernels.expected_range_enumeration(sq, (0, 0), 8)),
      kernels.expected_range_exact(sq, (0, 0), 8, method="per-target"), er[8])
