"""
Intersections of walk pieces
============================

I_n: overlap of the first and second halves of one 2n-step walk.
J_n: overlap of the ranges of two independent n-step walks.
"""

from rangelab import estimators as est
from rangelab.graphs import make_graph

sq = make_graph("square")
data = est.intersection_replicas(sq, (0, 0), [2 ** 8, 2 ** 10, 2 ** 12], replicas=200, seed=5)
scan = est.intersection_moment_scan(data)

print("     n   E[I^2] ratio   E[J] ratio   (p!)^2 moment check p=2,3")
for row in scan["rows"]:
    print(f"{row['n']:6d}   {row['I2_ratio']:10.3f}   {row['J_ratio']:10.3f}   {row['J2_ok']}, {row['J3_ok']}")
print("grid max/min:", {k: round(float(v), 3) for k, v in scan["spread"].items()})
