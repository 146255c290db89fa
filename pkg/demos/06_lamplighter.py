"""
Lamplighter walk on Z_2 wr Z^2
==============================

Switch-walk-switch: randomize the lamp under the walker, step, randomize
the new lamp.  The word distance to the identity is bracketed by a lower
bound (lamps plus the farthest detour) and a nearest-neighbor tour.
"""

import math

from rangelab import lamplighter as L
from rangelab import walks
from rangelab.graphs import make_graph, path_graph

# on a tiny base the exact distance is a BFS over (walker, lamps)
g = path_graph(6)
a = L.WreathState.make((0, 0))
b = L.WreathState.make((2, 0), [(1, 0), (5, 0)])
print("exact:", L.wreath_distance_exact(a, b, g), " bracket:", L.distance_bracket(a, b, g))

sq = make_graph("square")
run = L.simulate_sws(sq, (0, 0), 4000, walks.RngStream(8))
for n in (500, 1000, 2000, 4000):
    s = run.state(n)
    lb, ub = L.distance_bracket(L.WreathState.make((0, 0)), s, sq)
    print(f"n={n:5d}  lit lamps {len(s.lamps):5d}  bracket [{lb}, {ub}]  UB log n / n = {ub * math.log(n) / n:.3f}")

data = L.sws_replicas(sq, (0, 0), [500, 1000, 2000], replicas=100, seed=3)
for r in L.scaled_displacement(data):
    print(r.statistic, r.n, round(r.value, 3), "+-", round(r.dispersion, 3))
