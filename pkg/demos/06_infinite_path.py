"""Finite propagation speed on an infinite graph.

The graph is a bi-infinite path described lazily by two callbacks; no
edge list is ever materialised.  A pulse started on one edge reaches at
most t+1 edges after time t, and at unit speed the evolution is a pure
translate, reproduced here exactly.

Run: python3 demos/06_infinite_path.py
"""

from fractions import Fraction as F

from netflow import MetricGraph, NetworkState, SparseVector, build_adjacency, evolve_unit

path = MetricGraph.lazy(
    column_fn=lambda j: [(j + 1, F(1))],
    endpoints_fn=lambda j: (j, j + 1),
    name="bi-infinite path",
)
op = build_adjacency(path)

f = NetworkState(
    [F(0), F(1, 2), F(1)],
    [SparseVector({0: F(1)}), SparseVector({0: F(2)})],
)

for t in (F(0), F(1, 2), F(5, 2), F(7)):
    ft = evolve_unit(op, f, t)
    print(f"t = {str(t):>4}   support on edges {sorted(ft.support())}")

# the flow moves toward parameter 0, and edge j feeds edge j+1, so after
# time t the pulse sits t edges downstream, shifted within the edge by
# the fractional part
want = NetworkState(
    [F(0), F(1, 2), F(1)],
    [SparseVector({2: F(2)}), SparseVector({3: F(1)})],
)
assert evolve_unit(op, f, F(5, 2)) == want
print("\nt = 5/2 matches the hand translate exactly")
