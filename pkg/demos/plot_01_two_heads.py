"""
Two heads and one neck
======================

The smallest interesting instance: one neck detection and two head
detections. Either head can join the neck in a pose, and the other head
can still be kept as a duplicate of it through a local assignment.
"""

import numpy as np

from posecg.instance import Detection, Instance, PartGraph
from posecg.master import DualValues, compute_gamma, compute_psi
from posecg.pricing import price_global_dp, price_local
from posecg.solver import solve

# a two-part graph where the neck is the major part
graph = PartGraph(("neck", "head"), frozenset({"neck"}), frozenset({frozenset({"neck", "head"})}))
dets = (Detection(0, "neck", -10.0), Detection(1, "head", -4.0), Detection(2, "head", -3.0))
inst = Instance(graph, dets, {(0, 1): -2.0, (0, 2): -1.0, (1, 2): -0.5}, omega=3.0)

# pose costs: omega plus unary plus pairwise terms inside the pose
for ids in ([0], [0, 1], [0, 2]):
    print(f"pose {ids}: {compute_gamma(inst, ids):+.2f}")

# a local assignment leaves out the anchor's unary cost, which its pose already pays
print(f"head 2 kept as a duplicate of head 1: {compute_psi(inst, 1, [2]):+.2f}")
print(f"head 1 kept as a duplicate of head 2: {compute_psi(inst, 2, [1]):+.2f}")

# with every dual at zero, pricing returns the cheapest column per anchor
zero = DualValues.zeros(len(inst))
print("best pose through the neck:", price_global_dp(inst, 0, zero).column)
print("best duplicate set around head 1:", price_local(inst, 1, zero).column)

# the full pipeline: column generation, then the ILP over the generated columns
sol, report = solve(inst)
print(report.summary())
for pose in sol.poses:
    print("pose", pose.column.detections, "locals", [(l.anchor, l.locals) for l in pose.locals])
assert np.isclose(sol.objective, -16.5)
