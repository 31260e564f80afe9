"""
An odd cycle of poses
=====================

Three candidate poses that overlap pairwise. The LP puts one half on each
of them and beats every integral choice. A triple row over the three shared
detections removes that fractional point.
"""

from posecg.instance import Detection, Instance, upper_body_graph
from posecg.oracle import brute_force_solve, full_lp
from posecg.solver import SolverConfig, run_column_generation, run_column_row_generation, solve

dets = (Detection(0, "neck", -28.0), Detection(1, "neck", -7.0),
        Detection(2, "head", -34.0), Detection(3, "r_shoulder", -20.0))
pw = {(0, 1): 100.0, (0, 2): 7.0, (0, 3): 5.0, (1, 2): -6.0, (1, 3): -2.0, (2, 3): 14.0}
inst = Instance(upper_body_graph(), dets, pw, omega=30.0)

# the LP over every possible column, solved directly
value, *_ = full_lp(inst)
print(f"full LP: {value:.3f}")

# column generation reaches the same value without listing every column
plain = run_column_generation(inst)
gamma, _ = plain.master.split_primal(plain.lp_solution.x)
for col, v in zip(plain.master.columns, gamma):
    if v > 1e-9:
        print(f"  {col.detections} at {v:.2f}")

# adding violated triple rows closes the gap to the integer optimum
tight = run_column_row_generation(inst, pool=plain.pool)
print("rows added:", [r.dets for r in tight.rows])
print(f"LP with rows: {tight.lp_objective:.3f}, exact optimum: {brute_force_solve(inst).objective:.3f}")

# without rows, branch-and-bound over the columns still finds the optimum
sol, report = solve(inst, SolverConfig(enable_triples=False))
print(f"branch-and-bound: {sol.objective:.3f} after {report.bnb_nodes} nodes")
