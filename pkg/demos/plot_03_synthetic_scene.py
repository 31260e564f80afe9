"""
A synthetic crowd
=================

Generate a scene with several people, duplicate detections and clutter,
solve it, and draw the result as SVG next to this script's working
directory.
"""

import collections
from pathlib import Path

from posecg.oracle import check_solution
from posecg.render import render_svg
from posecg.solver import solve
from posecg.synthetic import generate_synthetic

inst = generate_synthetic(seed=0, n_people=4, dup_rate=0.2, fp_rate=0.1)
print(len(inst), "detections:", dict(collections.Counter(d.part for d in inst.detections)))

sol, report = solve(inst)
print(report.summary())
print(len(sol.poses), "poses,", len(sol.false_positives), "false positives")

# the checker recomputes every cost and every constraint independently
assert check_solution(inst, sol) == []

out = Path("synthetic_scene.svg")
out.write_text(render_svg(inst, sol))
print("wrote", out.resolve())
