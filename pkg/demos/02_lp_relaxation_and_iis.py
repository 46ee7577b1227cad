"""Build the joint activation/placement/routing LP, relax it, break it,
and read the infeasibility diagnosis.

Run:  python demos/02_lp_relaxation_and_iis.py
"""

import dataclasses

from optiloop import build_problem, compute_iis, solve, to_lp_text, vepc_two_node
from optiloop.lp import VarRef, fix
from optiloop.loop import _all_on, _assignment_modes
from optiloop import lp
from optiloop.model import Link, PhysicalGraph

s = vepc_two_node()
p = build_problem(s)
print(f"problem: {p.n_vars()} variables, {len(p.constraints)} constraints")

print("\n=== fully relaxed root (lower bound) ===")
root = solve(p)
print("status:", root.status, " objective: %.3f W" % root.objective_value)
for c in ("n1", "n2"):
    print(f"  relaxed activation y({c}) = {root.values[VarRef('y', (c,))]:.4f}")

print("\n=== pin one link and watch the gating pull nodes up ===")
pinned = fix(p, VarRef("x", ("n1", "n2")), 1)
sol = solve(pinned)
print("y(n1) =", round(sol.values[VarRef("y", ("n1",))], 6),
      " y(n2) =", round(sol.values[VarRef("y", ("n2",))], 6))

print("\n=== a slice of the LP text dump (external-solver interchange) ===")
for line in to_lp_text(pinned).splitlines():
    if line.startswith((" eq4", " eq7", " eq9", "Minimize", "Subject", "Bounds", "End")):
        print(line if len(line) < 100 else line[:97] + "...")

print("\n=== starve a link and diagnose the conflict ===")
squeezed = dataclasses.replace(
    s,
    physical=PhysicalGraph(
        nodes=s.physical.nodes,
        links={**s.physical.links, ("RRH", "n1"): Link(capacity=0.4e9)},
    ),
)
p2 = build_problem(squeezed)
x, y, d = _all_on(squeezed)
fixed = lp._with_modes(p2, _assignment_modes(p2, x, y, d))
print("all-on status:", solve(fixed).status)
report = compute_iis(fixed)
print("families in the IIS:", sorted(report.families),
      "(4 = link capacity -> activate links/nodes)")
for cid in report.constraint_ids:
    print("  member:", cid)
