"""Drive the control loop: start everything-on, shed what the traffic does
not need, then double the demand mid-run and watch the repair kick in.

Run:  python demos/03_control_loop.py
"""

import json
import logging

from optiloop import energy_of, run_loop, scale_demand, vepc_two_node
from optiloop.model import Link, Node, PhysicalGraph, Scenario

logging.basicConfig(level=logging.INFO, format="%(message)s")

base = vepc_two_node()
# hang a redundant switch off n2 so there is something to shut down
pg = base.physical
s = Scenario(
    logical=base.logical,
    physical=PhysicalGraph(
        nodes={**pg.nodes, "n3": Node(compute=0.0, switch_cost=0.0)},
        links={
            **pg.links,
            ("n2", "n3"): Link(10e9),
            ("n3", "n2"): Link(10e9),
        },
    ),
    energy=base.energy,
)

print("=== two rounds on the fixture plus a redundant switch ===")
state = run_loop(s, seed=42, rounds=2)
print("final active nodes:", state.current.active_nodes())
print("final energy: %.2f W" % energy_of(s, state.current).total)
print("LP solves per phase:", state.lp_solves)

print("\n=== demand doubles before round 2 ===")
doubled = scale_demand(s, 2.0)
state = run_loop(
    s, seed=42, rounds=2,
    scenario_hook=lambda r, st: doubled if r == 1 else None,
)
print("final energy at 2x demand: %.2f W" % energy_of(doubled, state.current).total)
print("activations made:", state.activations, " deactivations:", state.deactivations)

print("\n=== telemetry trail ===")
for record in state.telemetry:
    print(json.dumps(record, sort_keys=True))
