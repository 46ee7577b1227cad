"""Walk through the domain model on the two-node packet-core fixture.

Shows how ingress demand propagates through the transformation ratios,
what a concrete embedding looks like, and how the energy accounting reads.
Run:  python demos/01_model_and_energy.py
"""

from optiloop import (
    derive_logical_flows,
    energy_of,
    validate_configuration,
    vepc_two_node,
)
from optiloop.loop import initial_solution

s = vepc_two_node()

print("=== logical graph ===")
print("endpoints:", sorted(s.logical.endpoints))
print("functions:", sorted(s.logical.vnfs))
for key, ratio in sorted(s.logical.chi.items()):
    print(f"  ratio {key[0]:>5s} -> {key[1]:<5s} emits {ratio:g} toward {key[2]}")

print("\n=== derived logical flows (Gbit/s) ===")
for (e, v1, v2), rate in sorted(derive_logical_flows(s.logical).items()):
    print(f"  {e}: {v1:>5s} -> {v2:<5s} {rate / 1e9:.3f}")

print("\n=== everything-on operating point ===")
cfg = initial_solution(s)
print("violations:", validate_configuration(s, cfg))
print("active nodes:", cfg.active_nodes())
print("deployments :", cfg.deployments())
print("physical flows (Gbit/s):")
for key, val in sorted(cfg.tau.items()):
    i, j, e, v1, v2 = key
    print(f"  {i:>4s} -> {j:<4s} [{e}, {v1}->{v2}] {val / 1e9:.3f}")

e = energy_of(s, cfg)
print("\n=== energy breakdown (W) ===")
print(f"idle {e.idle:.2f} + placement {e.placement:.2f} + processing "
      f"{e.processing:.2f} + switching {e.switching:.2f} + transport "
      f"{e.transport:.2f} = {e.total:.2f}")
