import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from optiloop.model import (
    EnergyModel,
    Link,
    LogicalGraph,
    NetworkConfiguration,
    Node,
    PhysicalGraph,
    Scenario,
)
from optiloop.scenario import vepc_two_node

GIG = 1e9


@pytest.fixture
def vepc():
    return vepc_two_node()


@pytest.fixture
def vepc_config(vepc):
    """Hand-built embedding of the chain on the two-node path.

    eNB and HSS on n1, PSGW and MME on n2.  The gateway-to-MME control flow
    is generated at n2 and its target also lives at n2, so it bounces via
    n1 (generated traffic must leave the node before re-entering
    processing).
    """
    u = GIG
    tau = {
        ("RRH", "n1", "RRH", "eNB", "eNB"): 1.0 * u,
        ("n1", "n2", "RRH", "eNB", "PSGW"): 1.0 * u,
        ("n1", "n2", "RRH", "eNB", "MME"): 0.3 * u,
        ("n2", "n1", "RRH", "PSGW", "MME"): 0.2 * u,
        ("n1", "n2", "RRH", "PSGW", "MME"): 0.2 * u,
        ("n2", "n1", "RRH", "MME", "HSS"): 0.5 * u,
    }
    transit = {("n1", "RRH", "PSGW", "MME"): 0.2 * u}
    processed = {
        ("n1", "RRH", "eNB", "eNB"): 1.0 * u,
        ("n2", "RRH", "eNB", "PSGW"): 1.0 * u,
        ("n2", "RRH", "eNB", "MME"): 0.3 * u,
        ("n2", "RRH", "PSGW", "MME"): 0.2 * u,
        ("n1", "RRH", "MME", "HSS"): 0.5 * u,
    }
    delta = {(c, v): 0 for c in ("n1", "n2") for v in ("eNB", "PSGW", "MME", "HSS")}
    delta[("n1", "eNB")] = 1
    delta[("n1", "HSS")] = 1
    delta[("n2", "PSGW")] = 1
    delta[("n2", "MME")] = 1
    return NetworkConfiguration(
        x={("RRH", "n1"): 1, ("n1", "n2"): 1, ("n2", "n1"): 1},
        y={"n1": 1, "n2": 1},
        delta=delta,
        tau=tau,
        transit=transit,
        processed=processed,
    )


def single_vnf_scenario(
    demand=1.0 * GIG,
    k=(10 * GIG, 10 * GIG),
    caps=None,
    rho=0.0,
    energy=None,
):
    """Endpoint -> m1 <-> m2 with one function; the workhorse micro-instance."""
    caps = caps or {}
    logical = LogicalGraph(
        endpoints=frozenset({"e0"}),
        vnfs=frozenset({"A"}),
        chi={},
        ingress_demand={("e0", "A"): demand},
    )
    physical = PhysicalGraph(
        nodes={
            "m1": Node(compute=k[0], switch_cost=rho),
            "m2": Node(compute=k[1], switch_cost=rho),
        },
        links={
            ("e0", "m1"): Link(caps.get(("e0", "m1"), 10 * GIG)),
            ("m1", "m2"): Link(caps.get(("m1", "m2"), 10 * GIG)),
            ("m2", "m1"): Link(caps.get(("m2", "m1"), 10 * GIG)),
        },
    )
    return Scenario(
        logical=logical,
        physical=physical,
        energy=energy
        or EnergyModel(
            idle_power=10.0, proc_power_per_unit=1e-9, switch_energy_per_bit=0.1e-9
        ),
    )
