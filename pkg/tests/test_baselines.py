"""Benchmark strategies: closed forms, hand traces, the enumeration oracle."""

import dataclasses
import json
from pathlib import Path

import pytest

from conftest import single_vnf_scenario
from corpus import make_toy
from optiloop.baselines import (
    all_active,
    consolidation,
    exact_optimum,
    optiloop_strategy,
    relaxed_bound,
)
from optiloop.errors import BudgetExceeded, InstanceInfeasible
from optiloop.model import (
    EnergyModel,
    Link,
    LogicalGraph,
    Node,
    PhysicalGraph,
    Scenario,
    validate_configuration,
)
from optiloop.scenario import strategy_result_to_dict, vepc_two_node

GIG = 1e9
GOLDEN = Path(__file__).parent / "golden"


def _zero_demand(s):
    lg = s.logical
    zeroed = {k: 0.0 for k in lg.ingress_demand}
    return dataclasses.replace(
        s, logical=dataclasses.replace(lg, ingress_demand=zeroed)
    )


# ---------------------------------------------------------------------------
# all_active


def test_all_active_zero_demand_closed_form(vepc):
    s = _zero_demand(vepc)
    res = all_active(s)
    C = len(s.physical.nodes)
    V = len(s.logical.vnfs)
    assert res.energy.total == C * s.energy.idle_power + C * V * s.energy.placement_power
    assert res.energy.placement == 0.0  # instance power is zero by default


def test_all_active_counts_placement_power(vepc):
    pricey = dataclasses.replace(
        vepc, energy=dataclasses.replace(vepc.energy, placement_power=2.0)
    )
    s = _zero_demand(pricey)
    res = all_active(s)
    assert res.energy.placement == 2.0 * len(s.physical.nodes) * len(s.logical.vnfs)


def test_all_active_fixture_hand_value(vepc):
    """Optimal routing splits the MME between the two nodes: 2 Gbit/s total
    node egress, so 130 idle + 144 processing + 6.5 switching."""
    res = all_active(vepc)
    assert res.energy.total == pytest.approx(280.5, abs=1e-6)
    assert res.energy.idle == 130.0
    assert res.energy.processing == pytest.approx(144.0, abs=1e-9)
    assert res.energy.switching == pytest.approx(6.5, abs=1e-9)


def test_all_active_dominates_loop(vepc):
    aa = all_active(vepc)
    ol = optiloop_strategy(vepc, seed=0, rounds=2)
    # both nodes are load-bearing here, so the loop can only match or pay
    # a small routing penalty for the zero-cost instances it sheds
    assert aa.energy.total <= ol.energy.total + 1.0
    assert validate_configuration(vepc, ol.configuration, tol=1e-6) == []


def test_all_active_infeasible_instance():
    s = single_vnf_scenario(demand=5.0 * GIG, caps={("e0", "m1"): 1.0 * GIG})
    with pytest.raises(InstanceInfeasible):
        all_active(s)


# ---------------------------------------------------------------------------
# consolidation


def test_consolidation_single_flow_minimal_chain():
    """One flow through a two-step chain: one instance per function, nothing
    beyond the needed path activated."""
    logical = LogicalGraph(
        endpoints={"e0"},
        vnfs={"A", "B"},
        chi={("e0", "A", "B"): 1.0},
        ingress_demand={("e0", "A"): 1.0 * GIG},
    )
    physical = PhysicalGraph(
        nodes={
            "m1": Node(10 * GIG),
            "m2": Node(10 * GIG),
            "m3": Node(10 * GIG),
        },
        links={
            ("e0", "m1"): Link(10 * GIG),
            ("m1", "m2"): Link(10 * GIG),
            ("m2", "m1"): Link(10 * GIG),
            ("m2", "m3"): Link(10 * GIG),
            ("m3", "m2"): Link(10 * GIG),
        },
    )
    s = Scenario(
        logical=logical,
        physical=physical,
        energy=EnergyModel(idle_power=65.0, proc_power_per_unit=48e-9,
                           switch_energy_per_bit=3.25e-9),
    )
    res = consolidation(s)
    counts = {}
    for (c, v), val in res.configuration.delta.items():
        counts[v] = counts.get(v, 0) + val
    assert counts == {"A": 1, "B": 1}
    assert res.configuration.y["m3"] == 0  # never needed
    assert validate_configuration(s, res.configuration, tol=1e-6) == []
    assert res.stats["stages"]["activate"] >= 1


def test_consolidation_reuses_instances_on_second_flow():
    logical = LogicalGraph(
        endpoints={"e0", "e1"},
        vnfs={"A"},
        chi={},
        ingress_demand={("e0", "A"): 1.0 * GIG, ("e1", "A"): 1.0 * GIG},
    )
    physical = PhysicalGraph(
        nodes={"m1": Node(8 * GIG), "m2": Node(8 * GIG)},
        links={
            ("e0", "m1"): Link(8 * GIG),
            ("e1", "m1"): Link(8 * GIG),
            ("m1", "m2"): Link(8 * GIG),
            ("m2", "m1"): Link(8 * GIG),
        },
    )
    s = Scenario(logical=logical, physical=physical,
                 energy=EnergyModel(idle_power=65.0, proc_power_per_unit=48e-9))
    res = consolidation(s)
    assert sum(res.configuration.delta.values()) == 1  # one shared instance
    assert res.stats["stages"]["reuse"] >= 1
    assert res.stats["stages"]["activate"] == 1


def test_consolidation_zero_demand_activates_nothing(vepc):
    res = consolidation(_zero_demand(vepc))
    assert res.energy.total == 0.0
    assert res.configuration.active_nodes() == []


def test_consolidation_deterministic(vepc):
    r1 = consolidation(vepc)
    r2 = consolidation(vepc)
    assert r1.configuration.x == r2.configuration.x
    assert r1.configuration.delta == r2.configuration.delta
    assert r1.energy.total == r2.energy.total


def test_consolidation_dead_end_reports_stage():
    s = single_vnf_scenario(demand=2.0 * GIG, k=(0.5 * GIG, 0.5 * GIG))
    with pytest.raises(InstanceInfeasible) as err:
        consolidation(s)
    assert "consolidation" in (err.value.context or "")


# ---------------------------------------------------------------------------
# exact_optimum


def test_exact_zero_demand_all_off(vepc):
    res = exact_optimum(_zero_demand(vepc))
    assert res.energy.total == 0.0
    assert res.configuration.active_nodes() == []
    assert res.stats["exact"] is True


def test_exact_avoids_switching_heavy_host():
    """Hosting the first function on the high-switching-cost node would
    exhaust its compute, so the optimum processes it on the other node."""
    logical = LogicalGraph(
        endpoints={"e0"},
        vnfs={"A", "B"},
        chi={("e0", "A", "B"): 1.0},
        ingress_demand={("e0", "A"): 1.0 * GIG},
    )
    physical = PhysicalGraph(
        nodes={
            "m1": Node(compute=2.5 * GIG, switch_cost=2.0),
            "m2": Node(compute=2.5 * GIG, switch_cost=0.0),
        },
        links={
            ("e0", "m1"): Link(8 * GIG),
            ("e0", "m2"): Link(8 * GIG),
            ("m1", "m2"): Link(8 * GIG),
            ("m2", "m1"): Link(8 * GIG),
        },
    )
    s = Scenario(logical=logical, physical=physical,
                 energy=EnergyModel(idle_power=65.0, proc_power_per_unit=48e-9,
                                    switch_energy_per_bit=3.25e-9))
    res = exact_optimum(s)
    assert res.energy.total == pytest.approx(130 + 96 + 3.25, abs=1e-6)
    processed_a_at = {
        c for (c, e, v1, v2), val in res.configuration.processed.items()
        if v2 == "A" and val > 1e-3
    }
    assert processed_a_at == {"m2"}


def test_exact_placement_power_prunes_spares():
    """With instance power on, the optimum deploys exactly what it uses."""
    s = single_vnf_scenario(
        demand=1.0 * GIG,
        energy=EnergyModel(idle_power=10.0, placement_power=3.0,
                           proc_power_per_unit=1e-9),
    )
    res = exact_optimum(s)
    assert sum(res.configuration.delta.values()) == 1
    assert res.energy.placement == 3.0
    assert res.energy.total == pytest.approx(10.0 + 3.0 + 1.0)


def test_exact_budget_exceeded_carries_best(vepc):
    with pytest.raises(BudgetExceeded) as err:
        exact_optimum(vepc, budget=1)
    assert err.value.assignments == 1
    if err.value.best is not None:
        assert err.value.best.stats["exact"] is False


def test_exact_golden_regression(vepc):
    res = exact_optimum(vepc)
    got = strategy_result_to_dict(res)
    want = json.loads((GOLDEN / "exact_vepc_two_node.json").read_text())
    assert got == want


def test_sandwich_on_toys():
    for seed in (0, 1, 2):
        s = make_toy(seed)
        lb = relaxed_bound(s)
        ex = exact_optimum(s)
        aa = all_active(s)
        ol = optiloop_strategy(s, seed=seed, rounds=2)
        cons = consolidation(s)
        slack = 1e-5 * max(1.0, ex.energy.total)
        assert lb <= ex.energy.total + slack
        assert ex.energy.total <= ol.energy.total + slack
        assert ex.energy.total <= cons.energy.total + slack
        assert ol.energy.total <= aa.energy.total + slack


def test_strategy_configurations_validate():
    s = make_toy(5)
    for res in (all_active(s), consolidation(s), exact_optimum(s),
                optiloop_strategy(s, seed=5, rounds=2)):
        assert validate_configuration(s, res.configuration, tol=1e-6) == [], res.name


def test_all_active_pays_most_when_a_node_is_dispensable():
    """With idle power on and a clearly spare node, everything-on loses to
    every other strategy."""
    pg = vepc_two_node().physical
    base = vepc_two_node()
    s = dataclasses.replace(
        base,
        physical=PhysicalGraph(
            nodes={**pg.nodes, "n3": Node(compute=0.0, switch_cost=0.0)},
            links={**pg.links, ("n2", "n3"): Link(10 * GIG), ("n3", "n2"): Link(10 * GIG)},
        ),
    )
    aa = all_active(s).energy.total
    for res in (consolidation(s), exact_optimum(s), optiloop_strategy(s, seed=0, rounds=2)):
        assert res.energy.total < aa, res.name
