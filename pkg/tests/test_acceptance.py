"""Acceptance suite.

One test per criterion, each printing a PASS/FAIL line:

 1. Oracle sandwich on >= 50 seeded random toy instances (enumeration-
    tractable: <= 6 nodes, <= 8 links, <= 3 functions): relaxed root <=
    exact <= loop final <= all-active, within 1e-5 relative; < 5 minutes.
 2. Loop near-optimality: median loop energy within 10% of the exact
    optimum and not above the consolidation median.
 3. Feasibility safety: 1,000 randomized loop executions with demand
    rescaled mid-run; zero constraint violations at any phase boundary
    (tolerance 1e-6).
 4. Generalized flow conservation on the packet-core chain with unit
    ingress: exactly {eNB->GW: 1, eNB->MME: 0.3, GW->MME: 0.2,
    MME->HSS: 0.5}.
 5. Energy arithmetic: 65 W idle + 1 Gbit/s switched at 3.25 nJ/bit +
    1 Gbit/s processed at 48 nJ/bit = 116.25 W within 1e-9.
 6. IIS contract on 100 constructed infeasible instances (50 capacity-
    starved, 50 compute-starved): removing any single member restores
    feasibility and the expected family (4 or 7) is always present.
 7. Spare-compute ordering: consolidation mean >= loop mean >= exact
    mean - tolerance.
 8. Determinism: repeated experiment runs produce byte-identical CSV.
 9. Zero-demand degeneracy: the shutdown phase drains the all-on start
    to exactly zero energy.
"""

import dataclasses
import statistics
import time

import numpy as np
import pytest

from corpus import make_capacity_starved, make_compute_starved, make_toy
from optiloop import lp
from optiloop.baselines import (
    all_active,
    consolidation,
    exact_optimum,
    optiloop_strategy,
    relaxed_bound,
)
from optiloop.iis import _feasible, compute_iis
from optiloop.loop import (
    _all_on,
    _assignment_modes,
    fix_problems,
    save_energy,
    start_loop,
)
from optiloop.metrics import ExperimentConfig, compute_metrics, run_experiment
from optiloop.model import energy_of, validate_configuration
from optiloop.scenario import GeneratorParams, scale_demand, vepc_two_node
from optiloop.model import LogicalGraph, derive_logical_flows

N_INSTANCES = 50
N_SAFETY_RUNS = 1000
REL_TOL = 1e-5


def _report(num, ok, detail):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def corpus_results():
    t0 = time.perf_counter()
    rows = []
    for seed in range(N_INSTANCES):
        s = make_toy(seed)
        aa = all_active(s)
        rows.append(
            {
                "seed": seed,
                "scenario": s,
                "relaxed": relaxed_bound(s),
                "exact": exact_optimum(s),
                "all_active": aa,
                "optiloop": optiloop_strategy(s, seed=seed, rounds=3),
                "consolidation": consolidation(s),
            }
        )
    return rows, time.perf_counter() - t0


def test_criterion_1_oracle_sandwich(corpus_results):
    rows, elapsed = corpus_results
    worst = ""
    ok = True
    for r in rows:
        ex = r["exact"].energy.total
        ol = r["optiloop"].energy.total
        aa = r["all_active"].energy.total
        lb = r["relaxed"]
        slack = REL_TOL * max(1.0, ex)
        if not (lb <= ex + slack and ex <= ol + slack and ol <= aa + REL_TOL * max(1.0, aa)):
            ok = False
            worst = f"seed {r['seed']}: lb={lb:.6f} exact={ex:.6f} loop={ol:.6f} allon={aa:.6f}"
            break
    ok = ok and elapsed < 300.0
    _report(
        1,
        ok,
        f"{len(rows)} instances, corpus evaluated in {elapsed:.1f}s "
        f"(budget 300s){'; ' + worst if worst else ''}",
    )


def test_criterion_2_near_optimality(corpus_results):
    rows, _ = corpus_results
    ratios = [r["optiloop"].energy.total / r["exact"].energy.total for r in rows]
    med_ratio = statistics.median(ratios)
    med_ol = statistics.median(r["optiloop"].energy.total for r in rows)
    med_cons = statistics.median(r["consolidation"].energy.total for r in rows)
    ok = med_ratio <= 1.10 and med_ol <= med_cons + REL_TOL * max(1.0, med_cons)
    _report(
        2,
        ok,
        f"median loop/exact ratio {med_ratio:.4f} (<= 1.10), "
        f"median loop {med_ol:.2f} vs consolidation {med_cons:.2f}",
    )


def test_criterion_3_feasibility_safety():
    base_instances = [make_toy(1000 + i) for i in range(50)]
    violations = 0
    runs = 0
    t0 = time.perf_counter()
    rng = np.random.default_rng(777)
    while runs < N_SAFETY_RUNS:
        s = base_instances[runs % len(base_instances)]
        factor = float(np.round(rng.uniform(0.5, 1.8), 3))
        swapped = scale_demand(s, factor)
        state = start_loop(s, seed=runs)
        if validate_configuration(state.scenario, state.current, tol=1e-6):
            violations += 1
        for rnd in range(2):
            if rnd == 1:
                state.scenario = swapped
                state.base_problem = lp.build_problem(swapped)
            fix_problems(state)
            if validate_configuration(state.scenario, state.current, tol=1e-6):
                violations += 1
            save_energy(state)
            if validate_configuration(state.scenario, state.current, tol=1e-6):
                violations += 1
        runs += 1
    elapsed = time.perf_counter() - t0
    _report(
        3,
        violations == 0,
        f"{runs} loop executions with mid-run demand rescale, "
        f"{violations} phase-boundary violations ({elapsed:.0f}s)",
    )


def test_criterion_4_generalized_flow_conservation():
    s = vepc_two_node()
    lg = s.logical
    unit = LogicalGraph(
        endpoints=lg.endpoints,
        vnfs=lg.vnfs,
        chi=lg.chi,
        ingress_demand={("RRH", "eNB"): 1.0},
    )
    flows = derive_logical_flows(unit)
    want = {
        ("RRH", "eNB", "PSGW"): 1.0,
        ("RRH", "eNB", "MME"): 0.3,
        ("RRH", "PSGW", "MME"): 0.2,
        ("RRH", "MME", "HSS"): 0.5,
    }
    _report(4, flows == want, f"derived flows {sorted(flows.items())}")


def test_criterion_5_energy_arithmetic():
    from conftest import single_vnf_scenario
    from optiloop.model import EnergyModel, NetworkConfiguration

    s = single_vnf_scenario(
        energy=EnergyModel(
            idle_power=65.0,
            proc_power_per_unit=48e-9,
            switch_energy_per_bit=3.25e-9,
        )
    )
    cfg = NetworkConfiguration(
        x={},
        y={"m1": 1, "m2": 0},
        delta={},
        tau={("m1", "m2", "e0", "A", "A"): 1e9},
        processed={("m1", "e0", "A", "A"): 1e9},
    )
    total = energy_of(s, cfg).total
    _report(5, abs(total - 116.25) <= 1e-9, f"total {total!r} W vs 116.25 W")


def test_criterion_6_iis_contract():
    failures = []
    t0 = time.perf_counter()
    for idx in range(50):
        for maker, family in ((make_capacity_starved, 4), (make_compute_starved, 7)):
            s = maker(idx)
            p = lp.build_problem(s)
            x, y, d = _all_on(s)
            fp = lp._with_modes(p, _assignment_modes(p, x, y, d))
            report = compute_iis(fp)
            if family not in report.families:
                failures.append((maker.__name__, idx, "missing family"))
                continue
            id_to_row = {con.cid: r for r, con in enumerate(fp.constraints)}
            rows = sorted(id_to_row[cid] for cid in report.constraint_ids)
            if _feasible(fp, rows):
                failures.append((maker.__name__, idx, "reported set is feasible"))
                continue
            for drop in rows:
                if not _feasible(fp, [r for r in rows if r != drop]):
                    failures.append((maker.__name__, idx, "non-minimal member"))
                    break
    elapsed = time.perf_counter() - t0
    _report(
        6,
        not failures,
        f"100 starved instances, minimality and family checks in {elapsed:.0f}s"
        + (f"; first failure {failures[0]}" if failures else ""),
    )


def test_criterion_7_spare_compute_ordering(corpus_results):
    rows, _ = corpus_results
    spares = {"consolidation": [], "optiloop": [], "exact": []}
    for r in rows:
        for name in spares:
            m = compute_metrics(r["scenario"], r[name], r["all_active"])
            spares[name].append(m.spare_ccat)
    mean = {name: statistics.mean(vals) for name, vals in spares.items()}
    tol = 1e-6 * max(1.0, abs(mean["exact"]))
    ok = (
        mean["consolidation"] >= mean["optiloop"] - tol
        and mean["optiloop"] >= mean["exact"] - tol
    )
    _report(
        7,
        ok,
        "mean spare compute: consolidation "
        f"{mean['consolidation']:.3e} >= loop {mean['optiloop']:.3e} "
        f">= exact {mean['exact']:.3e} (tol {tol:.1e})",
    )


def test_criterion_8_determinism(tmp_path):
    def config(out):
        return ExperimentConfig(
            generator=GeneratorParams(
                n_endpoints=1,
                n_nodes=3,
                rng_seed=11,
                endpoint_demand_range=(0.6e9, 1.1e9),
                node_processing_capacity=20e9,
            ),
            strategies=("all_active", "consolidation", "optiloop", "exact"),
            factors=(0.5, 1.0, 2.0),
            seeds=(0, 1),
            rounds=2,
            out=str(out),
        )

    run_experiment(config(tmp_path / "a.csv"))
    run_experiment(config(tmp_path / "b.csv"))
    a = (tmp_path / "a.csv").read_bytes()
    b = (tmp_path / "b.csv").read_bytes()
    _report(8, a == b, f"two runs, {len(a)} CSV bytes, identical={a == b}")


def test_criterion_9_zero_demand_drains_to_zero():
    s = vepc_two_node()
    zero = dataclasses.replace(
        s,
        logical=dataclasses.replace(s.logical, ingress_demand={("RRH", "eNB"): 0.0}),
    )
    state = start_loop(zero, seed=0)
    save_energy(state)
    total = energy_of(zero, state.current).total
    _report(9, total == 0.0, f"final energy {total!r} W")
