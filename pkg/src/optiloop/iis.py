"""Irreducible inconsistent subsystem extraction for infeasible problems.

Works by deletion filtering: drop a constraint group, re-solve for
feasibility, and discard the group permanently when the remainder is still
infeasible.  Groups are (family, index) units; the link-gating family
contributes two rows per link, so surviving multi-row groups get a second,
row-level refinement pass.  Variable bounds and fixings are part of the
system and are never deleted.

Two speedups keep this affordable inside the repair loop:

* the phase-one duals of the failed solve form a Farkas certificate whose
  support already is an infeasible subsystem; deletion starts from that
  subset whenever it verifies as infeasible;
* feasibility-only solves skip the optimization phase.

Deletion order is deterministic, sweeping the actionable families (link
capacity, compute capacity) last so they survive whenever several IISes
overlap; the repair procedure keys its decisions off exactly those
families.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotInfeasible
from .lp import _assemble, solve
from .simplex import solve_dense

__all__ = ["IisReport", "compute_iis"]

# Families whose presence triggers a repair action go last in the sweep.
_DELETION_ORDER = {fam: rank for rank, fam in enumerate((1, 2, 3, 5, 6, 8, 9, 4, 7))}


@dataclass(frozen=True)
class IisReport:
    """Constraint ids forming the IIS plus the equation families present."""

    constraint_ids: tuple
    families: frozenset
    solves: int = 0

    def __contains__(self, family):
        return family in self.families


def _group_key(cid):
    family, index = cid
    if family == 3:
        return (3, index[:2])
    return cid


def _feasible(p, rows):
    A, rhs, senses, c_free, _offset, _free, _orig = _assemble(p, row_subset=rows)
    res = solve_dense(c_free, A, rhs, senses, feasibility_only=True)
    return res.status != "infeasible"


def compute_iis(p):
    """Extract one deterministic IIS from an infeasible problem.

    Raises NotInfeasible when the problem solves.  The result is minimal:
    removing any single reported constraint leaves a feasible remainder
    (given the problem's variable bounds).
    """
    probe = solve(p, feasibility_only=True)
    if probe.status != "infeasible":
        raise NotInfeasible(f"problem status is {probe.status}")
    solves = 1

    n_rows = len(p.constraints)
    groups = {}
    for r, con in enumerate(p.constraints):
        groups.setdefault(_group_key(con.cid), []).append(r)
    ordered = sorted(groups, key=lambda g: (_DELETION_ORDER[g[0]], g[1]))

    kept = list(ordered)

    # Farkas prefilter: restrict attention to the certificate's support when
    # that support is itself infeasible.  Processing caps are substitutable
    # (per-deployment and per-node rows bound the same variables), so a
    # certificate built on the per-deployment rows also admits the node
    # compute row; pulling those in lets the sweep below keep the compute
    # family, which is the one downstream repair can act on.
    if probe.row_duals is not None:
        support = {
            _group_key(p.constraints[r].cid)
            for r in np.where(np.abs(probe.row_duals) > 1e-9)[0]
            if r < n_rows
        }
        for g in list(support):
            if g[0] == 6:
                twin = (7, (g[1][0],))
                if twin in groups:
                    support.add(twin)
        if support and len(support) < len(kept):
            candidate = [g for g in ordered if g in support]
            rows = sorted(r for g in candidate for r in groups[g])
            solves += 1
            if not _feasible(p, rows):
                kept = candidate

    def rows_of(grps):
        return sorted(r for g in grps for r in groups[g])

    # Group-level deletion sweep.
    for g in list(kept):
        trial = [h for h in kept if h != g]
        solves += 1
        if not _feasible(p, rows_of(trial)):
            kept = trial

    # Row-level refinement inside surviving multi-row groups.
    kept_rows = rows_of(kept)
    for g in [h for h in kept if len(groups[h]) > 1]:
        for r in list(groups[g]):
            if r not in kept_rows:
                continue
            trial = [q for q in kept_rows if q != r]
            solves += 1
            if not _feasible(p, trial):
                kept_rows = trial

    ids = tuple(sorted(p.constraints[r].cid for r in kept_rows))
    families = frozenset(cid[0] for cid in ids)
    return IisReport(ids, families, solves)
