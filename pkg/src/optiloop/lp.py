"""Linear-program representation of a scenario, with per-variable modes.

The joint activation/placement/routing problem is mixed-integer, but every
strategy in this package only ever solves versions where each binary is
either pinned to a value or relaxed to [0, 1], so each solve is a plain LP.
``LpProblem`` is a value: ``fix``/``relax`` return modified copies that
share the (immutable) constraint matrix.

Flow variables are expressed internally in units of the scenario's largest
logical flow (``traffic_scale``), which keeps the tableau well conditioned
when demands are in bit/s; solutions are rescaled on extraction and the
objective is in watts throughout.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import model as mdl
from .errors import InvalidMode, ShapeMismatch
from .simplex import solve_dense

__all__ = [
    "VarRef",
    "RELAXED",
    "fixed",
    "LpProblem",
    "LpSolution",
    "LinearConstraint",
    "build_problem",
    "fix",
    "relax",
    "solve",
    "to_lp_text",
]

BINARY_KINDS = ("x", "y", "delta")
FLOW_KINDS = ("tau", "transit", "processed")
_ARITY = {"x": 2, "y": 1, "delta": 2, "tau": 5, "transit": 4, "processed": 4}

MODE_CONTINUOUS = 0
MODE_RELAXED = 1
MODE_FIXED = 2

RELAXED = "relaxed01"


def fixed(value):
    """Mode marker pinning a binary variable to 0 or 1."""
    value = float(value)
    if value not in (0.0, 1.0):
        raise InvalidMode(f"binaries can only be fixed to 0 or 1, got {value}")
    return ("fixed", value)


@dataclass(frozen=True)
class VarRef:
    """Reference to one decision variable: kind plus index tuple."""

    kind: str
    index: tuple

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise InvalidMode(f"unknown variable kind {self.kind!r}")
        if len(self.index) != _ARITY[self.kind]:
            raise InvalidMode(
                f"{self.kind} takes {_ARITY[self.kind]} indices, got {self.index!r}"
            )
        object.__setattr__(self, "index", tuple(self.index))

    def is_binary(self):
        return self.kind in BINARY_KINDS


@dataclass(frozen=True)
class LinearConstraint:
    cid: tuple  # (family, index_tuple)
    terms: tuple  # ((var_position, coefficient), ...)
    sense: str  # 'le' | 'eq'
    rhs: float


class _DenseCache:
    """Lazily assembled dense rows, shared by all mode variants of a problem."""

    def __init__(self):
        self.matrix = None
        self.rhs = None
        self.senses = None


@dataclass(frozen=True, eq=False)
class LpProblem:
    variables: tuple
    var_index: dict
    modes: np.ndarray
    fixed_values: np.ndarray
    constraints: tuple
    objective: np.ndarray
    traffic_scale: float
    scenario: object = None
    _cache: _DenseCache = field(default_factory=_DenseCache, repr=False)

    def n_vars(self):
        return len(self.variables)

    def mode_of(self, ref):
        pos = self._pos(ref)
        m = self.modes[pos]
        if m == MODE_FIXED:
            return ("fixed", float(self.fixed_values[pos]))
        return RELAXED if m == MODE_RELAXED else "continuous"

    def _pos(self, ref):
        try:
            return self.var_index[ref]
        except KeyError:
            raise InvalidMode(f"variable {ref} is not declared in this problem")

    def binary_refs(self, kind=None):
        kinds = (kind,) if kind else BINARY_KINDS
        return [v for v in self.variables if v.kind in kinds]


@dataclass(eq=False)
class LpSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    values: dict
    objective_value: float
    iterations: int = 0
    max_residual: float = 0.0
    row_duals: np.ndarray = None

    @property
    def is_feasible(self):
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# Problem construction


def _flow_scale(s):
    lg = s.logical
    peak = max(lg.ingress_demand.values(), default=0.0)
    derived = mdl.derive_logical_flows(lg)
    if derived:
        peak = max(peak, max(derived.values()))
    return peak if peak > 0 else 1.0


def build_problem(s, modes=None):
    """Emit the full constraint system for a scenario.

    ``modes`` optionally maps binary VarRefs to ``fixed(v)`` or ``RELAXED``;
    unmentioned binaries default to relaxed.  Flow variables are always
    continuous and may not appear in ``modes``.

    The constraint index space is the full node x endpoint x function-pair
    product, but flow variables only exist for commodities the demand can
    actually reach (positive ingress or a positive derived flow).  Flow on
    any other commodity has no source and could only circulate, so pinning
    it to zero by omission loses nothing and keeps the tableau small.
    """
    lg, pg = s.logical, s.physical
    eps = s.endpoint_ids()
    nodes = s.node_ids()
    vnfs = s.vnf_ids()
    links = s.link_ids()
    pairs = [(a, b) for a in vnfs for b in vnfs]
    first_hops = {
        e: sorted(
            v for (ep, v), rate in lg.ingress_demand.items() if ep == e and rate > 0.0
        )
        for e in eps
    }
    derived = mdl.derive_logical_flows(lg)
    live = {e: set() for e in eps}
    for e in eps:
        for v in first_hops[e]:
            live[e].add((v, v))
    for (e, v1, v2) in derived:
        live[e].add((v1, v2))
    live_pairs = {e: sorted(live[e]) for e in eps}
    t0 = _flow_scale(s)

    variables = []
    for lk in links:
        variables.append(VarRef("x", lk))
    for c in nodes:
        variables.append(VarRef("y", (c,)))
    for c in nodes:
        for v in vnfs:
            variables.append(VarRef("delta", (c, v)))
    ep_set = lg.endpoints
    for (i, j) in links:
        if j in ep_set:
            continue  # nothing terminates at an endpoint
        if i in ep_set:
            for v in first_hops[i]:
                variables.append(VarRef("tau", (i, j, i, v, v)))
        else:
            for e in eps:
                for (v1, v2) in live_pairs[e]:
                    variables.append(VarRef("tau", (i, j, e, v1, v2)))
    for c in nodes:
        for e in eps:
            for (v1, v2) in live_pairs[e]:
                variables.append(VarRef("transit", (c, e, v1, v2)))
    for c in nodes:
        for e in eps:
            for (v1, v2) in live_pairs[e]:
                variables.append(VarRef("processed", (c, e, v1, v2)))

    var_index = {ref: i for i, ref in enumerate(variables)}
    nv = len(variables)

    def col(kind, *index):
        return var_index[VarRef(kind, tuple(index))]

    def maybe(kind, *index):
        return var_index.get(VarRef(kind, tuple(index)))

    in_links = {c: [] for c in nodes}
    out_links = {c: [] for c in nodes}
    ep_out = {e: [] for e in eps}
    for (i, j) in links:
        if j in in_links:
            in_links[j].append((i, j))
        if i in out_links:
            out_links[i].append((i, j))
        if i in ep_out:
            ep_out[i].append((i, j))

    def tau_col(i, j, e, v1, v2):
        ref = VarRef("tau", (i, j, e, v1, v2))
        return var_index.get(ref)

    cons = []

    # Family 1: arrivals split into transit and processed traffic.
    for c in nodes:
        for e in eps:
            for (v1, v2) in pairs:
                terms = []
                for (i, j) in in_links[c]:
                    pos = tau_col(i, j, e, v1, v2)
                    if pos is not None:
                        terms.append((pos, 1.0))
                for kind in ("transit", "processed"):
                    pos = maybe(kind, c, e, v1, v2)
                    if pos is not None:
                        terms.append((pos, -1.0))
                cons.append(LinearConstraint((1, (c, e, v1, v2)), tuple(terms), "eq", 0.0))

    # Family 2: departures are transit plus chi-transformed processed traffic.
    for c in nodes:
        for e in eps:
            for (vb, vc) in pairs:
                terms = []
                for (i, j) in out_links[c]:
                    pos = tau_col(i, j, e, vb, vc)
                    if pos is not None:
                        terms.append((pos, 1.0))
                pos = maybe("transit", c, e, vb, vc)
                if pos is not None:
                    terms.append((pos, -1.0))
                for va in vnfs:
                    ratio = lg.chi_out(e, va, vb, vc)
                    if ratio > 0.0:
                        pos = maybe("processed", c, e, va, vb)
                        if pos is not None:
                            terms.append((pos, -ratio))
                cons.append(LinearConstraint((2, (c, e, vb, vc)), tuple(terms), "eq", 0.0))

    # Family 3: a link needs both node-side ends active.
    for (i, j) in links:
        xpos = col("x", i, j)
        if i in pg.nodes:
            cons.append(
                LinearConstraint(
                    (3, (i, j, "src")), ((xpos, 1.0), (col("y", i), -1.0)), "le", 0.0
                )
            )
        if j in pg.nodes:
            cons.append(
                LinearConstraint(
                    (3, (i, j, "dst")), ((xpos, 1.0), (col("y", j), -1.0)), "le", 0.0
                )
            )

    # Family 4: link capacity gated by activation.
    for (i, j) in links:
        terms = []
        for e in eps:
            if i in ep_set and e != i:
                continue
            for (v1, v2) in live_pairs[e]:
                pos = tau_col(i, j, e, v1, v2)
                if pos is not None:
                    terms.append((pos, 1.0))
        terms.append((col("x", i, j), -pg.links[(i, j)].capacity / t0))
        cons.append(LinearConstraint((4, (i, j)), tuple(terms), "le", 0.0))

    # Family 5: deployment on active nodes only.
    for c in nodes:
        for v in vnfs:
            cons.append(
                LinearConstraint(
                    (5, (c, v)), ((col("delta", c, v), 1.0), (col("y", c), -1.0)), "le", 0.0
                )
            )

    # Family 6: processing needs a deployed instance.
    for c in nodes:
        k = pg.nodes[c].compute / t0
        for e in eps:
            for (v1, v2) in pairs:
                terms = []
                pos = maybe("processed", c, e, v1, v2)
                if pos is not None:
                    terms.append((pos, 1.0))
                terms.append((col("delta", c, v2), -k))
                cons.append(
                    LinearConstraint((6, (c, e, v1, v2)), tuple(terms), "le", 0.0)
                )

    # Family 7: compute covers processing plus software switching on egress.
    for c in nodes:
        spec = pg.nodes[c]
        terms = []
        for e in eps:
            for (v1, v2) in live_pairs[e]:
                terms.append(
                    (col("processed", c, e, v1, v2), lg.compute_per_bit[v2])
                )
        if spec.switch_cost > 0.0:
            for (i, j) in out_links[c]:
                for e in eps:
                    for (v1, v2) in live_pairs[e]:
                        pos = tau_col(i, j, e, v1, v2)
                        if pos is not None:
                            terms.append((pos, spec.switch_cost))
        cons.append(LinearConstraint((7, (c,)), tuple(terms), "le", spec.compute / t0))

    # Family 8: per-endpoint delay budget (normalized by injected traffic).
    if s.delays_enabled:
        for e in eps:
            bound = s.max_delay.get(e)
            if bound is None:
                continue
            total_l = sum(
                rate for (ep, v), rate in lg.ingress_demand.items() if ep == e
            )
            if total_l <= 0.0:
                continue
            terms = []
            for (i, j) in links:
                d = pg.links[(i, j)].delay
                if d == 0.0:
                    continue
                for (v1, v2) in live_pairs[e]:
                    pos = tau_col(i, j, e, v1, v2)
                    if pos is not None:
                        terms.append((pos, d))
            for c in nodes:
                for (v1, v2) in live_pairs[e]:
                    d = lg.per_vnf_delay[v2]
                    if d > 0.0:
                        terms.append((col("processed", c, e, v1, v2), d))
            cons.append(
                LinearConstraint((8, (e,)), tuple(terms), "le", bound * total_l / t0)
            )

    # Family 9: injected traffic equals demand.
    for e in eps:
        for v in first_hops[e]:
            terms = []
            for (i, j) in ep_out[e]:
                pos = tau_col(i, j, e, v, v)
                if pos is not None:
                    terms.append((pos, 1.0))
            cons.append(
                LinearConstraint(
                    (9, (e, v)), tuple(terms), "eq", lg.ingress_demand[(e, v)] / t0
                )
            )

    # Objective: the affine energy model, in watts.
    em = s.energy
    objective = np.zeros(nv)
    for ref, pos in var_index.items():
        if ref.kind == "y":
            objective[pos] = em.idle_power
        elif ref.kind == "delta":
            objective[pos] = em.placement_power
        elif ref.kind == "processed":
            v2 = ref.index[3]
            objective[pos] = em.proc_power_per_unit * lg.compute_per_bit[v2] * t0
        elif ref.kind == "tau":
            i = ref.index[0]
            per_bit = em.link_energy_per_bit
            if i not in ep_set:
                per_bit += em.switch_energy_per_bit
            objective[pos] = per_bit * t0

    mode_arr = np.zeros(nv, dtype=np.int8)
    fixed_arr = np.zeros(nv)
    for ref, pos in var_index.items():
        if ref.is_binary():
            mode_arr[pos] = MODE_RELAXED

    problem = LpProblem(
        variables=tuple(variables),
        var_index=var_index,
        modes=mode_arr,
        fixed_values=fixed_arr,
        constraints=tuple(cons),
        objective=objective,
        traffic_scale=t0,
        scenario=s,
    )
    if modes:
        problem = _with_modes(problem, modes)
    return problem


def _with_modes(p, updates):
    modes = p.modes.copy()
    fixed_vals = p.fixed_values.copy()
    for ref, mode in updates.items():
        pos = p._pos(ref)
        if not ref.is_binary():
            raise InvalidMode(f"cannot change mode of flow variable {ref}")
        if mode == RELAXED:
            modes[pos] = MODE_RELAXED
        elif isinstance(mode, tuple) and len(mode) == 2 and mode[0] == "fixed":
            value = float(mode[1])
            if value not in (0.0, 1.0):
                raise InvalidMode(f"binary {ref} fixed to non-binary value {value}")
            modes[pos] = MODE_FIXED
            fixed_vals[pos] = value
        else:
            raise InvalidMode(f"unrecognized mode {mode!r} for {ref}")
    return replace(p, modes=modes, fixed_values=fixed_vals)


def fix(p, ref, value):
    """Pin one binary variable; returns a new problem."""
    return _with_modes(p, {ref: fixed(value)})


def relax(p, ref):
    """Let one binary variable range over [0, 1]; returns a new problem."""
    return _with_modes(p, {ref: RELAXED})


# ---------------------------------------------------------------------------
# Solving


# Beyond this many tableau cells the dense solver would thrash or OOM;
# instances that big call for an external solver behind this seam.
DENSE_CELL_LIMIT = 50_000_000


def _dense(p):
    cache = p._cache
    if cache.matrix is None:
        m = len(p.constraints)
        if m * p.n_vars() > DENSE_CELL_LIMIT:
            raise ShapeMismatch(
                f"problem of {m} rows x {p.n_vars()} columns exceeds the built-in "
                "dense solver's size budget; plug an external LP solver in for "
                "instances of this scale"
            )
        mat = np.zeros((m, p.n_vars()))
        rhs = np.zeros(m)
        senses = []
        for r, con in enumerate(p.constraints):
            for pos, coef in con.terms:
                mat[r, pos] += coef
            rhs[r] = con.rhs
            senses.append(con.sense)
        cache.matrix = mat
        cache.rhs = rhs
        cache.senses = senses
    return cache.matrix, cache.rhs, cache.senses


def _assemble(p, row_subset=None):
    """Dense submatrix over free columns, with fixed values folded into the
    rhs and [0,1] bounds appended for relaxed binaries.

    Rows whose free part vanished and whose rhs is trivially satisfied are
    dropped; ``orig_rows`` maps kept rows back to constraint indices.
    """
    mat, rhs, senses = _dense(p)
    orig = np.arange(len(p.constraints)) if row_subset is None else np.asarray(row_subset)
    if row_subset is not None:
        mat = mat[orig]
        rhs = rhs[orig]
        senses = [senses[i] for i in orig]
    free = p.modes != MODE_FIXED
    fixed_cols = ~free
    if fixed_cols.any():
        rhs = rhs - mat[:, fixed_cols] @ p.fixed_values[fixed_cols]
    A = mat[:, free]
    senses_arr = np.array(senses)
    nonzero = (A != 0.0).any(axis=1)
    trivial = ~nonzero & np.where(
        senses_arr == "eq", np.abs(rhs) <= 1e-12, rhs >= -1e-12
    )
    if trivial.any():
        keep = ~trivial
        A = A[keep]
        rhs = rhs[keep]
        senses_arr = senses_arr[keep]
        orig = orig[keep]
    senses = list(senses_arr)
    relaxed_local = np.where(p.modes[free] == MODE_RELAXED)[0]
    if relaxed_local.size:
        bound_rows = np.zeros((relaxed_local.size, A.shape[1]))
        bound_rows[np.arange(relaxed_local.size), relaxed_local] = 1.0
        A = np.vstack([A, bound_rows])
        rhs = np.concatenate([rhs, np.ones(relaxed_local.size)])
        senses = senses + ["le"] * relaxed_local.size
    c_free = p.objective[free]
    offset = float(p.objective[fixed_cols] @ p.fixed_values[fixed_cols])
    return A, rhs, senses, c_free, offset, free, orig


def solve(p, feasibility_only=False):
    """Run the built-in simplex on the problem.

    Returns an LpSolution; ``feasibility_only`` skips the optimization phase
    and reports the first feasible point found (used heavily by the IIS
    filter).  Raises SolverStall if the pivot budget runs out.
    """
    A, rhs, senses, c_free, offset, free, orig = _assemble(p)
    n_rows = len(p.constraints)
    res = solve_dense(c_free, A, rhs, senses, feasibility_only=feasibility_only)

    def scatter_duals():
        if res.row_duals is None:
            return None
        duals = np.zeros(n_rows)
        kept = orig.size
        duals[orig] = res.row_duals[:kept]
        return duals

    if res.status == "infeasible":
        return LpSolution("infeasible", {}, math.inf, res.iterations, 0.0, scatter_duals())
    if res.status == "unbounded":
        return LpSolution("unbounded", {}, -math.inf, res.iterations, 0.0, None)

    full = p.fixed_values.copy()
    full[free] = res.x
    values = {}
    for ref, pos in p.var_index.items():
        val = full[pos]
        if ref.kind in FLOW_KINDS:
            val *= p.traffic_scale
        values[ref] = float(val)
    resid = 0.0
    if A.shape[0]:
        gap = A @ res.x - rhs
        viol = np.where(np.array(senses) == "eq", np.abs(gap), np.maximum(gap, 0.0))
        resid = float(viol.max())
    return LpSolution(
        "optimal", values, res.objective + offset, res.iterations, resid, scatter_duals()
    )


# ---------------------------------------------------------------------------
# Text dump (CPLEX LP format) for cross-checking with external solvers

_FAMILY_SLUG = {
    1: "in",
    2: "out",
    3: "gate",
    4: "link",
    5: "host",
    6: "proc",
    7: "cap",
    8: "delay",
    9: "inject",
}


def _sanitize(part):
    out = []
    for ch in str(part):
        out.append(ch if ch.isalnum() or ch == "_" else "_")
    return "".join(out)


def var_name(ref):
    return "_".join([ref.kind] + [_sanitize(p) for p in ref.index])


def row_name(cid):
    family, index = cid
    return "_".join([f"eq{family}", _FAMILY_SLUG[family]] + [_sanitize(p) for p in index])


def _fmt(x):
    return repr(float(x))


def to_lp_text(p):
    """Serialize the problem (with its current modes) in CPLEX LP format."""
    lines = ["Minimize", " obj:"]
    terms = []
    for ref, pos in sorted(p.var_index.items(), key=lambda kv: kv[1]):
        coef = p.objective[pos]
        if coef != 0.0:
            terms.append(f" + {_fmt(coef)} {var_name(ref)}")
    lines[1] += "".join(terms) if terms else " 0"
    lines.append("Subject To")
    for con in p.constraints:
        parts = []
        for pos, coef in con.terms:
            ref = p.variables[pos]
            sign = "+" if coef >= 0 else "-"
            parts.append(f" {sign} {_fmt(abs(coef))} {var_name(ref)}")
        op = "<=" if con.sense == "le" else "="
        lines.append(f" {row_name(con.cid)}:{''.join(parts)} {op} {_fmt(con.rhs)}")
    lines.append("Bounds")
    for ref, pos in sorted(p.var_index.items(), key=lambda kv: kv[1]):
        mode = p.modes[pos]
        if mode == MODE_FIXED:
            lines.append(f" {var_name(ref)} = {_fmt(p.fixed_values[pos])}")
        elif mode == MODE_RELAXED:
            lines.append(f" 0 <= {var_name(ref)} <= 1")
    lines.append("End")
    return "\n".join(lines) + "\n"
