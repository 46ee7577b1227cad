"""Second, independently-coded evaluator of the nine constraint families.

Used as the oracle against which ``validate_configuration`` is property
tested.  Deliberately structured differently from the production checker:
straight-line accumulation over the configuration's flow entries, no
shared helpers, no per-row normalization (callers pass plain absolute
tolerances on instances with O(1) magnitudes).
"""


def check_all(s, cfg, tol):
    """Return the set of (family, index) pairs violated beyond tol."""
    lg = s.logical
    pg = s.physical
    bad = set()
    eps = sorted(lg.endpoints)
    vnfs = sorted(lg.vnfs)
    nodes = sorted(pg.nodes)

    def tau(i, j, e, v1, v2):
        return cfg.tau.get((i, j, e, v1, v2), 0.0)

    def t(c, e, v1, v2):
        return cfg.transit.get((c, e, v1, v2), 0.0)

    def p(c, e, v1, v2):
        return cfg.processed.get((c, e, v1, v2), 0.0)

    def chi(e, v1, v2, v3):
        if v1 == v2:
            return lg.chi.get((e, v2, v3), 0.0)
        return lg.chi.get((v1, v2, v3), 0.0)

    for c in nodes:
        for e in eps:
            for v1 in vnfs:
                for v2 in vnfs:
                    inflow = 0.0
                    for (i, j) in pg.links:
                        if j == c:
                            inflow += tau(i, j, e, v1, v2)
                    if abs(inflow - t(c, e, v1, v2) - p(c, e, v1, v2)) > tol:
                        bad.add((1, (c, e, v1, v2)))

    for c in nodes:
        for e in eps:
            for v2 in vnfs:
                for v3 in vnfs:
                    outflow = 0.0
                    for (i, j) in pg.links:
                        if i == c:
                            outflow += tau(i, j, e, v2, v3)
                    gen = t(c, e, v2, v3)
                    for v1 in vnfs:
                        gen += p(c, e, v1, v2) * chi(e, v1, v2, v3)
                    if abs(outflow - gen) > tol:
                        bad.add((2, (c, e, v2, v3)))

    for (i, j) in pg.links:
        xv = cfg.x.get((i, j), 0)
        if i in pg.nodes and xv > cfg.y.get(i, 0):
            bad.add((3, (i, j, "src")))
        if j in pg.nodes and xv > cfg.y.get(j, 0):
            bad.add((3, (i, j, "dst")))

    for (i, j) in pg.links:
        load = 0.0
        for e in eps:
            for v1 in vnfs:
                for v2 in vnfs:
                    load += tau(i, j, e, v1, v2)
        if load > cfg.x.get((i, j), 0) * pg.links[(i, j)].capacity + tol:
            bad.add((4, (i, j)))

    for c in nodes:
        for v in vnfs:
            if cfg.delta.get((c, v), 0) > cfg.y.get(c, 0):
                bad.add((5, (c, v)))

    for c in nodes:
        for e in eps:
            for v1 in vnfs:
                for v2 in vnfs:
                    cap = cfg.delta.get((c, v2), 0) * pg.nodes[c].compute
                    if p(c, e, v1, v2) > cap + tol:
                        bad.add((6, (c, e, v1, v2)))

    for c in nodes:
        used = 0.0
        for e in eps:
            for v1 in vnfs:
                for v2 in vnfs:
                    used += lg.compute_per_bit[v2] * p(c, e, v1, v2)
        for (i, j) in pg.links:
            if i == c:
                for e in eps:
                    for v1 in vnfs:
                        for v2 in vnfs:
                            used += pg.nodes[c].switch_cost * tau(i, j, e, v1, v2)
        if used > pg.nodes[c].compute + tol:
            bad.add((7, (c,)))

    if s.delays_enabled:
        for e in eps:
            bound = s.max_delay.get(e)
            total = 0.0
            for v in vnfs:
                total += lg.ingress_demand.get((e, v), 0.0)
            if bound is None or total <= 0.0:
                continue
            acc = 0.0
            for (i, j) in pg.links:
                for v1 in vnfs:
                    for v2 in vnfs:
                        acc += pg.links[(i, j)].delay * tau(i, j, e, v1, v2)
            for c in nodes:
                for v1 in vnfs:
                    for v2 in vnfs:
                        acc += lg.per_vnf_delay[v2] * p(c, e, v1, v2)
            if acc / total > bound + tol:
                bad.add((8, (e,)))

    for e in eps:
        for v in vnfs:
            want = lg.ingress_demand.get((e, v), 0.0)
            got = 0.0
            for (i, j) in pg.links:
                if i == e:
                    got += tau(i, j, e, v, v)
            if want == 0.0 and got == 0.0:
                continue
            if abs(got - want) > tol:
                bad.add((9, (e, v)))

    return bad
