"""Independent reference implementations the tests check the package
against.  Everything here is deliberately brute force or recomputed
from first principles."""

import itertools
import random
from collections import defaultdict

from dfgfold.bench import resolve_config
from dfgfold.graph import COMMUTATIVE_KINDS, KIND_ARITY, GraphBuilder, canonicalize, node_arity
from dfgfold.patterns import CoreInstance
from dfgfold.scheduling import CoreGraph, build_core_graph, folding_delay


def inst_key(inst: CoreInstance) -> tuple:
    return (tuple(sorted(inst.mapping)), tuple(sorted(inst.portmap)))


def oracle_keys(graph, pattern) -> set[tuple]:
    """Every induced embedding by exhaustive enumeration.

    Tries all injective kind-respecting assignments, and for each
    commutative mapped node that has a pattern in-edge, both operand
    orders.  An embedding counts when the graph edges among the mapped
    nodes are exactly the oriented pattern edges.
    """
    by_kind: dict[str, list[str]] = {}
    for n in graph.nodes:
        by_kind.setdefault(n.kind, []).append(n.id)
    pat_by_kind: dict[str, list[str]] = {}
    for pn in pattern.nodes:
        pat_by_kind.setdefault(pn.kind, []).append(pn.id)

    pools = []
    for kind in sorted(pat_by_kind):
        pids = pat_by_kind[kind]
        gids = by_kind.get(kind, [])
        pools.append((pids, list(itertools.permutations(gids, len(pids)))))

    constrained = {e.dst for e in pattern.edges}
    keys: set[tuple] = set()
    for combo in itertools.product(*(opts for _, opts in pools)):
        amap: dict[str, str] = {}
        for (pids, _), chosen in zip(pools, combo):
            for pid, gid in zip(pids, chosen):
                amap[pid] = gid
        keys |= _oriented_keys(graph, pattern, amap, constrained)
    return keys


def _oriented_keys(graph, pattern, amap, constrained) -> set[tuple]:
    mapped = set(amap.values())
    actual = {
        (ge.src, ge.src_port, ge.dst, ge.dst_port, ge.delay)
        for gid in mapped
        for ge in graph.out_edges(gid)
        if ge.dst in mapped
    }
    # Orientation matters only for commutative nodes the pattern drives.
    flexible = []
    base: dict[str, tuple[int, ...]] = {}
    for pid, gid in amap.items():
        n_in = node_arity(graph.node_map[gid])[0]
        base[gid] = tuple(range(n_in))
        if pid in constrained and graph.node_map[gid].kind in COMMUTATIVE_KINDS:
            flexible.append(gid)

    keys: set[tuple] = set()
    for flips in itertools.product((False, True), repeat=len(flexible)):
        orient = dict(base)
        for gid, flip in zip(flexible, flips):
            if flip:
                orient[gid] = (1, 0)
        expected = {
            (amap[e.src], e.src_port, amap[e.dst], orient[amap[e.dst]][e.dst_port], e.delay)
            for e in pattern.edges
        }
        if expected == actual:
            keys.add(
                (
                    tuple(sorted(amap.items())),
                    tuple(sorted((gid, orient[gid]) for gid in mapped)),
                )
            )
    return keys


def random_dag(seed: int):
    """Small random operator graph; two-input nodes usually take distinct
    sources but occasionally the same one on both ports."""
    rng = random.Random(seed)
    b = GraphBuilder(f"rand{seed}")
    b.node("in0", "input")
    b.node("in1", "input")
    pool = ["in0", "in1"]
    consumed: set[str] = set()
    kinds = ["add", "sub", "mult", "add", "mult", "sine-lut", "delay", "negate"]
    for i in range(rng.randint(5, 9)):
        kind = rng.choice(kinds)
        nid = f"n{i}"
        b.node(nid, kind)
        n_in = KIND_ARITY[kind][0]
        if n_in == 2 and rng.random() < 0.1:
            src = rng.choice(pool)
            srcs = [src, src]
        else:
            srcs = rng.sample(pool, n_in)
        for port, src in enumerate(srcs):
            delay = 1 if rng.random() < 0.15 else 0
            b.edge(src, (nid, port), delay=delay)
            consumed.add(src)
        pool.append(nid)
    sinks = sorted(set(pool[2:]) - consumed) or [pool[-1]]
    for j, nid in enumerate(sinks):
        b.node(f"out{j}", "output")
        b.edge(nid, f"out{j}")
    return b.build()


def random_core(seed: int) -> CoreGraph:
    """Random DAG of products and leftover two-input operators, with all
    products folded into one class.

    A single-class core on an acyclic graph cannot form a structural
    combinational loop (same-class arcs never reach zero registers across
    distinct slots, and singleton-only loops would need a graph cycle),
    so plain per-arc feasibility is the whole story and the brute-force
    minimum below is exact.
    """
    rng = random.Random(seed)
    b = GraphBuilder(f"core{seed}")
    b.node("i0", "input")
    b.node("i1", "input")
    pool = ["i0", "i1"]
    consumed: set[str] = set()
    n_mult = rng.randint(2, 4)
    kinds = ["mult"] * n_mult + [rng.choice(["add", "sub"]) for _ in range(rng.randint(1, 3))]
    rng.shuffle(kinds)
    for i, kind in enumerate(kinds):
        nid = f"n{i}"
        b.node(nid, kind)
        srcs = rng.sample(pool, 2)
        for port, src in enumerate(srcs):
            delay = 1 if rng.random() < 0.3 else 0
            b.edge(src, (nid, port), delay=delay)
            consumed.add(src)
        pool.append(nid)
    sinks = sorted(set(pool[2:]) - consumed) or [pool[-1]]
    for j, nid in enumerate(sinks):
        b.node(f"out{j}", "output")
        b.edge(nid, f"out{j}")
    graph = b.build()
    config = resolve_config(graph, [("prod", n_mult)], exact=True)
    return build_core_graph(canonicalize(graph), config)


def brute_min_n(core: CoreGraph, cap: int) -> int | None:
    """Smallest slot count with a feasible assignment, by backtracking
    over every slot choice: class members get distinct slots, every arc
    needs a nonnegative register count."""
    order = [v.id for v in core.vertices]
    is_inst = {v.id: not v.is_singleton for v in core.vertices}
    lat = {v.id: v.latency for v in core.vertices}
    by_vertex: dict[str, list] = defaultdict(list)
    for a in core.arcs:
        by_vertex[a.src_vertex].append(a)
        if a.dst_vertex != a.src_vertex:
            by_vertex[a.dst_vertex].append(a)

    def arc_ok(a, assign: dict, n: int) -> bool:
        su = assign.get(a.src_vertex)
        sv = assign.get(a.dst_vertex)
        if su is None or sv is None:
            return True
        return folding_delay(a.weight, lat[a.src_vertex], su, sv, n) >= 0

    def rec(i: int, assign: dict, used: frozenset, n: int) -> bool:
        if i == len(order):
            return True
        vid = order[i]
        for s in range(n):
            if is_inst[vid] and s in used:
                continue
            assign[vid] = s
            if all(arc_ok(a, assign, n) for a in by_vertex[vid]):
                nxt = used | {s} if is_inst[vid] else used
                if rec(i + 1, assign, nxt, n):
                    return True
            del assign[vid]
        return False

    lo = max(1, sum(1 for v in core.vertices if not v.is_singleton))
    for n in range(lo, cap + 1):
        if rec(0, {}, frozenset(), n):
            return n
    return None


def rebuild_core(graph, config):
    """The canonicalize-and-build step exactly as fold() performs it."""
    protected = {
        nid for nid in config.covered_nodes() if graph.node_map[nid].kind == "delay"
    }
    canon = canonicalize(graph, protected)
    return canon, build_core_graph(canon, config)


def expected_port_specs(canon, core, config, sched, n):
    """Source specs per shared-unit boundary port, recomputed from the
    canonical graph and the schedule alone.

    A spec is (source identity, alignment register count); a port whose
    instances disagree needs a mux over the distinct specs, in first-use
    order, one data input per spec.
    """
    pid_of = {}
    for ci, cls in enumerate(config.classes):
        for inst in cls.instances:
            for pid, gid in inst.mapping:
                pid_of[gid] = (ci, pid)

    def spec(e, v_slot):
        kind = canon.node_map[e.src].kind
        if kind in ("input", "const-input"):
            return ((kind, e.src), n * e.delay)
        owner = core.owner[e.src]
        u = sched.slots[owner]
        d = folding_delay(e.delay, core.vertex_map[owner].latency, u, v_slot, n)
        tap = ("unit", pid_of[e.src]) if e.src in pid_of else ("node", e.src)
        return (tap, d)

    inst_vertex = {}
    counts = {}
    for v in core.vertices:
        if v.class_index is not None:
            k = counts.get(v.class_index, 0)
            inst_vertex[(v.class_index, k)] = v.id
            counts[v.class_index] = k + 1

    out = {}
    for ci, cls in enumerate(config.classes):
        for pid, pport in cls.pattern.boundary_inputs:
            specs = []
            for k, inst in enumerate(cls.instances):
                v_slot = sched.slots[inst_vertex[(ci, k)]]
                gid = inst.map[pid]
                e = canon.in_edge(gid, inst.graph_port(gid, pport))
                got = spec(e, v_slot)
                if got not in specs:
                    specs.append(got)
            out[(ci, pid, pport)] = specs
    return out


def pareto_oracle(points: list[tuple[float, float]]) -> list[bool]:
    """Quadratic dominance scan; ties keep the earliest point."""
    flags = []
    for i, (xi, yi) in enumerate(points):
        dominated = False
        for j, (xj, yj) in enumerate(points):
            if (xj <= xi and yj <= yi) and (xj < xi or yj < yi):
                dominated = True
                break
            if j < i and xj == xi and yj == yi:
                dominated = True
                break
        flags.append(not dominated)
    return flags
