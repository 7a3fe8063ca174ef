"""Slot assignment for folded designs.

Folding by N shares one physical unit per class across N clock slots.
Every operation (pattern instance or leftover single operator) gets a
slot u in [0, N).  For an arc from U (slot u, unit latency P_u) to V
(slot v) crossing w_e registers in the canonical graph, the folded
design needs

    D = N * w_e - P_u + v - u

registers in front of the consumer's multiplexer, and a schedule is
feasible only if every D is non-negative.  Inputs and constant inputs
hold their value for the whole frame, so arcs leaving them are checked
with u = v and never constrain the schedule.

The scheduler is a list scheduler: slots are filled in order, ready
vertices picked by critical path through zero-register arcs.  Greedy
can paint itself into a corner on small tangled graphs, so a bounded
exhaustive search backs it up before an N is declared infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .graph import (
    EXTERNAL_KINDS,
    DataflowGraph,
    GraphError,
    canonical_ranks,
)
from .patterns import CoreInstance, FoldingConfig


class ScheduleError(ValueError):
    pass


def folding_delay(w_e: int, p_u: int, u: int, v: int, n: int) -> int:
    """Registers required at the consumer mux input for one arc."""
    return n * w_e - p_u + v - u


@dataclass(frozen=True)
class CoreVertex:
    id: str
    class_index: int | None = None
    instance: CoreInstance | None = None
    node_id: str | None = None
    latency: int = 0

    @property
    def is_singleton(self) -> bool:
        return self.class_index is None


@dataclass(frozen=True)
class CoreArc:
    src_vertex: str
    dst_vertex: str
    weight: int
    src_node: str
    src_port: int
    dst_node: str
    dst_port: int


@dataclass(eq=False)
class CoreGraph:
    """Scheduling view of a canonical graph under a folding config."""

    graph: DataflowGraph
    config: FoldingConfig
    vertices: tuple[CoreVertex, ...]
    arcs: tuple[CoreArc, ...]
    owner: dict[str, str]

    @cached_property
    def vertex_map(self) -> dict[str, CoreVertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def class_sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.config.classes)

    def min_slots(self) -> int:
        return max(1, max(self.class_sizes, default=1))


def build_core_graph(graph: DataflowGraph, config: FoldingConfig) -> CoreGraph:
    """Wrap instances and leftover operators of a canonical graph.

    ``graph`` must already have its uncovered delay nodes rewritten into
    edge delays (see canonicalize); a leftover delay node here means the
    caller skipped that and gets an error instead of a wrong schedule.
    """
    owner: dict[str, str] = {}
    vertices: list[CoreVertex] = []
    for ci, cls in enumerate(config.classes):
        for k, inst in enumerate(cls.instances):
            vid = f"c{ci}.{cls.pattern.name}#{k}"
            vertices.append(CoreVertex(vid, ci, inst, None, cls.pattern.latency))
            for gid in inst.nodes:
                if gid in owner:
                    raise GraphError(f"node {gid!r} claimed by two instances")
                owner[gid] = vid

    ranks = canonical_ranks(graph)
    leftovers = []
    for n in graph.nodes:
        if n.kind in EXTERNAL_KINDS or n.id in owner:
            continue
        if n.kind == "delay":
            raise GraphError(f"uncovered delay node {n.id!r}; canonicalize first")
        if n.kind in ("mux", "counter"):
            raise GraphError(f"{n.kind} node {n.id!r} cannot appear in a foldable graph")
        leftovers.append(n.id)
    for nid in sorted(leftovers, key=lambda nid: ranks[nid]):
        if nid in {v.id for v in vertices}:
            raise GraphError(f"vertex id collision on {nid!r}")
        vertices.append(CoreVertex(nid, None, None, nid, 0))
        owner[nid] = nid

    in_core: set[tuple[str, int, str, int]] = set()
    for cls in config.classes:
        for inst in cls.instances:
            for pe in cls.pattern.edges:
                g_src = inst.map[pe.src]
                g_dst = inst.map[pe.dst]
                in_core.add((g_src, pe.src_port, g_dst, inst.graph_port(g_dst, pe.dst_port)))

    arcs = []
    for e in graph.edges:
        if e.src not in owner or e.dst not in owner:
            continue
        if (e.src, e.src_port, e.dst, e.dst_port) in in_core:
            continue
        arcs.append(
            CoreArc(owner[e.src], owner[e.dst], e.delay, e.src, e.src_port, e.dst, e.dst_port)
        )
    return CoreGraph(graph, config, tuple(vertices), tuple(arcs), owner)


@dataclass(frozen=True)
class Schedule:
    n: int
    slots: dict[str, int]

    def slot(self, vertex_id: str) -> int:
        return self.slots[vertex_id]


def _priorities(core: CoreGraph) -> dict[str, float]:
    # Critical path over zero-register arcs.  Vertices caught in a
    # zero-register cycle (legal when every member shares a slot) just
    # get their own weight; greedy groups them and schedules the group.
    succs: dict[str, list[str]] = {v.id: [] for v in core.vertices}
    indeg: dict[str, int] = {v.id: 0 for v in core.vertices}
    for a in core.arcs:
        if a.weight == 0 and a.src_vertex != a.dst_vertex:
            succs[a.src_vertex].append(a.dst_vertex)
            indeg[a.dst_vertex] += 1
    order: list[str] = [vid for vid, d in indeg.items() if d == 0]
    seen = list(order)
    head = 0
    while head < len(seen):
        vid = seen[head]
        head += 1
        for s in succs[vid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                seen.append(s)
    crit = {v.id: float(max(v.latency, 1)) for v in core.vertices}
    for vid in reversed(seen):
        base = max(core.vertex_map[vid].latency, 1)
        down = max((crit[s] for s in succs[vid]), default=0.0)
        crit[vid] = base + down
    return crit


def _sccs(ids: list[str], adj: dict[str, list[str]]) -> list[list[str]]:
    """Tarjan, iterative.  Components come back in a deterministic order
    for a deterministic input order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    onstack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    count = 0
    for root in ids:
        if root in index:
            continue
        index[root] = low[root] = count
        count += 1
        stack.append(root)
        onstack.add(root)
        work = [(root, iter(adj.get(root, ())))]
        while work:
            v, it = work[-1]
            descended = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = count
                    count += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    descended = True
                    break
                if w in onstack:
                    low[v] = min(low[v], index[w])
            if descended:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def _greedy(core: CoreGraph, n: int) -> Schedule | None:
    """List scheduling over groups.

    A zero-register cycle among vertices forces them all into one slot
    (every arc needs D = v - u = 0), so vertices are condensed into
    strongly connected components first and a whole component is placed
    at once.  Within a slot the loop re-scans so same-slot chains fill
    up before the slot advances.  Placements that would close a
    structural combinational loop through shared units are deferred to
    a later slot, where the extra register breaks the chain.
    """
    crit = _priorities(core)
    adj: dict[str, list[str]] = {v.id: [] for v in core.vertices}
    for a in core.arcs:
        if a.weight == 0 and a.src_vertex != a.dst_vertex:
            adj[a.src_vertex].append(a.dst_vertex)
    comps = _sccs([v.id for v in core.vertices], adj)
    group_of = {vid: gi for gi, comp in enumerate(comps) for vid in comp}
    members = [[core.vertex_map[vid] for vid in comp] for comp in comps]
    for group in members:
        used = [v.class_index for v in group if v.class_index is not None]
        if len(used) != len(set(used)):
            # two instances of one class locked into the same slot
            return None
    gpreds: dict[int, list[str]] = {gi: [] for gi in range(len(comps))}
    garcs: dict[int, list[CoreArc]] = {gi: [] for gi in range(len(comps))}
    for a in core.arcs:
        gs, gd = group_of[a.src_vertex], group_of[a.dst_vertex]
        if a.weight == 0 and gs != gd:
            gpreds[gd].append(a.src_vertex)
        garcs[gs].append(a)
        if gd != gs:
            garcs[gd].append(a)
    gcrit = [max(crit[vid] for vid in comp) for comp in comps]
    gname = [min(comp) for comp in comps]
    phys = _PhysGraph(core)

    slots: dict[str, int] = {}
    busy: dict[int, set[int]] = {ci: set() for ci in range(len(core.config.classes))}
    placed: set[int] = set()
    links: list[tuple[tuple[int, str], tuple[int, str]]] = []

    def ready(gi: int, s: int) -> bool:
        for p in gpreds[gi]:
            if p not in slots:
                return False
            if slots[p] + core.vertex_map[p].latency > s:
                return False
        return True

    def fits(gi: int, s: int) -> bool:
        for v in members[gi]:
            span = max(v.latency, 1)
            if s + span > n:
                return False
            if v.class_index is not None and any(
                s + k in busy[v.class_index] for k in range(span)
            ):
                return False
        return True

    def new_links(gi: int, s: int) -> list[tuple[tuple[int, str], tuple[int, str]]] | None:
        """Links this placement adds, or None when one of them would
        close a combinational loop through the shared units."""
        fresh = []
        for a in garcs[gi]:
            su = s if group_of[a.src_vertex] == gi else slots.get(a.src_vertex)
            sv = s if group_of[a.dst_vertex] == gi else slots.get(a.dst_vertex)
            if su is None or sv is None:
                continue
            p = core.vertex_map[a.src_vertex].latency
            if folding_delay(a.weight, p, su, sv, n) != 0:
                continue
            got = phys.link_of(a)
            if got is not None:
                fresh.append(got)
        if fresh and phys.cyclic_part(links + fresh):
            return None
        return fresh

    for s in range(n):
        while True:
            candidates = []
            for gi in range(len(comps)):
                if gi in placed or not ready(gi, s) or not fits(gi, s):
                    continue
                fresh = new_links(gi, s)
                if fresh is None:
                    continue
                candidates.append((gi, fresh))
            if not candidates:
                break
            pick, fresh = sorted(candidates, key=lambda c: (-gcrit[c[0]], gname[c[0]]))[0]
            placed.add(pick)
            links.extend(fresh)
            for v in members[pick]:
                slots[v.id] = s
                if v.class_index is not None:
                    for k in range(max(v.latency, 1)):
                        busy[v.class_index].add(s + k)
    if len(slots) != len(core.vertices):
        return None
    return Schedule(n, slots)


class _PhysGraph:
    """Combinational skeleton of the folded netlist a schedule implies.

    One node per (class, pattern position) plus one per leftover vertex;
    a zero-register arc between co-scheduled vertices links two of them.
    One physical unit serves every slot, so links created in different
    slots can close a loop through shared units even though each slot's
    own data path is fine; the folded netlist would then contain a
    structural combinational cycle.  Covered delay positions are
    register-backed on both sides (their taps leave a chain register,
    their inputs enter one), so paths never continue through them and
    they are not nodes here.
    """

    def __init__(self, core: CoreGraph):
        self.pid_by_gid: dict[str, tuple[int, str]] = {}
        for ci, cls in enumerate(core.config.classes):
            for inst in cls.instances:
                for pid, gid in inst.mapping:
                    self.pid_by_gid[gid] = (ci, pid)
        self.nodes: set[tuple[int, str]] = set()
        self.static: list[tuple[tuple[int, str], tuple[int, str]]] = []
        for ci, cls in enumerate(core.config.classes):
            kind_of = cls.pattern.kind_of
            for pn in cls.pattern.nodes:
                if pn.kind != "delay":
                    self.nodes.add((ci, pn.id))
            for pe in cls.pattern.edges:
                if pe.delay == 0 and kind_of[pe.src] != "delay" and kind_of[pe.dst] != "delay":
                    self.static.append(((ci, pe.src), (ci, pe.dst)))
        for v in core.vertices:
            if v.is_singleton:
                self.nodes.add((-1, v.node_id))

    def link_of(self, arc: CoreArc) -> tuple[tuple[int, str], tuple[int, str]] | None:
        src = self.pid_by_gid.get(arc.src_node, (-1, arc.src_node))
        dst = self.pid_by_gid.get(arc.dst_node, (-1, arc.dst_node))
        if src in self.nodes and dst in self.nodes:
            return (src, dst)
        return None

    def cyclic_part(self, links) -> list[tuple[int, str]]:
        adj: dict[tuple[int, str], list[tuple[int, str]]] = {}
        for a, b in self.static:
            adj.setdefault(a, []).append(b)
        for a, b in links:
            adj.setdefault(a, []).append(b)
        indeg = {x: 0 for x in self.nodes}
        for outs in adj.values():
            for b in outs:
                indeg[b] += 1
        queue = [x for x in self.nodes if indeg[x] == 0]
        done = 0
        while queue:
            x = queue.pop()
            done += 1
            for b in adj.get(x, ()):
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue.append(b)
        if done == len(self.nodes):
            return []
        return sorted(x for x in self.nodes if indeg[x] > 0)


def _structural_loop(core: CoreGraph, sched: Schedule) -> list[str]:
    """Physical nodes caught in a structural combinational loop under
    this schedule, empty when it is clean."""
    phys = _PhysGraph(core)
    links = []
    for a in core.arcs:
        if a.src_vertex not in sched.slots or a.dst_vertex not in sched.slots:
            continue
        u, vv = sched.slots[a.src_vertex], sched.slots[a.dst_vertex]
        p = core.vertex_map[a.src_vertex].latency
        if folding_delay(a.weight, p, u, vv, sched.n) != 0:
            continue
        got = phys.link_of(a)
        if got is not None:
            links.append(got)
    return [
        (x[1] if x[0] < 0 else f"c{x[0]}.{x[1]}") for x in phys.cyclic_part(links)
    ]


def _exhaustive(core: CoreGraph, n: int) -> Schedule | None:
    order = sorted(core.vertices, key=lambda v: v.id)
    arcs_touching: dict[str, list[CoreArc]] = {v.id: [] for v in order}
    for a in core.arcs:
        arcs_touching[a.src_vertex].append(a)
        if a.dst_vertex != a.src_vertex:
            arcs_touching[a.dst_vertex].append(a)

    slots: dict[str, int] = {}
    busy: dict[int, set[int]] = {ci: set() for ci in range(len(core.config.classes))}

    def consistent(vid: str) -> bool:
        for a in arcs_touching[vid]:
            if a.src_vertex in slots and a.dst_vertex in slots:
                u, v = slots[a.src_vertex], slots[a.dst_vertex]
                p = core.vertex_map[a.src_vertex].latency
                if folding_delay(a.weight, p, u, v, n) < 0:
                    return False
        return True

    def place(i: int) -> bool:
        if i == len(order):
            return not _structural_loop(core, Schedule(n, dict(slots)))
        v = order[i]
        span = max(v.latency, 1)
        for s in range(n - span + 1):
            if v.class_index is not None and any(s + k in busy[v.class_index] for k in range(span)):
                continue
            slots[v.id] = s
            if v.class_index is not None:
                for k in range(span):
                    busy[v.class_index].add(s + k)
            if consistent(v.id) and place(i + 1):
                return True
            del slots[v.id]
            if v.class_index is not None:
                for k in range(span):
                    busy[v.class_index].discard(s + k)
        return False

    if place(0):
        return Schedule(n, dict(slots))
    return None


EXHAUSTIVE_LIMIT = 12


def schedule_at(core: CoreGraph, n: int) -> Schedule | None:
    """Feasible schedule with exactly n slots, or None."""
    if n < core.min_slots():
        return None
    got = _greedy(core, n)
    if got is not None and verify_schedule(core, got):
        # greedy met the per-arc bounds but tripped a global constraint
        # (a structural loop); only the exhaustive search can dodge those
        got = None
    if got is None and len(core.vertices) <= EXHAUSTIVE_LIMIT:
        got = _exhaustive(core, n)
    if got is not None and verify_schedule(core, got):
        raise ScheduleError("internal: scheduler produced an invalid schedule")
    return got


def list_schedule(core: CoreGraph, n_hint: int | None = None) -> Schedule:
    """Schedule at the requested slot count, or the smallest workable one.

    Without a hint, tries N from the largest class size upward.  The cap
    is generous; a graph this machinery accepts always folds at some N
    at or below it.
    """
    if n_hint is not None:
        if n_hint < core.min_slots():
            raise ScheduleError(
                f"n={n_hint} is below the largest class size {core.min_slots()}"
            )
        got = schedule_at(core, n_hint)
        if got is None:
            raise ScheduleError(f"no feasible schedule with n={n_hint}")
        return got
    cap = max(core.min_slots(), sum(core.class_sizes) + len(core.vertices))
    for n in range(core.min_slots(), cap + 1):
        got = schedule_at(core, n)
        if got is not None:
            return got
    raise ScheduleError(f"no feasible schedule up to n={cap}")


def verify_schedule(core: CoreGraph, sched: Schedule) -> list[str]:
    """Every constraint, checked after the fact.  Empty list means valid."""
    problems: list[str] = []
    n = sched.n
    for v in core.vertices:
        if v.id not in sched.slots:
            problems.append(f"vertex {v.id} unscheduled")
            continue
        s = sched.slots[v.id]
        span = max(v.latency, 1)
        if not 0 <= s < n:
            problems.append(f"vertex {v.id} slot {s} outside [0, {n})")
        if s + span > n:
            problems.append(f"vertex {v.id} occupancy [{s}, {s + span}) spills past the frame")
    for ci in range(len(core.config.classes)):
        taken: dict[int, str] = {}
        for v in core.vertices:
            if v.class_index != ci or v.id not in sched.slots:
                continue
            for k in range(max(v.latency, 1)):
                cell = sched.slots[v.id] + k
                if cell in taken:
                    problems.append(
                        f"class {ci}: {v.id} and {taken[cell]} both occupy slot {cell}"
                    )
                taken[cell] = v.id
    for a in core.arcs:
        if a.src_vertex not in sched.slots or a.dst_vertex not in sched.slots:
            continue
        u, v = sched.slots[a.src_vertex], sched.slots[a.dst_vertex]
        p = core.vertex_map[a.src_vertex].latency
        d = folding_delay(a.weight, p, u, v, n)
        if d < 0:
            problems.append(
                f"arc {a.src_node}->{a.dst_node} needs {d} registers (w={a.weight}, u={u}, v={v})"
            )
    looped = _structural_loop(core, sched)
    if looped:
        problems.append(
            "same-slot chaining closes a combinational loop through "
            + ", ".join(looped[:8])
        )
    return problems
