"""The folding transformation.

Given a schedule, each class of instances collapses onto one physical
unit built from the class pattern with every in-core register widened
into N registers (a chain for a delay node, an N-fold edge delay for a
registered in-core edge).  With that interleaving the whole unit is, at
slot u of any frame, a cycle-accurate snapshot of instance u, so every
in-core signal can be tapped externally at the instance's slot.

Boundary wiring follows the alignment rule from scheduling: an arc into
slot v needs D = N*w - P + v - u registers behind the consumer's mux
data input.  Ports whose sources compact to a single (tap, D) key get a
plain registered wire instead of a mux.  One mod-N counter drives every
select.  Primary inputs are latched once per frame (transparent in slot
0), outputs are captured at the producing slot and republished one
frame later, so folded outputs are read with a uniform latency offset
of N cycles.  At N == 1 all of that degenerates to rewiring, so holds
and latches are elided and the offset is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import (
    EXTERNAL_KINDS,
    DataflowGraph,
    Edge,
    GraphBuilder,
    GraphError,
    canonicalize,
    node_arity,
    require_valid,
)
from .patterns import CorePattern, FoldingConfig, check_config
from .scheduling import (
    CoreGraph,
    Schedule,
    build_core_graph,
    folding_delay,
    list_schedule,
    verify_schedule,
)


class FoldError(ValueError):
    pass


@dataclass
class UnitLayout:
    """Physical layout of one shared unit."""

    head: dict[str, str]
    tail: dict[str, str]
    chains: dict[str, list[str]]
    internal: list[tuple[str, int, str, int]]
    widths: dict[str, int]


def interleave_registers(
    b: GraphBuilder,
    pattern: CorePattern,
    n: int,
    class_index: int,
    widths: dict[str, int],
    fresh,
) -> UnitLayout:
    """Instantiate a pattern as a unit with every register made N-deep."""
    head: dict[str, str] = {}
    tail: dict[str, str] = {}
    chains: dict[str, list[str]] = {}
    internal: list[tuple[str, int, str, int]] = []
    for pid in pattern.node_order:
        kind = pattern.kind_of[pid]
        width = widths[pid]
        if kind == "delay":
            chain = [fresh(f"u{class_index}.{pid}.i{j}") for j in range(n)]
            for nid in chain:
                b.node(nid, "delay", width)
            for a, c in zip(chain, chain[1:]):
                b.edge((a, 0), (c, 0))
                internal.append((a, 0, c, 0))
            chains[pid] = chain
            head[pid] = chain[0]
            tail[pid] = chain[-1]
        else:
            nid = fresh(f"u{class_index}.{pid}")
            b.node(nid, kind, width)
            head[pid] = tail[pid] = nid
    for pe in pattern.edges:
        src = tail[pe.src]
        dst = head[pe.dst]
        b.edge((src, pe.src_port), (dst, pe.dst_port), delay=pe.delay * n)
        internal.append((src, pe.src_port, dst, pe.dst_port))
    return UnitLayout(head, tail, chains, internal, dict(widths))


def build_controller(b: GraphBuilder, n: int, fresh) -> str:
    """The single control unit: a mod-N slot counter."""
    ctr = fresh("ctr")
    b.node(ctr, "counter", 32, modulus=n)
    return ctr


@dataclass
class FoldedDesign:
    graph: DataflowGraph
    n: int
    latency_offset: int
    schedule: Schedule
    config: FoldingConfig
    select_table: dict[str, list[int]]
    provenance: dict

    def meta_dict(self) -> dict:
        return {
            "n": self.n,
            "latency_offset": self.latency_offset,
            "config": self.config.notation(),
            "select_table": {k: list(v) for k, v in self.select_table.items()},
            "provenance": self.provenance,
        }


def fold(
    graph: DataflowGraph,
    config: FoldingConfig,
    *,
    schedule: Schedule | None = None,
    n: int | None = None,
    name: str | None = None,
) -> FoldedDesign:
    require_valid(graph)
    for node in graph.nodes:
        if node.kind in ("mux", "counter"):
            raise FoldError(f"graph already carries control structure ({node.kind} {node.id!r})")
    problems = check_config(graph, config)
    if problems:
        raise FoldError("config rejected: " + "; ".join(problems[:5]))
    for cls in config.classes:
        if cls.pattern.latency:
            raise FoldError(f"pattern {cls.pattern.name!r} is pipelined; only latency-0 cores fold")

    covered = config.covered_nodes()
    protected = {nid for nid in covered if graph.node_map[nid].kind == "delay"}
    canon = canonicalize(graph, protected)
    core = build_core_graph(canon, config)
    if schedule is None:
        sched = list_schedule(core, n_hint=n)
    else:
        sched = schedule
        bad = verify_schedule(core, sched)
        if bad:
            raise FoldError("schedule rejected: " + "; ".join(bad[:5]))
    N = sched.n

    planned: set[str] = set()
    for node in canon.nodes:
        if node.kind in EXTERNAL_KINDS or node.id not in covered:
            planned.add(node.id)

    def fresh(base: str) -> str:
        cand = base
        k = 2
        while cand in planned:
            cand = f"{base}_{k}"
            k += 1
        planned.add(cand)
        return cand

    b = GraphBuilder(name or f"{graph.name}_fold{N}")
    for nid in canon.inputs:
        nd = canon.node(nid)
        b.node(nid, "input", nd.width, **nd.params)
    for nd in canon.nodes:
        if nd.kind == "const-input":
            b.node(nd.id, nd.kind, nd.width, **nd.params)
    ctr = build_controller(b, N, fresh)

    inst_vertex: dict[tuple[int, int], str] = {}
    counts: dict[int, int] = {}
    for v in core.vertices:
        if v.class_index is not None:
            k = counts.get(v.class_index, 0)
            inst_vertex[(v.class_index, k)] = v.id
            counts[v.class_index] = k + 1

    units: list[UnitLayout] = []
    internal_edges: list[tuple[str, int, str, int]] = []
    for ci, cls in enumerate(config.classes):
        widths: dict[str, int] = {}
        for pid in cls.pattern.node_order:
            spread = {graph.node_map[inst.map[pid]].width for inst in cls.instances}
            if len(spread) != 1:
                raise FoldError(f"class {ci}: instances disagree on width of {pid!r}")
            widths[pid] = spread.pop()
        layout = interleave_registers(b, cls.pattern, N, ci, widths, fresh)
        units.append(layout)
        internal_edges.extend(layout.internal)

    for v in core.vertices:
        if v.is_singleton:
            nd = canon.node(v.node_id)
            b.node(nd.id, nd.kind, nd.width, **nd.params)

    pid_of: dict[str, tuple[int, str]] = {}
    for ci, cls in enumerate(config.classes):
        for inst in cls.instances:
            for pid, gid in inst.mapping:
                pid_of[gid] = (ci, pid)

    def tap_of(gid: str) -> tuple[str, int]:
        if gid in pid_of:
            ci, pid = pid_of[gid]
            return (units[ci].tail[pid], 0)
        return (gid, 0)

    select_table: dict[str, list[int]] = {}
    hold_parts: dict[str, list[str]] = {}
    hold_tap: dict[str, tuple[str, int]] = {}
    if N > 1:
        for x in canon.inputs:
            if not canon.out_edges(x):
                continue
            nd = canon.node(x)
            sel = [1] + [0] * (N - 1)
            hm = fresh(f"hold.{x}")
            hr = fresh(f"hold.{x}.r")
            b.node(hm, "mux", nd.width, ports=2, select=sel)
            b.node(hr, "delay", nd.width)
            b.edge((x, 0), (hm, 1))
            b.edge((hm, 0), (hr, 0))
            b.edge((hr, 0), (hm, 0))
            b.edge((ctr, 0), (hm, 2))
            select_table[hm] = sel
            hold_parts[x] = [hm, hr]
            hold_tap[x] = (hm, 0)
    for x in canon.inputs:
        hold_tap.setdefault(x, (x, 0))

    def source_spec(e: Edge, v_slot: int) -> tuple[tuple[str, int], int]:
        src_kind = canon.node(e.src).kind
        if src_kind == "input":
            return hold_tap[e.src], N * e.delay
        if src_kind == "const-input":
            return (e.src, 0), N * e.delay
        owner = core.owner[e.src]
        u = sched.slots[owner]
        p = core.vertex_map[owner].latency
        d = folding_delay(e.delay, p, u, v_slot, N)
        if d < 0:
            raise FoldError(f"alignment broke on {e.src}->{e.dst}: D={d}")
        return tap_of(e.src), d

    boundary_muxes: list[str] = []

    def wire_port(
        dst: tuple[str, int],
        slot_map: dict[int, tuple[tuple[str, int], int]],
        width: int,
    ) -> None:
        keys: list[tuple[tuple[str, int], int]] = []
        for s in sorted(slot_map):
            if slot_map[s] not in keys:
                keys.append(slot_map[s])
        if len(keys) == 1:
            tap, d = keys[0]
            b.edge(tap, dst, delay=d)
            return
        sel = [keys.index(slot_map[s]) if s in slot_map else 0 for s in range(N)]
        mx = fresh(f"mx.{dst[0]}.p{dst[1]}")
        b.node(mx, "mux", width, ports=len(keys), select=sel)
        for i, (tap, d) in enumerate(keys):
            b.edge(tap, (mx, i), delay=d)
        b.edge((ctr, 0), (mx, len(keys)))
        b.edge((mx, 0), dst)
        select_table[mx] = sel
        boundary_muxes.append(mx)

    for ci, cls in enumerate(config.classes):
        for pid, pport in cls.pattern.boundary_inputs:
            slot_map: dict[int, tuple[tuple[str, int], int]] = {}
            for k, inst in enumerate(cls.instances):
                v_slot = sched.slots[inst_vertex[(ci, k)]]
                gid = inst.map[pid]
                gport = inst.graph_port(gid, pport)
                e = canon.in_edge(gid, gport)
                if e is None:
                    raise FoldError(f"missing driver for {gid}:{gport}")
                slot_map[v_slot] = source_spec(e, v_slot)
            wire_port((units[ci].head[pid], pport), slot_map, units[ci].widths[pid])

    for v in core.vertices:
        if not v.is_singleton:
            continue
        nd = canon.node(v.node_id)
        s = sched.slots[v.id]
        for port in range(node_arity(nd)[0]):
            e = canon.in_edge(nd.id, port)
            if e is None:
                raise FoldError(f"missing driver for {nd.id}:{port}")
            wire_port((nd.id, port), {s: source_spec(e, s)}, nd.width)

    latch_parts: dict[str, list[str]] = {}
    output_capture: dict[str, int] = {}
    for y in canon.outputs:
        nd = canon.node(y)
        e = canon.in_edge(y, 0)
        if e is None:
            raise FoldError(f"output {y!r} is undriven")
        held = canon.node(e.src).kind in ("input", "const-input")
        if N == 1:
            tap, d = source_spec(e, 0)
            b.node(y, "output", nd.width)
            b.edge(tap, (y, 0), delay=d)
            continue
        cap = (N - 1) if held else sched.slots[core.owner[e.src]]
        tap, d = source_spec(e, cap)
        sel = [1 if s == cap else 0 for s in range(N)]
        lm = fresh(f"lat.{y}")
        lr = fresh(f"lat.{y}.r")
        b.node(lm, "mux", nd.width, ports=2, select=sel)
        b.node(lr, "delay", nd.width)
        b.edge(tap, (lm, 1), delay=d)
        b.edge((lr, 0), (lm, 0))
        b.edge((lm, 0), (lr, 0))
        b.edge((ctr, 0), (lm, 2))
        b.node(y, "output", nd.width)
        b.edge((lr, 0), (y, 0))
        select_table[lm] = sel
        latch_parts[y] = [lm, lr]
        output_capture[y] = cap

    try:
        folded_graph = b.build(check=True)
    except GraphError as exc:
        raise FoldError(f"fold produced an invalid graph: {exc}") from exc

    unit_nodes: dict[str, list] = {}
    chains: list[list[str]] = []
    for ci, layout in enumerate(units):
        pattern = config.classes[ci].pattern
        for pid in pattern.node_order:
            if pid in layout.chains:
                chains.append(layout.chains[pid])
                for j, nid in enumerate(layout.chains[pid]):
                    unit_nodes[nid] = [ci, pid, j]
            else:
                unit_nodes[layout.head[pid]] = [ci, pid, None]

    provenance = {
        "classes": [
            {
                "pattern": cls.pattern.name,
                "notation": cls.notation(),
                "slots": [
                    sched.slots[inst_vertex[(ci, k)]] for k in range(len(cls.instances))
                ],
                "instances": [inst.describe() for inst in cls.instances],
            }
            for ci, cls in enumerate(config.classes)
        ],
        "schedule": dict(sched.slots),
        "units": unit_nodes,
        "chains": chains,
        "remain": [v.node_id for v in core.vertices if v.is_singleton],
        "holds": hold_parts,
        "latches": latch_parts,
        "counter": ctr,
        "boundary_muxes": boundary_muxes,
        "internal_edges": [list(t) for t in internal_edges],
        "output_capture": output_capture,
    }
    return FoldedDesign(
        graph=folded_graph,
        n=N,
        latency_offset=N if N > 1 else 0,
        schedule=sched,
        config=config,
        select_table=select_table,
        provenance=provenance,
    )
