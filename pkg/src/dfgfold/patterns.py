"""Folding-core patterns and subcircuit matching.

A core pattern is a small connected fragment of operator nodes.  An
instance of a pattern in a design is an induced embedding: the mapped
nodes must carry exactly the pattern's internal edges (ports and edge
delays included) and no other edges among themselves.  For add and mult
the two operands may be taken in either order, so each instance records
the port orientation it chose.

Instances of one pattern may overlap each other; a folding class needs
disjoint instances and select_cover picks those greedily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

from .graph import (
    COMMUTATIVE_KINDS,
    EXTERNAL_KINDS,
    Edge,
    DataflowGraph,
    GraphError,
    canonical_ranks,
    node_arity,
)

# Kinds a folding core may contain.  External ports are wiring, mux and
# counter are reserved for the control structure a fold introduces.
CORE_KINDS = frozenset({"add", "sub", "mult", "negate", "sine-lut", "delay"})

KIND_ALIASES = {"mult": "prod", "sine-lut": "sin", "const-input": "const"}


class PatternError(ValueError):
    pass


def kind_alias(kind: str) -> str:
    return KIND_ALIASES.get(kind, kind)


@dataclass(frozen=True)
class PatternNode:
    id: str
    kind: str


@dataclass(frozen=True)
class CorePattern:
    """Connected fragment shared by all instances of a folding class."""

    name: str
    nodes: tuple[PatternNode, ...]
    edges: tuple[Edge, ...] = ()

    # Units here produce every result within the execution slot; delay
    # nodes inside a core are frame-aligned state, not pipeline stages.
    latency: int = 0

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise PatternError(f"pattern {self.name!r} repeats a node id")
        if not ids:
            raise PatternError(f"pattern {self.name!r} is empty")
        for n in self.nodes:
            if n.kind not in CORE_KINDS:
                raise PatternError(f"pattern {self.name!r}: kind {n.kind!r} cannot be folded")
        known = set(ids)
        seen_ports: set[tuple[str, int]] = set()
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise PatternError(f"pattern {self.name!r}: edge endpoint outside pattern")
            if e.delay < 0:
                raise PatternError(f"pattern {self.name!r}: negative edge delay")
            if (e.dst, e.dst_port) in seen_ports:
                raise PatternError(f"pattern {self.name!r}: port driven twice")
            seen_ports.add((e.dst, e.dst_port))
        if len(ids) > 1:
            adj: dict[str, set[str]] = {i: set() for i in ids}
            for e in self.edges:
                adj[e.src].add(e.dst)
                adj[e.dst].add(e.src)
            seen = {ids[0]}
            stack = [ids[0]]
            while stack:
                for nxt in adj[stack.pop()]:
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            if seen != known:
                raise PatternError(f"pattern {self.name!r} is not connected")

    @cached_property
    def kind_of(self) -> dict[str, str]:
        return {n.id: n.kind for n in self.nodes}

    @cached_property
    def node_order(self) -> tuple[str, ...]:
        return tuple(sorted(n.id for n in self.nodes))

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def internal_in_edges(self) -> dict[str, list[Edge]]:
        table: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            table[e.dst].append(e)
        return table

    @cached_property
    def boundary_inputs(self) -> tuple[tuple[str, int], ...]:
        """Input ports not driven inside the pattern, in (id, port) order."""
        from .graph import KIND_ARITY

        driven = {(e.dst, e.dst_port) for e in self.edges}
        out = []
        for n in sorted(self.nodes, key=lambda n: n.id):
            n_in = KIND_ARITY[n.kind][0]
            for port in range(n_in):
                if (n.id, port) not in driven:
                    out.append((n.id, port))
        return tuple(out)

    def multiset_label(self) -> str:
        census: dict[str, int] = {}
        for n in self.nodes:
            k = kind_alias(n.kind)
            census[k] = census.get(k, 0) + 1
        parts = []
        for k in sorted(census):
            c = census[k]
            parts.append(f"{c}{k}" if c >= 2 else k)
        return "{" + ",".join(parts) + "}"


@dataclass(frozen=True)
class CoreInstance:
    """One embedding of a pattern: pattern id -> graph id, plus the port
    orientation chosen for each mapped node (pattern port -> graph port)."""

    pattern: str
    mapping: tuple[tuple[str, str], ...]
    portmap: tuple[tuple[str, tuple[int, ...]], ...]

    @cached_property
    def map(self) -> dict[str, str]:
        return dict(self.mapping)

    @cached_property
    def ports(self) -> dict[str, tuple[int, ...]]:
        return dict(self.portmap)

    @cached_property
    def nodes(self) -> frozenset[str]:
        return frozenset(gid for _, gid in self.mapping)

    def graph_port(self, graph_id: str, pattern_port: int) -> int:
        return self.ports[graph_id][pattern_port]

    def describe(self) -> str:
        body = ", ".join(f"{p}->{g}" for p, g in self.mapping)
        return f"{self.pattern}({body})"


def _make_instance(pattern: CorePattern, node_map: dict[str, str], orient: dict[str, tuple[int, ...]]) -> CoreInstance:
    mapping = tuple((pid, node_map[pid]) for pid in pattern.node_order)
    portmap = tuple((node_map[pid], orient[node_map[pid]]) for pid in pattern.node_order)
    return CoreInstance(pattern.name, mapping, portmap)


def _search_order(pattern: CorePattern) -> list[str]:
    # Anchor on the first node of the rarest kind, then grow along
    # pattern connectivity so every later node touches a matched one.
    kinds: dict[str, int] = {}
    for n in pattern.nodes:
        kinds[n.kind] = kinds.get(n.kind, 0) + 1
    anchor = min(pattern.nodes, key=lambda n: (kinds[n.kind], n.id)).id
    adj: dict[str, set[str]] = {n.id: set() for n in pattern.nodes}
    for e in pattern.edges:
        adj[e.src].add(e.dst)
        adj[e.dst].add(e.src)
    order = [anchor]
    placed = {anchor}
    while len(order) < pattern.size:
        frontier = sorted(
            pid for pid in adj if pid not in placed and adj[pid] & placed
        )
        nxt = frontier[0] if frontier else sorted(set(adj) - placed)[0]
        order.append(nxt)
        placed.add(nxt)
    return order


def match_pattern(graph: DataflowGraph, pattern: CorePattern) -> list[CoreInstance]:
    """All induced embeddings of ``pattern`` in ``graph``.

    Deterministic: results are ordered by the canonical ranks of the
    mapped nodes, taken in pattern-id order, so relabelling the graph
    does not reorder or renumber instances.
    """
    ranks = canonical_ranks(graph)
    by_kind: dict[str, list[str]] = {}
    for n in graph.nodes:
        if n.kind in CORE_KINDS:
            by_kind.setdefault(n.kind, []).append(n.id)
    for lst in by_kind.values():
        lst.sort(key=lambda nid: ranks[nid])

    order = _search_order(pattern)
    results: list[CoreInstance] = []
    seen: set[tuple] = set()

    def commutative(gid: str) -> bool:
        return graph.node_map[gid].kind in COMMUTATIVE_KINDS

    def feasible(node_map: dict[str, str], orient: dict[str, tuple[int, ...]], pid: str, gid: str) -> tuple | None:
        """Try to extend the embedding with pid -> gid.  Returns updated
        orientation entries to commit, or None if inconsistent.

        Commutative orientations are fixed greedily on first use, which
        is exhaustive enough here: with injective mappings and two-input
        operators, an alternative orientation only exists when both
        operands come from the same source, where the twin embedding is
        functionally identical.
        """
        committed: dict[str, tuple[int, ...]] = {}

        # Every pattern edge with both ends placed must exist in the graph
        # with the same delay, and port orientation must be consistent.
        trial = dict(node_map)
        trial[pid] = gid
        for e in pattern.edges:
            if e.src not in trial or e.dst not in trial:
                continue
            g_src, g_dst = trial[e.src], trial[e.dst]
            found = False
            for ge in graph.out_edges(g_src):
                if ge.src_port != e.src_port or ge.dst != g_dst or ge.delay != e.delay:
                    continue
                current = committed.get(g_dst, orient.get(g_dst))
                if current is not None:
                    if current[e.dst_port] == ge.dst_port:
                        found = True
                        break
                    continue
                if not commutative(g_dst):
                    if ge.dst_port == e.dst_port:
                        found = True
                        break
                    continue
                want = ge.dst_port
                committed[g_dst] = (want, 1 - want) if e.dst_port == 0 else (1 - want, want)
                found = True
                break
            if not found:
                return None
        return tuple(sorted(committed.items()))

    def induced_ok(node_map: dict[str, str], orient: dict[str, tuple[int, ...]]) -> dict[str, tuple[int, ...]] | None:
        # Finish orientations (identity where never forced), then demand
        # a perfect edge bijection among mapped nodes.
        full = dict(orient)
        for pid, gid in node_map.items():
            if gid not in full:
                n_in = node_arity(graph.node_map[gid])[0]
                full[gid] = tuple(range(n_in))
        mapped = set(node_map.values())
        expected: set[tuple[str, int, str, int, int]] = set()
        for e in pattern.edges:
            g_src, g_dst = node_map[e.src], node_map[e.dst]
            expected.add((g_src, e.src_port, g_dst, full[g_dst][e.dst_port], e.delay))
        actual = {
            (ge.src, ge.src_port, ge.dst, ge.dst_port, ge.delay)
            for gid in mapped
            for ge in graph.out_edges(gid)
            if ge.dst in mapped
        }
        return full if expected == actual else None

    def extend(depth: int, node_map: dict[str, str], orient: dict[str, tuple[int, ...]]) -> None:
        if depth == len(order):
            full = induced_ok(node_map, orient)
            if full is None:
                return
            inst = _make_instance(pattern, node_map, full)
            key = (inst.mapping, inst.portmap)
            if key not in seen:
                seen.add(key)
                results.append(inst)
            return
        pid = order[depth]
        want_kind = pattern.kind_of[pid]
        used = set(node_map.values())
        for gid in by_kind.get(want_kind, ()):
            if gid in used:
                continue
            verdict = feasible(node_map, orient, pid, gid)
            if verdict is None:
                continue
            node_map[pid] = gid
            committed = dict(orient)
            committed.update(dict(verdict))
            extend(depth + 1, node_map, committed)
            del node_map[pid]

    extend(0, {}, {})
    results.sort(key=lambda inst: tuple(ranks[inst.map[pid]] for pid in pattern.node_order))
    return results


@dataclass(frozen=True)
class FoldClass:
    pattern: CorePattern
    instances: tuple[CoreInstance, ...]

    def __post_init__(self) -> None:
        if not self.instances:
            raise PatternError(f"class over {self.pattern.name!r} has no instances")

    @property
    def size(self) -> int:
        return len(self.instances)

    def notation(self) -> str:
        return f"{self.size}{self.pattern.multiset_label()}"


@dataclass(frozen=True)
class FoldingConfig:
    """What gets folded: classes of disjoint instances, one shared unit each."""

    classes: tuple[FoldClass, ...]

    @property
    def max_class_size(self) -> int:
        return max((c.size for c in self.classes), default=0)

    def covered_nodes(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.classes:
            for inst in c.instances:
                out |= inst.nodes
        return frozenset(out)

    def notation(self) -> str:
        return "+".join(c.notation() for c in self.classes) if self.classes else "-"


def check_config(graph: DataflowGraph, config: FoldingConfig) -> list[str]:
    """Sanity problems with a config against a graph, empty when clean."""
    problems: list[str] = []
    used: dict[str, str] = {}
    for ci, cls in enumerate(config.classes):
        for inst in cls.instances:
            if inst.pattern != cls.pattern.name:
                problems.append(f"class {ci}: instance built from pattern {inst.pattern!r}")
            for pid, gid in inst.mapping:
                if gid not in graph.node_map:
                    problems.append(f"class {ci}: node {gid!r} not in graph")
                    continue
                want = cls.pattern.kind_of.get(pid)
                if graph.node_map[gid].kind != want:
                    problems.append(f"class {ci}: {gid!r} is not a {want}")
                if gid in used and used[gid] != inst.describe():
                    problems.append(f"node {gid!r} claimed by two instances")
                used[gid] = inst.describe()
        found = {
            (inst.mapping, inst.portmap) for inst in match_pattern(graph, cls.pattern)
        }
        for inst in cls.instances:
            if (inst.mapping, inst.portmap) not in found:
                problems.append(f"class {ci}: {inst.describe()} is not a valid embedding")
    return problems


def select_cover(
    candidate_lists: list[tuple[CorePattern, list[CoreInstance]]],
    targets: list[tuple[str, int]],
    exact: bool = False,
) -> FoldingConfig:
    """Pick disjoint instances to build the requested classes.

    Greedy: targets are served largest pattern first, instances taken in
    their canonical order, skipping any that overlap what is already
    taken.  With ``exact`` a shortfall is an error, otherwise the class
    keeps whatever it got (and is dropped when that is nothing).
    """
    by_name = {p.name: (p, insts) for p, insts in candidate_lists}
    order = sorted(
        range(len(targets)),
        key=lambda i: (-by_name[targets[i][0]][0].size if targets[i][0] in by_name else 0, i),
    )
    taken: set[str] = set()
    picked: dict[int, FoldClass] = {}
    for i in order:
        name, count = targets[i]
        if name not in by_name:
            raise PatternError(f"no candidates for pattern {name!r}")
        pattern, candidates = by_name[name]
        chosen: list[CoreInstance] = []
        for inst in candidates:
            if len(chosen) == count:
                break
            if inst.nodes & taken:
                continue
            chosen.append(inst)
            taken |= inst.nodes
        if len(chosen) < count and exact:
            raise PatternError(
                f"wanted {count} disjoint instances of {name!r}, found {len(chosen)}"
            )
        if chosen:
            picked[i] = FoldClass(pattern, tuple(chosen))
    return FoldingConfig(tuple(picked[i] for i in sorted(picked)))


def parse_pattern(doc: str | dict) -> CorePattern:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        nodes = tuple(PatternNode(str(n["id"]), str(n["kind"])) for n in doc["nodes"])
        edges = tuple(
            Edge(
                src=str(e["from"][0]),
                src_port=int(e["from"][1]),
                dst=str(e["to"][0]),
                dst_port=int(e["to"][1]),
                delay=int(e.get("delay", 0)),
            )
            for e in doc.get("edges", ())
        )
        return CorePattern(str(doc.get("name", "pattern")), nodes, edges)
    except (KeyError, IndexError, TypeError) as exc:
        raise PatternError(f"malformed pattern document: {exc}") from exc


def single_op_pattern(kind: str, name: str | None = None) -> CorePattern:
    return CorePattern(name or kind_alias(kind), (PatternNode("op", kind),))
