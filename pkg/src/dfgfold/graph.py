"""Dataflow-graph intermediate representation.

A design is a directed multigraph of typed operator nodes.  Edges carry a
register count (``delay``), so a plain wire is delay 0 and a ``delay``
node is sugar for one register that can also be written as an edge
attribute.  The JSON layout::

    {
      "name": "fir4",
      "nodes": [{"id": "m0", "kind": "mult", "width": 32, "params": {}}, ...],
      "edges": [{"from": ["x", 0], "to": ["m0", 0], "delay": 0}, ...],
      "inputs": ["x"],
      "outputs": ["y"]
    }

Node ids are strings and unique.  Ports are dense integer indices; every
input port must be driven by exactly one edge.  ``inputs``/``outputs``
are ordered lists naming the external port nodes, and that order is the
only labelling the rest of the toolchain relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

# Operator arities as (inputs, outputs).  Mux arity depends on params and
# is handled in node_arity below: m data ports plus the select on the
# last port.
KIND_ARITY: dict[str, tuple[int, int]] = {
    "add": (2, 1),
    "sub": (2, 1),
    "mult": (2, 1),
    "negate": (1, 1),
    "sine-lut": (1, 1),
    "delay": (1, 1),
    "counter": (0, 1),
    "input": (0, 1),
    "const-input": (0, 1),
    "output": (1, 0),
}

# add and mult accept their operands in either order; the matcher is
# allowed to swap ports on these and nothing downstream may assume a
# fixed orientation.
COMMUTATIVE_KINDS = frozenset({"add", "mult"})

# Outputs of these hold state: a zero-delay edge leaving them is not a
# combinational dependency.
SEQUENTIAL_KINDS = frozenset({"delay", "counter"})

# External ports.  Never operators, never inside a folding core.
EXTERNAL_KINDS = frozenset({"input", "const-input", "output"})

OPERATOR_KINDS = frozenset(KIND_ARITY) - EXTERNAL_KINDS


class GraphError(ValueError):
    """Raised for malformed graphs or impossible graph operations."""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    width: int = 32
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    src: str
    src_port: int
    dst: str
    dst_port: int
    delay: int = 0

    @property
    def key(self) -> tuple[str, int, str, int]:
        return (self.src, self.src_port, self.dst, self.dst_port)


def node_arity(node: Node) -> tuple[int, int]:
    if node.kind == "mux":
        ports = node.params.get("ports", 2)
        return (ports + 1, 1)
    try:
        return KIND_ARITY[node.kind]
    except KeyError:
        raise GraphError(f"unknown node kind {node.kind!r} on {node.id!r}") from None


@dataclass(eq=False)
class DataflowGraph:
    name: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _in_edges(self) -> dict[str, list[Edge]]:
        table: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            table[e.dst].append(e)
        for lst in table.values():
            lst.sort(key=lambda e: e.dst_port)
        return table

    @cached_property
    def _out_edges(self) -> dict[str, list[Edge]]:
        table: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            table[e.src].append(e)
        for lst in table.values():
            lst.sort(key=lambda e: (e.src_port, e.dst, e.dst_port))
        return table

    def node(self, node_id: str) -> Node:
        try:
            return self.node_map[node_id]
        except KeyError:
            raise GraphError(f"no node {node_id!r} in graph {self.name!r}") from None

    def in_edges(self, node_id: str) -> list[Edge]:
        return self._in_edges[node_id]

    def out_edges(self, node_id: str) -> list[Edge]:
        return self._out_edges[node_id]

    def in_edge(self, node_id: str, port: int) -> Edge | None:
        for e in self._in_edges[node_id]:
            if e.dst_port == port:
                return e
        return None

    def kind_census(self) -> dict[str, int]:
        census: dict[str, int] = {}
        for n in self.nodes:
            census[n.kind] = census.get(n.kind, 0) + 1
        return census

    def operator_ids(self) -> list[str]:
        return [n.id for n in self.nodes if n.kind not in EXTERNAL_KINDS]

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: str = ""

    def __str__(self) -> str:
        loc = f" [{self.where}]" if self.where else ""
        return f"{self.code}{loc}: {self.message}"


def validate(graph: DataflowGraph) -> list[Violation]:
    """Structural checks.  Returns an empty list for a well-formed graph."""
    out: list[Violation] = []
    seen: set[str] = set()
    for n in graph.nodes:
        if n.id in seen:
            out.append(Violation("dup-node", f"duplicate node id {n.id!r}", n.id))
        seen.add(n.id)
        if n.kind != "mux" and n.kind not in KIND_ARITY:
            out.append(Violation("bad-kind", f"unknown kind {n.kind!r}", n.id))
            continue
        if n.width < 1:
            out.append(Violation("bad-width", f"width must be positive, got {n.width}", n.id))
        if n.kind == "mux":
            ports = n.params.get("ports")
            if not isinstance(ports, int) or ports < 1:
                out.append(Violation("bad-mux", "mux needs integer params.ports >= 1", n.id))
                continue
            select = n.params.get("select")
            if select is not None:
                if not isinstance(select, list) or not all(
                    isinstance(s, int) and 0 <= s < ports for s in select
                ):
                    out.append(
                        Violation("bad-mux", "params.select must list data-port indices", n.id)
                    )
        if n.kind == "counter":
            modulus = n.params.get("modulus")
            if not isinstance(modulus, int) or modulus < 1:
                out.append(Violation("bad-counter", "counter needs integer params.modulus >= 1", n.id))

    ids = {n.id for n in graph.nodes}
    driven: dict[tuple[str, int], int] = {}
    for e in graph.edges:
        where = f"{e.src}:{e.src_port}->{e.dst}:{e.dst_port}"
        if e.src not in ids or e.dst not in ids:
            out.append(Violation("bad-endpoint", "edge endpoint is not a node", where))
            continue
        if e.delay < 0:
            out.append(Violation("bad-delay", f"negative edge delay {e.delay}", where))
        src = graph.node_map[e.src]
        dst = graph.node_map[e.dst]
        if src.kind in KIND_ARITY or src.kind == "mux":
            if not 0 <= e.src_port < node_arity(src)[1]:
                out.append(Violation("bad-port", f"source port {e.src_port} out of range", where))
        if dst.kind in KIND_ARITY or dst.kind == "mux":
            if not 0 <= e.dst_port < node_arity(dst)[0]:
                out.append(Violation("bad-port", f"dest port {e.dst_port} out of range", where))
                continue
        driven[(e.dst, e.dst_port)] = driven.get((e.dst, e.dst_port), 0) + 1

    for n in graph.nodes:
        if n.kind not in KIND_ARITY and n.kind != "mux":
            continue
        n_in = node_arity(n)[0]
        for port in range(n_in):
            count = driven.get((n.id, port), 0)
            if count == 0:
                out.append(Violation("undriven", f"input port {port} undriven", n.id))
            elif count > 1:
                out.append(Violation("multi-driven", f"input port {port} driven {count} times", n.id))

    for label, listed, kind in (("inputs", graph.inputs, "input"), ("outputs", graph.outputs, "output")):
        names = set()
        for nid in listed:
            if nid in names:
                out.append(Violation("dup-io", f"{nid!r} listed twice under {label}", nid))
            names.add(nid)
            if nid not in ids:
                out.append(Violation("bad-io", f"{label} entry {nid!r} is not a node", nid))
            elif graph.node_map[nid].kind != kind:
                out.append(
                    Violation("bad-io", f"{label} entry {nid!r} has kind {graph.node_map[nid].kind!r}", nid)
                )
        declared = {n.id for n in graph.nodes if n.kind == kind}
        for nid in sorted(declared - names):
            out.append(Violation("unlisted-io", f"{kind} node {nid!r} missing from {label}", nid))

    if not any(v.code in ("bad-endpoint", "bad-kind", "dup-node", "bad-port") for v in out):
        try:
            topo_order(graph)
        except GraphError as exc:
            out.append(Violation("comb-cycle", str(exc)))
    return out


def require_valid(graph: DataflowGraph) -> DataflowGraph:
    problems = validate(graph)
    if problems:
        summary = "; ".join(str(v) for v in problems[:8])
        more = f" (+{len(problems) - 8} more)" if len(problems) > 8 else ""
        raise GraphError(f"invalid graph {graph.name!r}: {summary}{more}")
    return graph


def topo_order(graph: DataflowGraph) -> list[str]:
    """Evaluation order for one clock cycle.

    Only zero-delay edges out of non-sequential nodes order evaluation;
    registered edges and state outputs (delay, counter) read values from
    the previous cycle.  Deterministic: ready nodes are taken in id order.
    Raises GraphError on a combinational cycle.
    """
    import heapq

    indeg: dict[str, int] = {n.id: 0 for n in graph.nodes}
    succs: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for e in graph.edges:
        if e.delay == 0 and graph.node_map[e.src].kind not in SEQUENTIAL_KINDS:
            indeg[e.dst] += 1
            succs[e.src].append(e.dst)
    ready = [nid for nid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for s in succs[nid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(ready, s)
    if len(order) != len(graph.nodes):
        stuck = sorted(nid for nid, d in indeg.items() if d > 0)
        raise GraphError(f"combinational cycle through {', '.join(stuck[:6])}")
    return order


def canonicalize(graph: DataflowGraph, protected: frozenset[str] | set[str] = frozenset()) -> DataflowGraph:
    """Rewrite delay nodes into edge delay attributes.

    Every ``delay`` node not named in ``protected`` is removed and its
    register folded into the delays of the spliced-through edges.  A
    cycle made only of delay nodes has no driver to splice to and raises.
    """
    nodes = {n.id: n for n in graph.nodes}
    edges: list[Edge] = list(graph.edges)
    pending = [n.id for n in graph.nodes if n.kind == "delay" and n.id not in protected]
    for victim in pending:
        in_e = None
        outs = []
        rest = []
        for e in edges:
            if e.dst == victim:
                in_e = e
            elif e.src == victim:
                outs.append(e)
            else:
                rest.append(e)
        if in_e is None:
            raise GraphError(f"delay node {victim!r} has no driver")
        if in_e.src == victim:
            raise GraphError(f"cycle of delay nodes through {victim!r}")
        for e in outs:
            rest.append(
                Edge(in_e.src, in_e.src_port, e.dst, e.dst_port, in_e.delay + 1 + e.delay)
            )
        edges = rest
        del nodes[victim]
    return DataflowGraph(
        name=graph.name,
        nodes=tuple(nodes.values()),
        edges=tuple(edges),
        inputs=graph.inputs,
        outputs=graph.outputs,
    )


def canonical_ranks(graph: DataflowGraph) -> dict[str, int]:
    """Deterministic node ranks, insensitive to id spelling.

    Colours start from (kind, position in the inputs list, position in
    the outputs list) and are refined with the neighbourhood structure
    (ports and edge delays) until the partition stops splitting.  Any
    remaining ties are genuine automorphisms; ids break them so the
    result is still a total order.
    """
    in_pos = {nid: i for i, nid in enumerate(graph.inputs)}
    out_pos = {nid: i for i, nid in enumerate(graph.outputs)}

    def recolour(signature: dict[str, tuple]) -> dict[str, int]:
        # Colour numbers come from the sorted signature list, so they
        # depend on structure only, never on node iteration order.
        palette = {sig: i for i, sig in enumerate(sorted(set(signature.values())))}
        return {nid: palette[sig] for nid, sig in signature.items()}

    colour = recolour(
        {n.id: (n.kind, in_pos.get(n.id, -1), out_pos.get(n.id, -1)) for n in graph.nodes}
    )
    for _ in range(len(graph.nodes)):
        sigs: dict[str, tuple] = {}
        for n in graph.nodes:
            ins = sorted(
                (e.dst_port, e.delay, colour[e.src], e.src_port) for e in graph.in_edges(n.id)
            )
            outs = sorted(
                (e.src_port, e.delay, colour[e.dst], e.dst_port) for e in graph.out_edges(n.id)
            )
            sigs[n.id] = (colour[n.id], tuple(ins), tuple(outs))
        fresh = recolour(sigs)
        stable = len(set(fresh.values())) == len(set(colour.values()))
        colour = fresh
        if stable:
            break

    ordering = sorted(colour, key=lambda nid: (colour[nid], nid))
    return {nid: rank for rank, nid in enumerate(ordering)}


class GraphBuilder:
    """Incremental construction helper used by generators and transforms."""

    def __init__(self, name: str):
        self.name = name
        self._nodes: dict[str, Node] = {}
        self._edges: list[Edge] = []
        self._inputs: list[str] = []
        self._outputs: list[str] = []

    def node(self, node_id: str, kind: str, width: int = 32, **params) -> str:
        if node_id in self._nodes:
            raise GraphError(f"node {node_id!r} added twice")
        self._nodes[node_id] = Node(node_id, kind, width, dict(params))
        if kind == "input":
            self._inputs.append(node_id)
        elif kind == "output":
            self._outputs.append(node_id)
        return node_id

    def edge(self, src, dst, delay: int = 0) -> None:
        s, sp = src if isinstance(src, tuple) else (src, 0)
        d, dp = dst if isinstance(dst, tuple) else (dst, 0)
        self._edges.append(Edge(s, sp, d, dp, delay))

    def build(self, check: bool = True) -> DataflowGraph:
        g = DataflowGraph(
            name=self.name,
            nodes=tuple(self._nodes.values()),
            edges=tuple(self._edges),
            inputs=tuple(self._inputs),
            outputs=tuple(self._outputs),
        )
        return require_valid(g) if check else g


def to_json_dict(graph: DataflowGraph) -> dict:
    return {
        "name": graph.name,
        "nodes": [
            {"id": n.id, "kind": n.kind, "width": n.width, "params": dict(n.params)}
            for n in sorted(graph.nodes, key=lambda n: n.id)
        ],
        "edges": [
            {"from": [e.src, e.src_port], "to": [e.dst, e.dst_port], "delay": e.delay}
            for e in sorted(graph.edges, key=lambda e: e.key)
        ],
        "inputs": list(graph.inputs),
        "outputs": list(graph.outputs),
    }


def serialize(graph: DataflowGraph) -> str:
    return json.dumps(to_json_dict(graph), indent=2) + "\n"


def parse_graph(doc: str | dict) -> DataflowGraph:
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")
    try:
        nodes = tuple(
            Node(
                id=str(n["id"]),
                kind=str(n["kind"]),
                width=int(n.get("width", 32)),
                params=dict(n.get("params", {})),
            )
            for n in doc["nodes"]
        )
        edges = tuple(
            Edge(
                src=str(e["from"][0]),
                src_port=int(e["from"][1]),
                dst=str(e["to"][0]),
                dst_port=int(e["to"][1]),
                delay=int(e.get("delay", 0)),
            )
            for e in doc["edges"]
        )
        graph = DataflowGraph(
            name=str(doc.get("name", "design")),
            nodes=nodes,
            edges=edges,
            inputs=tuple(str(x) for x in doc.get("inputs", ())),
            outputs=tuple(str(x) for x in doc.get("outputs", ())),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph document: {exc}") from exc
    return require_valid(graph)


def load_graph(path: str | Path) -> DataflowGraph:
    return parse_graph(Path(path).read_text())


def save_graph(graph: DataflowGraph, path: str | Path) -> None:
    Path(path).write_text(serialize(graph))
