"""Area and timing proxies, and the cost accounting of a fold.

Area is a two-part vector: dedicated multiplier units, and everything
else in LUT units (operators, mux data inputs, one LUT per register
bit).  For single-number comparisons the scalar view prices a
multiplier at a fixed LUT equivalent.  Timing is a proxy: the longest
combinational arrival anywhere in the graph under per-kind unit delays,
with registered edges and sequential outputs cutting the path.

fold_breakdown splits a folded design into the classic three buckets,

    folded == sum(core) + overhead + remain

exactly, in LUT units, with the overhead built constructively from the
parts a fold inserts (control counter, holds, latches, boundary muxes,
register interleaving, and the net change in alignment registers).
Multiplier savings are deliberately outside this identity: they show up
in the mult_units column, the way dedicated DSP blocks are tallied next
to fabric area rather than inside it.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .folding import FoldedDesign
from .graph import (
    EXTERNAL_KINDS,
    SEQUENTIAL_KINDS,
    DataflowGraph,
    topo_order,
)


@dataclass(frozen=True)
class WeightTable:
    """LUT-unit prices.  ``mult`` is only used by the scalar view; the
    resource vector keeps multipliers as their own unit count."""

    add: float = 32.0
    sub: float = 32.0
    negate: float = 32.0
    sine_lut: float = 256.0
    counter: float = 8.0
    mux_input: float = 16.0
    reg_bit: float = 1.0
    mult: float = 192.0

    @classmethod
    def from_json(cls, doc: str | dict) -> "WeightTable":
        if isinstance(doc, str):
            doc = json.loads(doc)
        known = {f.name for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in doc.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ValueError(f"unknown weight {key!r}")
            kw[name] = float(value)
        return cls(**kw)

    def op_lut(self, kind: str) -> float:
        if kind in ("add",):
            return self.add
        if kind == "sub":
            return self.sub
        if kind == "negate":
            return self.negate
        if kind == "sine-lut":
            return self.sine_lut
        if kind == "counter":
            return self.counter
        return 0.0

    def op_scalar(self, kind: str) -> float:
        return self.mult if kind == "mult" else self.op_lut(kind)


@dataclass(frozen=True)
class DelayTable:
    """Per-kind combinational delays in ns.  Sequential and IO kinds
    start paths at zero."""

    add: float = 2.5
    sub: float = 2.5
    negate: float = 2.5
    mult: float = 6.0
    sine_lut: float = 3.0
    mux: float = 1.0

    @classmethod
    def from_json(cls, doc: str | dict) -> "DelayTable":
        if isinstance(doc, str):
            doc = json.loads(doc)
        known = {f.name for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in doc.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ValueError(f"unknown delay {key!r}")
            kw[name] = float(value)
        return cls(**kw)

    def comb_ns(self, kind: str) -> float:
        if kind in ("add",):
            return self.add
        if kind == "sub":
            return self.sub
        if kind == "negate":
            return self.negate
        if kind == "mult":
            return self.mult
        if kind == "sine-lut":
            return self.sine_lut
        if kind == "mux":
            return self.mux
        return 0.0


@dataclass(frozen=True)
class ResourceCost:
    mult_units: int
    lut_units: float
    reg_bits: int
    mux_inputs: int
    tmin_proxy_ns: float

    def scalar(self, weights: WeightTable) -> float:
        return self.lut_units + weights.mult * self.mult_units


def _edge_reg_bits(graph: DataflowGraph) -> int:
    return sum(e.delay * graph.node_map[e.src].width for e in graph.edges)


def estimate_cost(
    graph: DataflowGraph,
    weights: WeightTable | None = None,
    delays: DelayTable | None = None,
) -> ResourceCost:
    w = weights or WeightTable()
    d = delays or DelayTable()

    mults = 0
    lut = 0.0
    reg_bits = 0
    mux_inputs = 0
    for node in graph.nodes:
        if node.kind == "mult":
            mults += 1
        elif node.kind == "delay":
            reg_bits += node.width
        elif node.kind == "mux":
            mux_inputs += int(node.params["ports"])
        else:
            lut += w.op_lut(node.kind)
    reg_bits += _edge_reg_bits(graph)
    lut += reg_bits * w.reg_bit + mux_inputs * w.mux_input

    # Longest register-to-register (or IO) combinational path.  Edges
    # with delay and sequential or primary sources start paths at zero;
    # sequential sinks and outputs end them for free, which comb_ns
    # already encodes as a zero contribution.
    arrival: dict[str, float] = {}
    tmin = 0.0
    for nid in topo_order(graph):
        node = graph.node_map[nid]
        start = 0.0
        for e in graph.in_edges(nid):
            if e.delay > 0:
                continue
            src = graph.node_map[e.src]
            if src.kind in SEQUENTIAL_KINDS or src.kind in EXTERNAL_KINDS:
                continue
            start = max(start, arrival[e.src])
        arrival[nid] = start + d.comb_ns(node.kind)
        tmin = max(tmin, arrival[nid])
    return ResourceCost(mults, lut, reg_bits, mux_inputs, tmin)


@dataclass(frozen=True)
class CostBreakdown:
    """LUT-unit split of a folded design against its original."""

    n: int
    s_original: float
    s_folded: float
    s_core: tuple[float, ...]
    s_overhead: float
    s_remain: float
    overhead_parts: dict[str, float]
    benefit_budget: float
    class_sizes: tuple[int, ...]
    simple_form: bool

    @property
    def s_core_total(self) -> float:
        return sum(self.s_core)

    @property
    def beneficial(self) -> bool:
        return self.s_overhead < self.benefit_budget

    @property
    def identity_gap(self) -> float:
        return self.s_folded - (self.s_core_total + self.s_overhead + self.s_remain)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "s_original": self.s_original,
            "s_folded": self.s_folded,
            "s_core": list(self.s_core),
            "s_core_total": self.s_core_total,
            "s_overhead": self.s_overhead,
            "s_remain": self.s_remain,
            "overhead_parts": dict(self.overhead_parts),
            "benefit_budget": self.benefit_budget,
            "class_sizes": list(self.class_sizes),
            "beneficial": self.beneficial,
            "simple_form": self.simple_form,
            "identity_gap": self.identity_gap,
        }


def fold_breakdown(
    original: DataflowGraph,
    design: FoldedDesign,
    weights: WeightTable | None = None,
) -> CostBreakdown:
    w = weights or WeightTable()
    folded = design.graph
    n = design.n
    config = design.config

    s_core: list[float] = []
    core_reg_bits: list[int] = []
    for cls in config.classes:
        first = cls.instances[0]
        ops = 0.0
        bits = 0
        for pn in cls.pattern.nodes:
            width = original.node_map[first.map[pn.id]].width
            if pn.kind == "delay":
                bits += width
            else:
                ops += w.op_lut(pn.kind)
        for pe in cls.pattern.edges:
            bits += pe.delay * original.node_map[first.map[pe.src]].width
        s_core.append(ops + bits * w.reg_bit)
        core_reg_bits.append(bits)

    covered = config.covered_nodes()
    covered_edges: set[tuple[str, int, str, int]] = set()
    for cls in config.classes:
        for inst in cls.instances:
            for pe in cls.pattern.edges:
                g_dst = inst.map[pe.dst]
                covered_edges.add(
                    (inst.map[pe.src], pe.src_port, g_dst, inst.graph_port(g_dst, pe.dst_port))
                )

    s_remain = 0.0
    original_outside_bits = 0
    for node in original.nodes:
        if node.id in covered or node.kind in EXTERNAL_KINDS:
            continue
        if node.kind == "delay":
            original_outside_bits += node.width
        else:
            s_remain += w.op_lut(node.kind)
    for e in original.edges:
        if (e.src, e.src_port, e.dst, e.dst_port) in covered_edges:
            continue
        original_outside_bits += e.delay * original.node_map[e.src].width
    s_remain += original_outside_bits * w.reg_bit

    prov = design.provenance
    internal = {tuple(t) for t in prov["internal_edges"]}
    folded_outside_bits = 0
    for e in folded.edges:
        if (e.src, e.src_port, e.dst, e.dst_port) in internal:
            continue
        folded_outside_bits += e.delay * folded.node_map[e.src].width

    def mux_cost(nid: str) -> float:
        return int(folded.node_map[nid].params["ports"]) * w.mux_input

    def reg_cost(nid: str) -> float:
        return folded.node_map[nid].width * w.reg_bit

    parts = {
        "control": w.counter,
        "holds": sum(mux_cost(hm) + reg_cost(hr) for hm, hr in prov["holds"].values()),
        "latches": sum(mux_cost(lm) + reg_cost(lr) for lm, lr in prov["latches"].values()),
        "boundary_muxes": sum(mux_cost(mx) for mx in prov["boundary_muxes"]),
        "interleave": (n - 1) * sum(core_reg_bits) * w.reg_bit,
        "alignment": (folded_outside_bits - original_outside_bits) * w.reg_bit,
    }
    s_overhead = sum(parts.values())

    sizes = [cls.size for cls in config.classes]
    budget = sum((sz - 1) * sc for sz, sc in zip(sizes, s_core))
    return CostBreakdown(
        n=n,
        s_original=estimate_cost(original, w).lut_units,
        s_folded=estimate_cost(folded, w).lut_units,
        s_core=tuple(s_core),
        s_overhead=s_overhead,
        s_remain=s_remain,
        overhead_parts=parts,
        benefit_budget=budget,
        class_sizes=tuple(sizes),
        simple_form=all(sz == n for sz in sizes),
    )


@dataclass(frozen=True)
class FoldingBenefit:
    """Both readings of the benefit condition on one breakdown.

    ``area_beneficial`` compares folded against original LUT units
    directly; ``overhead_beneficial`` compares the inserted overhead
    against the area the removed duplicate cores used to occupy.  The
    two agree exactly whenever the original decomposes as size-many
    copies of each core plus the remainder (``decomposable``); partial
    covers can break that precondition, never the agreement under it.
    """

    area_beneficial: bool
    overhead_beneficial: bool
    margin: float
    overhead: float
    budget: float
    decomposable: bool


def folding_benefit(breakdown: CostBreakdown) -> FoldingBenefit:
    recomposed = (
        sum(sz * sc for sz, sc in zip(breakdown.class_sizes, breakdown.s_core))
        + breakdown.s_remain
    )
    scale = max(1.0, abs(breakdown.s_original))
    decomposable = abs(recomposed - breakdown.s_original) <= 1e-9 * scale
    return FoldingBenefit(
        area_beneficial=breakdown.s_folded < breakdown.s_original,
        overhead_beneficial=breakdown.s_overhead < breakdown.benefit_budget,
        margin=breakdown.s_original - breakdown.s_folded,
        overhead=breakdown.s_overhead,
        budget=breakdown.benefit_budget,
        decomposable=decomposable,
    )


def pareto_flags(points: list[tuple[float, float]]) -> list[bool]:
    """Non-dominated flags for minimization on both axes.  Exact
    duplicates keep only their first occurrence on the front."""
    flags: list[bool] = []
    for i, (a1, a2) in enumerate(points):
        keep = True
        for j, (b1, b2) in enumerate(points):
            if b1 <= a1 and b2 <= a2 and (b1 < a1 or b2 < a2):
                keep = False
                break
            if j < i and b1 == a1 and b2 == a2:
                keep = False
                break
        flags.append(keep)
    return flags
