"""Structure of folded designs: control unit, mux placement, register
interleaving, and alignment register counts recomputed from scratch."""

import pytest

from _oracles import expected_port_specs, rebuild_core
from dfgfold.bench import BENCHMARKS, PRESETS, TEMPLATES, resolve_config
from dfgfold.folding import FoldError, fold
from dfgfold.graph import GraphBuilder
from dfgfold.patterns import CorePattern, FoldClass, FoldingConfig, PatternNode, match_pattern
from dfgfold.simulate import Stimuli, check_equivalence

PRESET_NAMES = sorted(PRESETS)


def unit_heads(design):
    """Folded node carrying each shared-unit port, from the unit table."""
    heads = {}
    for nid, (ci, pid, j) in design.provenance["units"].items():
        if j is None or j == 0:
            heads[(ci, pid)] = nid
    return heads


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_exactly_one_counter(name, folded_presets):
    _, design = folded_presets(name)
    counters = [n for n in design.graph.nodes if n.kind == "counter"]
    assert len(counters) == 1
    assert counters[0].params["modulus"] == design.n


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_mux_shapes(name, folded_presets):
    _, design = folded_presets(name)
    g = design.graph
    counter = next(n.id for n in g.nodes if n.kind == "counter")
    for node in g.nodes:
        if node.kind != "mux":
            continue
        ports = node.params["ports"]
        assert 2 <= ports <= max(2, design.n)
        sel = node.params["select"]
        assert len(sel) == design.n
        assert all(0 <= v < ports for v in sel)
        drivers = {e.dst_port: e.src for e in g.in_edges(node.id)}
        assert sorted(drivers) == list(range(ports + 1))
        assert drivers[ports] == counter
        assert design.select_table[node.id] == list(sel)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_interleaved_register_chains(name, folded_presets):
    _, design = folded_presets(name)
    g = design.graph
    for ci, cls in enumerate(design.config.classes):
        pattern_delays = sum(1 for pn in cls.pattern.nodes if pn.kind == "delay")
        in_unit = [
            nid
            for nid, (uci, _, j) in design.provenance["units"].items()
            if uci == ci and g.node_map[nid].kind == "delay"
        ]
        assert len(in_unit) == design.n * pattern_delays
    for chain in design.provenance["chains"]:
        assert len(chain) == design.n
        for a, c in zip(chain, chain[1:]):
            assert any(
                e.src == a and e.dst == c and e.delay == 0 for e in g.in_edges(c)
            )


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_delay_node_census(name, folded_presets):
    _, design = folded_presets(name)
    total = sum(1 for n in design.graph.nodes if n.kind == "delay")
    chains = design.n * sum(
        sum(1 for pn in cls.pattern.nodes if pn.kind == "delay")
        for cls in design.config.classes
    )
    holds = len(design.provenance["holds"])
    latches = len(design.provenance["latches"])
    assert total == chains + holds + latches


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_boundary_muxes_and_alignment_registers(name, folded_presets):
    graph, design = folded_presets(name)
    canon, core = rebuild_core(graph, design.config)
    specs = expected_port_specs(canon, core, design.config, design.schedule, design.n)
    g = design.graph
    heads = unit_heads(design)

    want_muxes = sum(1 for lst in specs.values() if len(lst) > 1)
    assert len(design.provenance["boundary_muxes"]) == want_muxes

    boundary = set(design.provenance["boundary_muxes"])
    for (ci, pid, pport), lst in specs.items():
        e = g.in_edge(heads[(ci, pid)], pport)
        if len(lst) == 1:
            # single source wires straight in with its alignment registers
            assert e.src not in boundary
            assert e.delay == lst[0][1]
        else:
            mux = g.node_map[e.src]
            assert mux.kind == "mux"
            assert mux.params["ports"] == len(lst)
            assert e.delay == 0
            delays = sorted(d.delay for d in g.in_edges(mux.id) if d.dst_port < len(lst))
            assert delays == sorted(d for _, d in lst)
            assert all(d >= 0 for _, d in lst)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_hold_latch_structure(name, folded_presets):
    graph, design = folded_presets(name)
    g = design.graph
    assert set(design.provenance["holds"]) == set(graph.inputs)
    assert set(design.provenance["latches"]) == set(graph.outputs)
    for x, (hm, hr) in design.provenance["holds"].items():
        assert design.select_table[hm] == [1] + [0] * (design.n - 1)
        assert g.in_edge(hm, 1).src == x
        assert g.in_edge(hr, 0).src == hm
        assert g.in_edge(hm, 0).src == hr
    for y, (lm, lr) in design.provenance["latches"].items():
        sel = design.select_table[lm]
        assert sel.count(1) == 1 and sel.count(0) == design.n - 1
        assert g.in_edge(y, 0).src == lr


def test_single_instance_classes_need_no_mux(folded_presets, fmt):
    g = BENCHMARKS["iir"]()
    config = resolve_config(g, [("prod", 1), ("add", 1)])
    design = fold(g, config)
    assert design.provenance["boundary_muxes"] == []
    report = check_equivalence(
        g,
        design.graph,
        n=design.n,
        latency_offset=design.latency_offset,
        stimuli=Stimuli.random(g, 64, seed=3),
        fmt=fmt,
    )
    assert report.passed


def test_fold_at_one_slot_keeps_behavior(fmt):
    g = BENCHMARKS["pi"]()
    config = resolve_config(g, [("prod", 1)])
    design = fold(g, config, n=1)
    assert design.n == 1
    assert design.latency_offset == 0
    assert design.provenance["holds"] == {}
    assert [n.kind for n in design.graph.nodes].count("mux") == 0
    report = check_equivalence(
        g,
        design.graph,
        n=1,
        latency_offset=0,
        stimuli=Stimuli.random(g, 128, seed=11),
        fmt=fmt,
    )
    assert report.passed


def test_latency_offset_matches_frame(folded_presets):
    for name in ("iir-n02-pa", "fir-n14-dp"):
        _, design = folded_presets(name)
        assert design.latency_offset == design.n


def test_fold_rejects_existing_control():
    b = GraphBuilder("ctl")
    b.node("x", "input")
    b.node("c", "counter", modulus=4)
    b.node("a", "add")
    b.node("y", "output")
    b.edge("x", ("a", 0))
    b.edge("c", ("a", 1))
    b.edge("a", "y")
    g = b.build()
    with pytest.raises(FoldError):
        fold(g, FoldingConfig(()))


def test_fold_rejects_pipelined_pattern():
    g = BENCHMARKS["iir"]()
    pat = CorePattern("deep", (PatternNode("op", "mult"),), latency=1)
    insts = match_pattern(g, pat)
    config = FoldingConfig((FoldClass(pat, tuple(insts[:2])),))
    with pytest.raises(FoldError, match="pipelined"):
        fold(g, config)


def test_fold_rejects_broken_config():
    g = BENCHMARKS["iir"]()
    donor = BENCHMARKS["fir16"]()
    config = resolve_config(donor, [("prod-add", 2)])
    with pytest.raises(FoldError, match="config rejected"):
        fold(g, config)
