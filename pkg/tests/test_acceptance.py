"""Acceptance suite.  One test per shipped guarantee: bit-exact folding
on every reference configuration, the headline multiplier counts, arc
feasibility, the exact area split, schedule minimality, matcher and
Pareto completeness against brute force, and the control census of
folded designs."""

import math
import random
import time

from _oracles import (
    brute_min_n,
    expected_port_specs,
    inst_key,
    oracle_keys,
    pareto_oracle,
    random_core,
    random_dag,
    rebuild_core,
)
from dfgfold.bench import BENCHMARKS, PRESETS, TEMPLATES, resolve_config
from dfgfold.cost import estimate_cost, fold_breakdown, folding_benefit, pareto_flags
from dfgfold.explore import explore
from dfgfold.folding import fold
from dfgfold.patterns import match_pattern
from dfgfold.scheduling import folding_delay, list_schedule, verify_schedule
from dfgfold.simulate import Stimuli, check_equivalence

PRESET_NAMES = sorted(PRESETS)


def test_every_configuration_stays_bit_exact(folded_presets, fmt):
    """Each reference configuration, plus a fold of the small loop the
    presets skip, reproduces the original outputs word for word on an
    impulse, a step, and a thousand random samples, and the whole sweep
    finishes inside a minute."""
    t0 = time.perf_counter()
    cases = [(name,) + folded_presets(name) for name in PRESET_NAMES]
    pi = BENCHMARKS["pi"]()
    cases.append(("pi", pi, fold(pi, resolve_config(pi, [("prod", 2)]))))
    covered = {graph.name for _, graph, _ in cases}
    assert covered == set(BENCHMARKS)
    for i, (name, graph, design) in enumerate(cases):
        stimuli = [
            Stimuli.impulse(graph, 64, fmt),
            Stimuli.step(graph, 64, fmt),
            Stimuli.random(graph, 1000, seed=1000 + i),
        ]
        for stim in stimuli:
            report = check_equivalence(
                graph,
                design.graph,
                n=design.n,
                latency_offset=design.latency_offset,
                stimuli=stim,
                fmt=fmt,
            )
            assert report.passed, (name, report.first_mismatch)
    assert time.perf_counter() - t0 < 60.0


def test_recursive_filter_folds_four_products_onto_one_multiplier(folded_presets):
    graph, design = folded_presets("iir-n04-p")
    assert estimate_cost(graph).mult_units == 4
    assert estimate_cost(design.graph).mult_units == 1


def test_tap_filter_fold_keeps_two_multipliers(folded_presets):
    graph, design = folded_presets("fir-n15-p")
    before = estimate_cost(graph).mult_units
    after = estimate_cost(design.graph).mult_units
    assert after == 2
    assert (before - after) / before >= 0.87


def test_every_scheduled_arc_meets_its_register_bound(folded_presets):
    """On every reference design, every arc of the rebuilt core gets a
    nonnegative register count under the shipped schedule."""
    for name in PRESET_NAMES:
        graph, design = folded_presets(name)
        _, core = rebuild_core(graph, design.config)
        sched = design.schedule
        assert verify_schedule(core, sched) == [], name
        for a in core.arcs:
            d = folding_delay(
                a.weight,
                core.vertex_map[a.src_vertex].latency,
                sched.slots[a.src_vertex],
                sched.slots[a.dst_vertex],
                sched.n,
            )
            assert d >= 0, (name, a.src_node, a.dst_node, d)


def test_folded_area_splits_exactly_and_benefit_readings_agree(folded_presets):
    """Folded LUT units equal core plus overhead plus remainder with no
    gap, and where the original decomposes into its covered copies the
    two benefit readings reach the same verdict with the same margin."""
    for name in PRESET_NAMES:
        graph, design = folded_presets(name)
        br = fold_breakdown(graph, design)
        assert br.identity_gap == 0.0, name
        assert br.s_folded == estimate_cost(design.graph).lut_units, name
        ben = folding_benefit(br)
        if ben.decomposable:
            assert ben.area_beneficial == ben.overhead_beneficial, name
            assert math.isclose(
                ben.margin, ben.budget - ben.overhead, rel_tol=0.0, abs_tol=1e-9
            ), name


def test_slot_counts_are_minimal_on_random_cores():
    for seed in range(100):
        core = random_core(seed)
        want = brute_min_n(core, len(core.vertices) + 2)
        assert want is not None, f"seed {seed}: no feasible slot count"
        sched = list_schedule(core)
        assert sched.n == want, f"seed {seed}: got n={sched.n}, brute force n={want}"
        assert verify_schedule(core, sched) == []


def test_matcher_is_complete_and_reference_covers_are_reachable():
    names = ["prod-add", "sub-prod", "dp", "sin-prod", "prod-add-add", "iir-half", "ssp"]
    for seed in range(100):
        pattern = TEMPLATES[names[seed % len(names)]]
        g = random_dag(seed)
        got = {inst_key(inst) for inst in match_pattern(g, pattern)}
        want = oracle_keys(g, pattern)
        assert got == want, f"seed {seed} pattern {pattern.name}: {got ^ want}"
    for bench, spec, size in (("fir16", "slice1", 14), ("tpid", "pid-core", 3)):
        config = resolve_config(BENCHMARKS[bench](), [(spec, size)], exact=True)
        cls = config.classes[0]
        assert cls.size == size
        seen: set[str] = set()
        for inst in cls.instances:
            assert not (inst.nodes & seen)
            seen |= inst.nodes


def test_pareto_marking_matches_quadratic_scan_and_orders_the_front():
    rng = random.Random(99)
    for _ in range(100):
        m = rng.randint(1, 1000)
        if rng.random() < 0.4:
            # lattice coordinates force plenty of ties and duplicates
            points = [(float(rng.randrange(12)), float(rng.randrange(12))) for _ in range(m)]
        else:
            points = [(rng.random(), rng.random()) for _ in range(m)]
        assert pareto_flags(points) == pareto_oracle(points)

    rows = explore("fir16", samples=40, seed=5)
    assert all(r.equivalent for r in rows)
    assert not next(r for r in rows if r.config == "original").pareto
    front = sorted(
        ((r.latency_proxy_ns, r.cost.lut_units) for r in rows if r.pareto)
    )
    assert front
    latencies = [lat for lat, _ in front]
    luts = [lut for _, lut in front]
    assert len(set(latencies)) == len(latencies)
    assert luts == sorted(luts, reverse=True) and len(set(luts)) == len(luts)


def test_folded_control_census(folded_presets):
    """Exactly one slot counter per design, one boundary mux per
    multi-source unit port and no others, and every register the pattern
    owned shows up N-fold inside the unit."""
    for name in PRESET_NAMES:
        graph, design = folded_presets(name)
        g = design.graph
        n = design.n

        counters = [nd for nd in g.nodes if nd.kind == "counter"]
        assert len(counters) == 1, name
        assert counters[0].params["modulus"] == n

        canon, core = rebuild_core(graph, design.config)
        specs = expected_port_specs(canon, core, design.config, design.schedule, n)
        want_muxes = sum(1 for lst in specs.values() if len(lst) > 1)
        assert len(design.provenance["boundary_muxes"]) == want_muxes, name

        heads: dict[tuple[int, str], str] = {}
        tails: dict[tuple[int, str], str] = {}
        delay_census: dict[int, int] = {}
        for nid, (ci, pid, j) in design.provenance["units"].items():
            if j is None or j == 0:
                heads[(ci, pid)] = nid
            if j is None or j == n - 1:
                tails[(ci, pid)] = nid
            if g.node_map[nid].kind == "delay":
                delay_census[ci] = delay_census.get(ci, 0) + 1
        for ci, cls in enumerate(design.config.classes):
            pattern_delays = sum(1 for pn in cls.pattern.nodes if pn.kind == "delay")
            assert delay_census.get(ci, 0) == n * pattern_delays, (name, ci)
            for pe in cls.pattern.edges:
                e = g.in_edge(heads[(ci, pe.dst)], pe.dst_port)
                assert e.src == tails[(ci, pe.src)], (name, ci, pe)
                assert e.src_port == pe.src_port
                assert e.delay == n * pe.delay, (name, ci, pe)
        for chain in design.provenance["chains"]:
            assert len(chain) == n
