"""Simulator tests: hand-rolled recurrence references built from the
word-level primitives, control semantics, and error handling."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dfgfold.bench import BENCHMARKS
from dfgfold.fxp import fx_add, fx_mult, fx_sub
from dfgfold.graph import GraphBuilder, parse_graph, to_json_dict
from dfgfold.simulate import SimulationError, Simulator, Stimuli, check_equivalence, simulate


def const(graph, nid: str) -> int:
    return int(graph.node_map[nid].params["value"])


def random_words(seed: int, samples: int, columns: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(-(1 << 31), 1 << 31, size=(samples, columns), dtype=np.int64)


def test_pi_matches_recurrence(fmt):
    g = BENCHMARKS["pi"]()
    kp, ki = const(g, "kp"), const(g, "ki")
    data = random_words(5, 300, 1)
    trace = simulate(g, Stimuli(("e",), data))
    acc = 0
    for t in range(300):
        e = int(data[t, 0])
        ai = fx_add(fx_mult(e, ki, fmt), acc)
        want = fx_add(fx_mult(e, kp, fmt), ai)
        assert trace.column("u")[t] == want
        acc = ai


def test_iir_matches_recurrence(fmt):
    g = BENCHMARKS["iir"]()
    ka1, ka2 = const(g, "ka1"), const(g, "ka2")
    kb1, kb2 = const(g, "kb1"), const(g, "kb2")
    data = random_words(6, 300, 1)
    trace = simulate(g, Stimuli(("x",), data))
    d1 = d2 = 0
    for t in range(300):
        x = int(data[t, 0])
        wsum = fx_add(x, fx_add(fx_mult(d1, ka1, fmt), fx_mult(d2, ka2, fmt)))
        y = fx_add(wsum, fx_add(fx_mult(d1, kb1, fmt), fx_mult(d2, kb2, fmt)))
        assert trace.column("y")[t] == y
        d1, d2 = wsum, d1


def test_tpid_matches_recurrence(fmt):
    g = BENCHMARKS["tpid"]()
    data = random_words(7, 200, 6)
    names = tuple(g.inputs)
    trace = simulate(g, Stimuli(names, data))
    for j in (1, 2, 3):
        kp, ki, kd = const(g, f"kp{j}"), const(g, f"ki{j}"), const(g, f"kd{j}")
        sp_col = names.index(f"sp{j}")
        fb_col = names.index(f"fb{j}")
        integ = prev_e = 0
        for t in range(200):
            e = fx_sub(int(data[t, sp_col]), int(data[t, fb_col]))
            ai = fx_add(fx_mult(e, ki, fmt), integ)
            sd = fx_sub(e, prev_e)
            u = fx_add(fx_mult(sd, kd, fmt), fx_add(fx_mult(e, kp, fmt), ai))
            assert trace.column(f"u{j}")[t] == u
            integ, prev_e = ai, e


def test_fir_impulse_replays_coefficients(fmt):
    g = BENCHMARKS["fir16"]()
    trace = simulate(g, Stimuli.impulse(g, 24, fmt))
    coeffs = [const(g, f"c{i}") for i in range(16)]
    assert list(trace.column("y")[:16]) == coeffs
    assert list(trace.column("y")[16:]) == [0] * 8


def test_fir_random_matches_convolution(fmt):
    g = BENCHMARKS["fir16"]()
    coeffs = [const(g, f"c{i}") for i in range(16)]
    data = random_words(8, 120, 1)
    trace = simulate(g, Stimuli(("x",), data))
    for t in range(120):
        acc = 0
        for i, c in enumerate(coeffs):
            x = int(data[t - i, 0]) if t - i >= 0 else 0
            acc = fx_add(acc, fx_mult(x, c, fmt))
        assert trace.column("y")[t] == acc


def control_graph(select, ports, modulus, values):
    b = GraphBuilder("ctl")
    b.node("ctr", "counter", modulus=modulus)
    for i, v in enumerate(values):
        b.node(f"k{i}", "const-input", value=v)
    params = {"ports": ports}
    if select is not None:
        params["select"] = select
    b.node("m", "mux", **params)
    for i in range(ports):
        b.edge(f"k{i}", ("m", i))
    b.edge("ctr", ("m", ports))
    b.node("y", "output")
    b.edge("m", "y")
    return b.build()


def test_mux_select_table_is_a_lookup():
    # The counter value indexes the table; the table names the data port.
    g = control_graph([1, 0, 0], ports=2, modulus=3, values=[100, 200])
    trace = simulate(g, Stimuli((), np.zeros((6, 0))), cycles=6)
    assert list(trace.column("y")) == [200, 100, 100, 200, 100, 100]


def test_mux_without_table_uses_raw_select():
    g = control_graph(None, ports=3, modulus=3, values=[100, 200, 300])
    trace = simulate(g, Stimuli((), np.zeros((6, 0))), cycles=6)
    assert list(trace.column("y")) == [100, 200, 300, 100, 200, 300]


def test_mux_select_out_of_range_aborts():
    g = control_graph(None, ports=2, modulus=3, values=[100, 200])
    with pytest.raises(SimulationError) as exc:
        simulate(g, Stimuli((), np.zeros((6, 0))), cycles=6)
    assert exc.value.cycle == 2
    assert exc.value.node == "m"


def test_counter_wraps_and_delay_starts_at_zero():
    b = GraphBuilder("seq")
    b.node("ctr", "counter", modulus=4)
    b.node("d", "delay")
    b.node("y", "output")
    b.node("z", "output")
    b.edge("ctr", "d")
    b.edge("d", "y")
    b.edge("ctr", "z")
    g = b.build()
    trace = simulate(g, Stimuli((), np.zeros((9, 0))), cycles=9)
    assert list(trace.column("z")) == [0, 1, 2, 3, 0, 1, 2, 3, 0]
    assert list(trace.column("y")) == [0, 0, 1, 2, 3, 0, 1, 2, 3]


def test_registered_edge_is_a_ring_buffer():
    b = GraphBuilder("ring")
    b.node("x", "input")
    b.node("n", "negate")
    b.node("y", "output")
    b.edge("x", ("n", 0), delay=3)
    b.edge("n", "y")
    g = b.build()
    data = np.arange(1, 8, dtype=np.int64).reshape(-1, 1)
    trace = simulate(g, Stimuli(("x",), data))
    assert list(trace.column("y")) == [0, 0, 0, -1, -2, -3, -4]


def test_stimuli_expand_holds_each_sample():
    s = Stimuli(("a",), np.array([[1], [2]], dtype=np.int64))
    e = s.expand(3, extra=2)
    assert list(e.data[:, 0]) == [1, 1, 1, 2, 2, 2, 0, 0]


def test_stimuli_shape_and_column_order():
    g = BENCHMARKS["tpid"]()
    data = random_words(9, 10, 6)
    shuffled = tuple(reversed(g.inputs))
    trace_a = simulate(g, Stimuli(tuple(g.inputs), data))
    trace_b = simulate(g, Stimuli(shuffled, data[:, ::-1]))
    assert np.array_equal(trace_a.data, trace_b.data)
    with pytest.raises(SimulationError, match="missing inputs"):
        simulate(g, Stimuli(("sp1",), data[:, :1]))
    with pytest.raises(ValueError):
        Stimuli(("a", "b"), np.zeros((4, 1)))


def test_simulator_rejects_other_widths():
    b = GraphBuilder("w")
    b.node("x", "input", width=16)
    b.node("y", "output", width=16)
    b.edge("x", "y")
    g = b.build()
    with pytest.raises(SimulationError, match="32-bit"):
        Simulator(g)


def test_cycles_beyond_stimuli_rejected():
    g = BENCHMARKS["pi"]()
    with pytest.raises(SimulationError, match="cycles"):
        simulate(g, Stimuli(("e",), np.zeros((4, 1))), cycles=5)


# Worked by hand from the word-level primitives: impulse through the
# biquad with a1=0.5, a2=-0.25, b1=0.25, b2=0.125.
IIR_IMPULSE_HEAD = [65536, 49152, 16384, -4096, -6144, -2048]


def test_iir_impulse_frozen_head(fmt):
    g = BENCHMARKS["iir"]()
    trace = simulate(g, Stimuli.impulse(g, 6, fmt))
    assert list(trace.column("y")) == IIR_IMPULSE_HEAD


def test_pure_python_kernel_matches():
    code = (
        "import importlib, numpy as np\n"
        "from dfgfold.bench import BENCHMARKS\n"
        "from dfgfold.simulate import Stimuli, simulate\n"
        "from dfgfold.fxp import FixedPointFormat\n"
        "mod = importlib.import_module('dfgfold.simulate')\n"
        "assert mod.USING_JIT is False\n"
        "g = BENCHMARKS['iir']()\n"
        "t = simulate(g, Stimuli.impulse(g, 6, FixedPointFormat(16)))\n"
        "print(','.join(str(int(v)) for v in t.column('y')))\n"
    )
    env = dict(os.environ, DFGFOLD_NO_JIT="1")
    got = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )
    assert got.returncode == 0, got.stderr
    assert got.stdout.strip() == ",".join(str(v) for v in IIR_IMPULSE_HEAD)


def test_equivalence_reports_first_mismatch(folded_presets, fmt):
    graph, design = folded_presets("iir-n02-pa")
    stim = Stimuli.random(graph, 64, seed=21)
    ok = check_equivalence(
        graph, design.graph, n=design.n, latency_offset=design.latency_offset,
        stimuli=stim, fmt=fmt,
    )
    assert ok.passed

    doc = to_json_dict(design.graph)
    for node in doc["nodes"]:
        if node["kind"] == "const-input" and node["params"]["value"] not in (0,):
            node["params"]["value"] += 1
            break
    tampered = parse_graph(json.dumps(doc))
    bad = check_equivalence(
        graph, tampered, n=design.n, latency_offset=design.latency_offset,
        stimuli=stim, fmt=fmt,
    )
    assert not bad.passed
    m = bad.first_mismatch
    assert set(m) == {"sample", "output", "expected", "actual"}
    assert m["output"] in graph.outputs
    assert m["expected"] != m["actual"]
