"""Cycle-accurate simulation of dataflow graphs.

The simulator flattens a graph into dense arrays (one wire per node,
one ring buffer per registered edge) and steps them with a small
interpreter kernel.  The kernel is plain enough for numba; when numba
is unavailable or DFGFOLD_NO_JIT is set the same function runs as pure
Python.  Semantics per cycle:

  1. input and constant wires take the cycle's stimuli, state wires
     (delay, counter) present their stored value,
  2. combinational nodes evaluate in topological order; a registered
     edge reads what its source wrote ``delay`` cycles ago,
  3. delay next-states are collected, then ring buffers are written,
     then delays commit and counters increment.

All state starts at zero.  Words are 32-bit two's complement; a mux
select outside the data-port range aborts the run with an error
instead of guessing.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fxp import FixedPointFormat
from .graph import DataflowGraph, node_arity, require_valid, topo_order

K_INPUT, K_CONST, K_ADD, K_SUB, K_MULT, K_NEGATE, K_SINE, K_DELAY, K_COUNTER, K_MUX, K_OUTPUT = range(11)

_KIND_CODE = {
    "input": K_INPUT,
    "const-input": K_CONST,
    "add": K_ADD,
    "sub": K_SUB,
    "mult": K_MULT,
    "negate": K_NEGATE,
    "sine-lut": K_SINE,
    "delay": K_DELAY,
    "counter": K_COUNTER,
    "mux": K_MUX,
    "output": K_OUTPUT,
}


class SimulationError(RuntimeError):
    def __init__(self, message: str, cycle: int = -1, node: str = ""):
        super().__init__(message)
        self.cycle = cycle
        self.node = node


def _kernel_py(
    cycles,
    kind,
    param,
    table_ofs,
    table_len,
    tables,
    in_ofs,
    port_src,
    port_ring,
    ring_ofs,
    ring_len,
    ring_src,
    rings,
    comb_list,
    delay_list,
    counter_list,
    input_list,
    output_list,
    stim,
    out,
    wires,
    state,
    nxt,
    sine_table,
    frac_bits,
):
    mask = np.int64(0xFFFFFFFF)
    sign = np.int64(0x80000000)
    n_ring = ring_len.shape[0]
    for t in range(cycles):
        for i in range(input_list.shape[0]):
            wires[input_list[i]] = stim[t, i]
        for i in range(delay_list.shape[0]):
            wires[delay_list[i]] = state[delay_list[i]]
        for i in range(counter_list.shape[0]):
            wires[counter_list[i]] = state[counter_list[i]]

        for ci in range(comb_list.shape[0]):
            idx = comb_list[ci]
            k = kind[idx]
            base = in_ofs[idx]
            if k == K_MUX:
                m = param[idx]
                sp = base + m
                if port_ring[sp] < 0:
                    sel = wires[port_src[sp]]
                else:
                    r = port_ring[sp]
                    sel = rings[ring_ofs[r] + t % ring_len[r]]
                # With a select table the raw value indexes the table and
                # the table names the data port; without one it is the
                # data port directly.
                tl = table_len[idx]
                if tl > 0:
                    if sel < 0 or sel >= tl:
                        return t, idx
                    sel = tables[table_ofs[idx] + sel]
                if sel < 0 or sel >= m:
                    return t, idx
                dp = base + sel
                if port_ring[dp] < 0:
                    wires[idx] = wires[port_src[dp]]
                else:
                    r = port_ring[dp]
                    wires[idx] = rings[ring_ofs[r] + t % ring_len[r]]
                continue
            if port_ring[base] < 0:
                a = wires[port_src[base]]
            else:
                r = port_ring[base]
                a = rings[ring_ofs[r] + t % ring_len[r]]
            if k == K_ADD or k == K_SUB or k == K_MULT:
                if port_ring[base + 1] < 0:
                    b = wires[port_src[base + 1]]
                else:
                    r = port_ring[base + 1]
                    b = rings[ring_ofs[r] + t % ring_len[r]]
                if k == K_ADD:
                    v = a + b
                elif k == K_SUB:
                    v = a - b
                else:
                    v = (a * b) >> frac_bits
                wires[idx] = ((v & mask) ^ sign) - sign
            elif k == K_NEGATE:
                wires[idx] = (((-a) & mask) ^ sign) - sign
            elif k == K_SINE:
                if frac_bits >= 10:
                    pos = (a >> (frac_bits - 10)) & 1023
                else:
                    pos = (a << (10 - frac_bits)) & 1023
                wires[idx] = sine_table[pos]
            else:
                wires[idx] = a

        for i in range(delay_list.shape[0]):
            idx = delay_list[i]
            base = in_ofs[idx]
            if port_ring[base] < 0:
                nxt[idx] = wires[port_src[base]]
            else:
                r = port_ring[base]
                nxt[idx] = rings[ring_ofs[r] + t % ring_len[r]]
        for r in range(n_ring):
            rings[ring_ofs[r] + t % ring_len[r]] = wires[ring_src[r]]
        for i in range(delay_list.shape[0]):
            state[delay_list[i]] = nxt[delay_list[i]]
        for i in range(counter_list.shape[0]):
            idx = counter_list[i]
            state[idx] = (state[idx] + 1) % param[idx]

        for i in range(output_list.shape[0]):
            out[t, i] = wires[output_list[i]]
    return -1, -1


def _make_kernel():
    if os.environ.get("DFGFOLD_NO_JIT"):
        return _kernel_py, False
    try:
        from numba import njit
    except ImportError:
        return _kernel_py, False
    return njit(cache=True, nogil=True)(_kernel_py), True


_kernel, USING_JIT = _make_kernel()


@dataclass
class Stimuli:
    """Raw input words, one row per sample, one column per input node."""

    names: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.int64)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.names):
            raise ValueError("stimuli data must be [samples, inputs]")

    @property
    def samples(self) -> int:
        return int(self.data.shape[0])

    @classmethod
    def impulse(cls, graph: DataflowGraph, samples: int, fmt: FixedPointFormat, amplitude: float = 1.0) -> "Stimuli":
        data = np.zeros((samples, len(graph.inputs)), dtype=np.int64)
        if samples:
            data[0, :] = fmt.encode(amplitude)
        return cls(tuple(graph.inputs), data)

    @classmethod
    def step(cls, graph: DataflowGraph, samples: int, fmt: FixedPointFormat, amplitude: float = 1.0) -> "Stimuli":
        data = np.full((samples, len(graph.inputs)), fmt.encode(amplitude), dtype=np.int64)
        return cls(tuple(graph.inputs), data)

    @classmethod
    def random(cls, graph: DataflowGraph, samples: int, seed: int) -> "Stimuli":
        rng = np.random.default_rng(seed)
        data = rng.integers(-(1 << 31), 1 << 31, size=(samples, len(graph.inputs)), dtype=np.int64)
        return cls(tuple(graph.inputs), data)

    @classmethod
    def from_columns(cls, columns: dict[str, list[int]]) -> "Stimuli":
        names = tuple(columns)
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError("stimuli columns differ in length")
        rows = lengths.pop() if lengths else 0
        data = np.zeros((rows, len(names)), dtype=np.int64)
        for j, name in enumerate(names):
            data[:, j] = columns[name]
        return cls(names, data)

    def expand(self, n: int, extra: int = 1) -> "Stimuli":
        """Frame expansion for folded designs: each sample held n cycles,
        plus ``extra`` trailing zero cycles so the last frame can drain."""
        rep = np.repeat(self.data, n, axis=0)
        tail = np.zeros((extra, self.data.shape[1]), dtype=np.int64)
        return Stimuli(self.names, np.vstack([rep, tail]))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            for row in self.data:
                writer.writerow(int(v) for v in row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Stimuli":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"empty stimuli file {path}")
        names = tuple(name.strip() for name in rows[0])
        data = np.array([[int(v) for v in row] for row in rows[1:]], dtype=np.int64)
        if data.size == 0:
            data = data.reshape(0, len(names))
        return cls(names, data)


@dataclass
class Trace:
    names: tuple[str, ...]
    data: np.ndarray

    @property
    def cycles(self) -> int:
        return int(self.data.shape[0])

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.names.index(name)]


class Simulator:
    """Compiled interpreter for one graph and number format."""

    def __init__(self, graph: DataflowGraph, fmt: FixedPointFormat | None = None):
        require_valid(graph)
        self.graph = graph
        self.fmt = fmt or FixedPointFormat()
        for n in graph.nodes:
            if n.width != 32:
                raise SimulationError(f"only 32-bit designs simulate; {n.id!r} is {n.width}-bit")

        order = topo_order(graph)
        self._index = {nid: i for i, nid in enumerate(order)}
        n_nodes = len(order)
        self._kind = np.zeros(n_nodes, dtype=np.int64)
        self._param = np.zeros(n_nodes, dtype=np.int64)
        in_counts = np.zeros(n_nodes + 1, dtype=np.int64)

        self._table_ofs = np.zeros(n_nodes, dtype=np.int64)
        self._table_len = np.zeros(n_nodes, dtype=np.int64)
        tables: list[int] = []
        for nid in order:
            node = graph.node_map[nid]
            idx = self._index[nid]
            self._kind[idx] = _KIND_CODE[node.kind]
            if node.kind == "const-input":
                self._param[idx] = int(node.params.get("value", 0))
            elif node.kind == "counter":
                self._param[idx] = int(node.params["modulus"])
            elif node.kind == "mux":
                self._param[idx] = int(node.params["ports"])
                select = node.params.get("select")
                if select:
                    self._table_ofs[idx] = len(tables)
                    self._table_len[idx] = len(select)
                    tables.extend(int(s) for s in select)
            in_counts[idx + 1] = node_arity(node)[0]
        self._tables = np.array(tables, dtype=np.int64)

        self._in_ofs = np.cumsum(in_counts).astype(np.int64)
        total_ports = int(self._in_ofs[-1])
        self._port_src = np.zeros(total_ports, dtype=np.int64)
        self._port_ring = np.full(total_ports, -1, dtype=np.int64)

        ring_lens: list[int] = []
        ring_srcs: list[int] = []
        for e in sorted(graph.edges, key=lambda e: e.key):
            slot = self._in_ofs[self._index[e.dst]] + e.dst_port
            self._port_src[slot] = self._index[e.src]
            if e.delay > 0:
                self._port_ring[slot] = len(ring_lens)
                ring_lens.append(e.delay)
                ring_srcs.append(self._index[e.src])
        self._ring_len = np.array(ring_lens, dtype=np.int64)
        self._ring_src = np.array(ring_srcs, dtype=np.int64)
        self._ring_ofs = np.concatenate([[0], np.cumsum(self._ring_len)]).astype(np.int64)

        self._comb = np.array(
            [self._index[nid] for nid in order if _KIND_CODE[graph.node_map[nid].kind] not in (K_INPUT, K_CONST, K_DELAY, K_COUNTER)],
            dtype=np.int64,
        )
        self._delays = np.array(
            [self._index[n.id] for n in graph.nodes if n.kind == "delay"], dtype=np.int64
        )
        self._counters = np.array(
            [self._index[n.id] for n in graph.nodes if n.kind == "counter"], dtype=np.int64
        )
        self._inputs = np.array([self._index[nid] for nid in graph.inputs], dtype=np.int64)
        self._outputs = np.array([self._index[nid] for nid in graph.outputs], dtype=np.int64)
        self._consts = [
            (self._index[n.id], int(n.params.get("value", 0))) for n in graph.nodes if n.kind == "const-input"
        ]
        self._sine = np.array(self.fmt.sine_table(), dtype=np.int64)

    def run(self, stimuli: Stimuli, cycles: int | None = None) -> Trace:
        if tuple(stimuli.names) != tuple(self.graph.inputs):
            missing = set(self.graph.inputs) - set(stimuli.names)
            if missing:
                raise SimulationError(f"stimuli missing inputs: {sorted(missing)}")
            cols = [stimuli.names.index(nid) for nid in self.graph.inputs]
            stim = stimuli.data[:, cols]
        else:
            stim = stimuli.data
        cycles = stimuli.samples if cycles is None else cycles
        if cycles > stimuli.samples:
            raise SimulationError(
                f"need {cycles} cycles of stimuli, got {stimuli.samples}"
            )
        stim = np.ascontiguousarray(stim[:cycles], dtype=np.int64)
        if stim.shape[1] == 0:
            stim = np.zeros((cycles, 1), dtype=np.int64)
            inputs = np.zeros(0, dtype=np.int64)
        else:
            inputs = self._inputs

        n_nodes = self._kind.shape[0]
        wires = np.zeros(n_nodes, dtype=np.int64)
        state = np.zeros(n_nodes, dtype=np.int64)
        nxt = np.zeros(n_nodes, dtype=np.int64)
        rings = np.zeros(int(self._ring_ofs[-1]), dtype=np.int64)
        out = np.zeros((cycles, self._outputs.shape[0]), dtype=np.int64)
        for idx, value in self._consts:
            wires[idx] = value

        err_cycle, err_node = _kernel(
            cycles,
            self._kind,
            self._param,
            self._table_ofs,
            self._table_len,
            self._tables,
            self._in_ofs,
            self._port_src,
            self._port_ring,
            self._ring_ofs,
            self._ring_len,
            self._ring_src,
            rings,
            self._comb,
            self._delays,
            self._counters,
            inputs,
            self._outputs,
            stim,
            out,
            wires,
            state,
            nxt,
            self._sine,
            self.fmt.frac_bits,
        )
        if err_cycle >= 0:
            name = next(nid for nid, i in self._index.items() if i == err_node)
            raise SimulationError(
                f"mux {name!r} select out of range at cycle {err_cycle}", err_cycle, name
            )
        return Trace(tuple(self.graph.outputs), out)


def simulate(graph: DataflowGraph, stimuli: Stimuli, fmt: FixedPointFormat | None = None, cycles: int | None = None) -> Trace:
    return Simulator(graph, fmt).run(stimuli, cycles)


@dataclass
class EquivalenceReport:
    passed: bool
    samples: int
    n: int
    latency_offset: int
    first_mismatch: dict | None = None

    def __str__(self) -> str:
        if self.passed:
            return f"equivalent over {self.samples} samples (N={self.n}, offset={self.latency_offset})"
        m = self.first_mismatch or {}
        return (
            f"MISMATCH at sample {m.get('sample')} output {m.get('output')!r}: "
            f"expected {m.get('expected')}, got {m.get('actual')}"
        )


def check_equivalence(
    original: DataflowGraph,
    folded_graph: DataflowGraph,
    *,
    n: int,
    latency_offset: int,
    stimuli: Stimuli,
    fmt: FixedPointFormat | None = None,
) -> EquivalenceReport:
    """Bit-exact comparison of a folded design against its original.

    The original consumes one sample per cycle.  The folded design gets
    the same samples held for n cycles each and its outputs are read at
    cycle k*n + latency_offset for sample k.
    """
    fmt = fmt or FixedPointFormat()
    samples = stimuli.samples
    ref = Simulator(original, fmt).run(stimuli)

    need = (samples - 1) * n + latency_offset + 1 if samples else 0
    expanded = stimuli.expand(n, extra=max(0, need - samples * n))
    got = Simulator(folded_graph, fmt).run(expanded, cycles=need)

    read_rows = np.arange(samples) * n + latency_offset
    for name in original.outputs:
        want_col = ref.column(name)
        got_col = got.column(name)[read_rows]
        bad = np.nonzero(want_col != got_col)[0]
        if bad.size:
            k = int(bad[0])
            return EquivalenceReport(
                passed=False,
                samples=samples,
                n=n,
                latency_offset=latency_offset,
                first_mismatch={
                    "sample": k,
                    "output": name,
                    "expected": int(want_col[k]),
                    "actual": int(got_col[k]),
                },
            )
    return EquivalenceReport(True, samples, n, latency_offset)
