"""Benchmark circuit generators, core templates, and preset folds.

Four reference designs exercise the toolchain:

  fir16   direct-form FIR filter, 16 taps
  iir     direct-form II biquad (b0 = 1)
  pct     two cascaded coordinate rotators sharing a sine table shape
  tpid    three independent PID controllers side by side

plus ``pi``, a tiny proportional-integral loop used heavily in tests.
Port conventions are deliberately uniform (data on port 0, coefficient
on port 1, sine feeding a product on port 1) so the template registry
below matches them without per-design exceptions.  Presets name folding
configurations whose instance counts are achievable on these exact
topologies; the leading ``nXX`` is the nominal slot count, the achieved
one can come out higher when accumulation chains serialize.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fxp import FixedPointFormat
from .graph import DataflowGraph, Edge, GraphBuilder
from .patterns import (
    CorePattern,
    FoldingConfig,
    PatternError,
    PatternNode,
    match_pattern,
    select_cover,
    single_op_pattern,
)

DEFAULT_FMT = FixedPointFormat(16)


def gen_fir(taps: int = 16, fmt: FixedPointFormat = DEFAULT_FMT) -> DataflowGraph:
    """Direct-form FIR: y[n] = sum_i c_i * x[n-i], alternating-sign coefficients."""
    if taps < 2:
        raise ValueError("need at least 2 taps")
    b = GraphBuilder(f"fir{taps}")
    b.node("x", "input")
    for i in range(taps):
        value = fmt.encode((i + 1) / 32.0 * (1 if i % 2 == 0 else -1))
        b.node(f"c{i}", "const-input", value=value)
    for i in range(1, taps):
        b.node(f"d{i}", "delay")
        b.edge("x" if i == 1 else f"d{i - 1}", f"d{i}")
    for i in range(taps):
        b.node(f"m{i}", "mult")
        b.edge("x" if i == 0 else f"d{i}", (f"m{i}", 0))
        b.edge(f"c{i}", (f"m{i}", 1))
    for i in range(1, taps):
        b.node(f"a{i}", "add")
        b.edge(f"m{i}", (f"a{i}", 0))
        b.edge("m0" if i == 1 else f"a{i - 1}", (f"a{i}", 1))
    b.node("y", "output")
    b.edge(f"a{taps - 1}", "y")
    return b.build()


def gen_iir(fmt: FixedPointFormat = DEFAULT_FMT) -> DataflowGraph:
    """Direct-form II biquad with b0 = 1:
    w[n] = x[n] + a1 w[n-1] + a2 w[n-2]; y[n] = w[n] + b1 w[n-1] + b2 w[n-2]."""
    b = GraphBuilder("iir")
    b.node("x", "input")
    for name, value in (("ka1", 0.5), ("ka2", -0.25), ("kb1", 0.25), ("kb2", 0.125)):
        b.node(name, "const-input", value=fmt.encode(value))
    for nid in ("fbsum", "wsum", "ffsum", "ysum"):
        b.node(nid, "add")
    for nid in ("ma1", "ma2", "mb1", "mb2"):
        b.node(nid, "mult")
    b.node("d1", "delay")
    b.node("d2", "delay")
    b.edge("ma1", ("fbsum", 0))
    b.edge("ma2", ("fbsum", 1))
    b.edge("x", ("wsum", 0))
    b.edge("fbsum", ("wsum", 1))
    b.edge("wsum", "d1")
    b.edge("d1", "d2")
    for m, src, k in (("ma1", "d1", "ka1"), ("ma2", "d2", "ka2"), ("mb1", "d1", "kb1"), ("mb2", "d2", "kb2")):
        b.edge(src, (m, 0))
        b.edge(k, (m, 1))
    b.edge("mb1", ("ffsum", 0))
    b.edge("mb2", ("ffsum", 1))
    b.edge("wsum", ("ysum", 0))
    b.edge("ffsum", ("ysum", 1))
    b.node("y", "output")
    b.edge("ysum", "y")
    return b.build()


def gen_pct(fmt: FixedPointFormat = DEFAULT_FMT) -> DataflowGraph:
    """Two cascaded rotators: the first turns (ialpha, ibeta) by the phase
    input, the second turns the result back by the negated phase.  Phases
    are in turns (1.0 is a full revolution); cosine comes from the sine
    table via the quarter-turn offset."""
    b = GraphBuilder("pct")
    b.node("ialpha", "input")
    b.node("ibeta", "input")
    b.node("theta", "input")
    b.node("k0", "const-input", value=0)
    b.node("kq", "const-input", value=-(fmt.scale // 4))

    def rotator(r: int, x: str, y: str, p: str) -> tuple[str, str, str]:
        ps, pc, pn = f"ps{r}", f"pc{r}", f"pn{r}"
        s, c, sn = f"s{r}", f"c{r}", f"sn{r}"
        m1, m2, m3, m4 = f"m1_{r}", f"m2_{r}", f"m3_{r}", f"m4_{r}"
        xo, yo = f"xo{r}", f"yo{r}"
        for nid in (ps, pc, pn):
            b.node(nid, "sub")
        for nid in (s, c, sn):
            b.node(nid, "sine-lut")
        for nid in (m1, m2, m3, m4):
            b.node(nid, "mult")
        for nid in (xo, yo):
            b.node(nid, "sub")
        b.edge(p, (ps, 0))
        b.edge("k0", (ps, 1))
        b.edge(ps, s)
        b.edge(p, (pc, 0))
        b.edge("kq", (pc, 1))
        b.edge(pc, c)
        b.edge("k0", (pn, 0))
        b.edge(p, (pn, 1))
        b.edge(pn, sn)
        b.edge(x, (m1, 0))
        b.edge(c, (m1, 1))
        b.edge(y, (m2, 0))
        b.edge(s, (m2, 1))
        b.edge(y, (m3, 0))
        b.edge(c, (m3, 1))
        b.edge(x, (m4, 0))
        b.edge(sn, (m4, 1))
        b.edge(m1, (xo, 0))
        b.edge(m2, (xo, 1))
        b.edge(m3, (yo, 0))
        b.edge(m4, (yo, 1))
        return xo, yo, pn

    xo1, yo1, pn1 = rotator(1, "ialpha", "ibeta", "theta")
    xo2, yo2, _ = rotator(2, xo1, yo1, pn1)
    for out, src in (("d", xo1), ("q", yo1), ("xr", xo2), ("yr", yo2)):
        b.node(out, "output")
        b.edge(src, out)
    return b.build()


def gen_tpid(fmt: FixedPointFormat = DEFAULT_FMT) -> DataflowGraph:
    """Three identical PID loops: u = kp*e + integ(ki*e) + kd*(e - e[-1])."""
    b = GraphBuilder("tpid")
    for j in (1, 2, 3):
        b.node(f"sp{j}", "input")
        b.node(f"fb{j}", "input")
        b.node(f"kp{j}", "const-input", value=fmt.encode(0.8))
        b.node(f"ki{j}", "const-input", value=fmt.encode(0.25))
        b.node(f"kd{j}", "const-input", value=fmt.encode(0.125))
        e, mp, mi, md = f"e{j}", f"mp{j}", f"mi{j}", f"md{j}"
        ai, ao, au, sd = f"ai{j}", f"ao{j}", f"au{j}", f"sd{j}"
        di, dd = f"di{j}", f"dd{j}"
        b.node(e, "sub")
        b.node(sd, "sub")
        for nid in (mp, mi, md):
            b.node(nid, "mult")
        for nid in (ai, ao, au):
            b.node(nid, "add")
        b.node(di, "delay")
        b.node(dd, "delay")
        b.edge(f"sp{j}", (e, 0))
        b.edge(f"fb{j}", (e, 1))
        b.edge(e, (mp, 0))
        b.edge(f"kp{j}", (mp, 1))
        b.edge(e, (mi, 0))
        b.edge(f"ki{j}", (mi, 1))
        b.edge(mi, (ai, 0))
        b.edge(di, (ai, 1))
        b.edge(ai, di)
        b.edge(e, dd)
        b.edge(e, (sd, 0))
        b.edge(dd, (sd, 1))
        b.edge(sd, (md, 0))
        b.edge(f"kd{j}", (md, 1))
        b.edge(mp, (ao, 0))
        b.edge(ai, (ao, 1))
        b.edge(md, (au, 0))
        b.edge(ao, (au, 1))
        b.node(f"u{j}", "output")
        b.edge(au, f"u{j}")
    return b.build()


def gen_pi(fmt: FixedPointFormat = DEFAULT_FMT) -> DataflowGraph:
    """Small PI loop: u = kp*e + integ(ki*e).  Nine nodes with IO."""
    b = GraphBuilder("pi")
    b.node("e", "input")
    b.node("kp", "const-input", value=fmt.encode(0.75))
    b.node("ki", "const-input", value=fmt.encode(0.25))
    b.node("mp", "mult")
    b.node("mi", "mult")
    b.node("ai", "add")
    b.node("d", "delay")
    b.node("ao", "add")
    b.edge("e", ("mp", 0))
    b.edge("kp", ("mp", 1))
    b.edge("e", ("mi", 0))
    b.edge("ki", ("mi", 1))
    b.edge("mi", ("ai", 0))
    b.edge("d", ("ai", 1))
    b.edge("ai", "d")
    b.edge("mp", ("ao", 0))
    b.edge("ai", ("ao", 1))
    b.node("u", "output")
    b.edge("ao", "u")
    return b.build()


BENCHMARKS = {
    "fir16": gen_fir,
    "iir": gen_iir,
    "pct": gen_pct,
    "tpid": gen_tpid,
    "pi": gen_pi,
}


def _pattern(name: str, nodes: list[tuple[str, str]], edges: list[tuple]) -> CorePattern:
    return CorePattern(
        name,
        tuple(PatternNode(i, k) for i, k in nodes),
        tuple(Edge(s, 0, d, p, w) for s, d, p, w in edges),
    )


def slice_pattern(k: int) -> CorePattern:
    """One FIR tap run: k delays, k products, k accumulator adds."""
    nodes = [(f"d{j}", "delay") for j in range(1, k + 1)]
    nodes += [(f"m{j}", "mult") for j in range(1, k + 1)]
    nodes += [(f"a{j}", "add") for j in range(1, k + 1)]
    edges = []
    for j in range(1, k):
        edges.append((f"d{j}", f"d{j + 1}", 0, 0))
        edges.append((f"a{j}", f"a{j + 1}", 1, 0))
    for j in range(1, k + 1):
        edges.append((f"d{j}", f"m{j}", 0, 0))
        edges.append((f"m{j}", f"a{j}", 0, 0))
    return _pattern(f"slice{k}", nodes, edges)


def _build_templates() -> dict[str, CorePattern]:
    t: dict[str, CorePattern] = {}
    for kind, name in (("mult", "prod"), ("add", "add"), ("sub", "sub"), ("sine-lut", "sin"), ("delay", "reg")):
        t[name] = single_op_pattern(kind, name)
    t["prod-add"] = _pattern("prod-add", [("m", "mult"), ("a", "add")], [("m", "a", 0, 0)])
    t["dp"] = _pattern("dp", [("d", "delay"), ("m", "mult")], [("d", "m", 0, 0)])
    for k in range(1, 8):
        t[f"slice{k}"] = slice_pattern(k)
    t["prod-add-add"] = _pattern(
        "prod-add-add",
        [("m", "mult"), ("aa", "add"), ("ab", "add")],
        [("m", "aa", 0, 0), ("aa", "ab", 1, 0)],
    )
    t["iir-half"] = _pattern(
        "iir-half",
        [("ma", "mult"), ("mb", "mult"), ("aa", "add"), ("ab", "add")],
        [("ma", "aa", 0, 0), ("mb", "aa", 1, 0), ("aa", "ab", 1, 0)],
    )
    t["ssp"] = _pattern(
        "ssp",
        [("s", "sub"), ("l", "sine-lut"), ("m", "mult")],
        [("s", "l", 0, 0), ("l", "m", 1, 0)],
    )
    t["sin-prod"] = _pattern(
        "sin-prod", [("l", "sine-lut"), ("m", "mult")], [("l", "m", 1, 0)]
    )
    t["sub-prod"] = _pattern(
        "sub-prod", [("s", "sub"), ("m", "mult")], [("s", "m", 0, 0)]
    )
    t["sub-prod-add"] = _pattern(
        "sub-prod-add",
        [("s", "sub"), ("m", "mult"), ("a", "add")],
        [("s", "m", 0, 0), ("m", "a", 0, 0)],
    )
    t["int-core"] = _pattern(
        "int-core",
        [("m", "mult"), ("a", "add"), ("d", "delay")],
        [("m", "a", 0, 0), ("a", "d", 0, 0), ("d", "a", 1, 0)],
    )
    t["diff-core"] = _pattern(
        "diff-core",
        [("d", "delay"), ("s", "sub"), ("m", "mult")],
        [("d", "s", 1, 0), ("s", "m", 0, 0)],
    )
    t["pid-core"] = _pattern(
        "pid-core",
        [
            ("e", "sub"),
            ("mp", "mult"),
            ("mi", "mult"),
            ("md", "mult"),
            ("ai", "add"),
            ("ao", "add"),
            ("au", "add"),
            ("sd", "sub"),
            ("di", "delay"),
            ("dd", "delay"),
        ],
        [
            ("e", "mp", 0, 0),
            ("e", "mi", 0, 0),
            ("e", "dd", 0, 0),
            ("e", "sd", 0, 0),
            ("mi", "ai", 0, 0),
            ("ai", "di", 0, 0),
            ("di", "ai", 1, 0),
            ("dd", "sd", 1, 0),
            ("sd", "md", 0, 0),
            ("mp", "ao", 0, 0),
            ("ai", "ao", 1, 0),
            ("md", "au", 0, 0),
            ("ao", "au", 1, 0),
        ],
    )
    return t


TEMPLATES = _build_templates()


@dataclass(frozen=True)
class Preset:
    name: str
    benchmark: str
    classes: tuple[tuple[str, int], ...]
    nominal_n: int


def _presets() -> dict[str, Preset]:
    rows: list[tuple[str, str, int, list[tuple[str, int]]]] = [
        ("fir-n02-wide7", "fir16", 2, [("slice7", 2)]),
        ("fir-n02-dp", "fir16", 2, [("dp", 2)]),
        ("fir-n03-slices", "fir16", 3, [("slice4", 3), ("slice2", 1)]),
        ("fir-n04-slices", "fir16", 4, [("slice3", 4), ("prod-add", 3)]),
        ("fir-n05-slices", "fir16", 5, [("slice2", 5), ("slice1", 2)]),
        ("fir-n07-slice2", "fir16", 7, [("slice2", 7)]),
        ("fir-n14-pad", "fir16", 14, [("slice1", 14)]),
        ("fir-n14-dp", "fir16", 14, [("dp", 14)]),
        ("fir-n15-p", "fir16", 15, [("prod", 15)]),
        ("fir-n15-ap", "fir16", 15, [("add", 15), ("prod", 15)]),
        ("fir-n15-pa", "fir16", 15, [("prod-add", 15)]),
        ("fir-n16-p", "fir16", 16, [("prod", 16)]),
        ("pct-n02-ssp3", "pct", 2, [("ssp", 2), ("ssp", 2), ("ssp", 2)]),
        ("pct-n06-singles-a", "pct", 6, [("sin", 6), ("prod", 6), ("prod", 2), ("sub", 6), ("sub", 4)]),
        (
            "pct-n06-singles-b",
            "pct",
            6,
            [("sin", 6), ("prod", 6), ("prod", 2), ("sub", 3), ("sub", 3), ("sub", 2), ("sub", 2)],
        ),
        ("pct-n06-ssp", "pct", 6, [("ssp", 6), ("prod", 2), ("sub", 4)]),
        ("pct-n06-sp", "pct", 6, [("sin-prod", 6)]),
        ("pct-n06-s", "pct", 6, [("sin", 6)]),
        ("pct-n06-sp-partial", "pct", 6, [("sin", 6), ("prod", 6), ("prod", 2)]),
        ("pct-n06-ssp-only", "pct", 6, [("ssp", 6)]),
        ("tpid-n03-spa", "tpid", 3, [("sub-prod-add", 3)]),
        ("tpid-n09-p", "tpid", 9, [("prod", 9)]),
        ("tpid-n03-pid", "tpid", 3, [("pid-core", 3)]),
        ("tpid-n09-singles", "tpid", 9, [("prod", 9), ("add", 9), ("sub", 6)]),
        ("tpid-n03-pid-split", "tpid", 3, [("int-core", 3), ("diff-core", 3), ("prod", 3)]),
        ("tpid-n09-pa", "tpid", 9, [("prod-add", 9)]),
        ("tpid-n06-sp", "tpid", 6, [("sub-prod", 6)]),
        ("iir-n02-paa", "iir", 2, [("prod-add-add", 2)]),
        ("iir-n02-papa", "iir", 2, [("iir-half", 2)]),
        ("iir-n02-pa", "iir", 2, [("prod-add", 2)]),
        ("iir-n04-singles", "iir", 4, [("add", 4), ("prod", 4)]),
        ("iir-n04-p", "iir", 4, [("prod", 4)]),
    ]
    return {
        name: Preset(name, benchmark, tuple(classes), nominal)
        for name, benchmark, nominal, classes in rows
    }


PRESETS = _presets()


def resolve_config(
    graph: DataflowGraph, classes: list[tuple[str, int]], exact: bool = True
) -> FoldingConfig:
    """Match the named templates on a graph and pick disjoint instances."""
    candidates = []
    seen: set[str] = set()
    for tname, _ in classes:
        if tname in seen:
            continue
        seen.add(tname)
        if tname not in TEMPLATES:
            raise PatternError(f"unknown template {tname!r}")
        pattern = TEMPLATES[tname]
        candidates.append((pattern, match_pattern(graph, pattern)))
    targets = [(TEMPLATES[t].name, c) for t, c in classes]
    return select_cover(candidates, targets, exact=exact)


def preset_config(preset: Preset | str, graph: DataflowGraph | None = None) -> tuple[DataflowGraph, FoldingConfig]:
    if isinstance(preset, str):
        preset = PRESETS[preset]
    if graph is None:
        graph = BENCHMARKS[preset.benchmark]()
    return graph, resolve_config(graph, list(preset.classes), exact=True)
