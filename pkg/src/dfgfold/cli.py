"""Command line front end.

Exit codes: 0 on success, 1 on bad input or an infeasible request, 2
when a verification actually ran and failed.  Graphs are JSON files,
"-" reads one from stdin.  Weight overrides come from --weights (a JSON
object or a path to one) or the DFGFOLD_WEIGHTS environment variable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

from .bench import BENCHMARKS, PRESETS, TEMPLATES, gen_fir, preset_config
from .cost import DelayTable, WeightTable, estimate_cost
from .explore import explore
from .folding import fold
from .fxp import FixedPointFormat
from .graph import DataflowGraph, canonicalize, load_graph, parse_graph, serialize
from .patterns import CorePattern, check_config, match_pattern, parse_pattern, select_cover
from .scheduling import build_core_graph, list_schedule
from .simulate import SimulationError, Stimuli, check_equivalence, simulate
from .report import write_reports


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for failed
    # verification here, so downgrade those to 1.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load(path: str) -> DataflowGraph:
    if path == "-":
        return parse_graph(sys.stdin.read())
    return load_graph(path)


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json_or_file(value: str) -> dict:
    value = value.strip()
    if value.startswith("{"):
        return json.loads(value)
    return json.loads(Path(value).read_text())


def _weights(args) -> WeightTable | None:
    raw = getattr(args, "weights", None) or os.environ.get("DFGFOLD_WEIGHTS")
    return WeightTable.from_json(_json_or_file(raw)) if raw else None


def _delays(args) -> DelayTable | None:
    raw = getattr(args, "delays", None)
    return DelayTable.from_json(_json_or_file(raw)) if raw else None


def _resolve_config(graph: DataflowGraph, args):
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise ValueError(f"unknown preset {args.preset!r}")
        _, config = preset_config(PRESETS[args.preset], graph)
        return config
    spec = getattr(args, "classes", None)
    if not spec:
        raise ValueError("need --preset or --classes")
    targets: list[tuple[str, int]] = []
    pats: dict[str, CorePattern] = {}
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        name, sep, count = token.rpartition(":")
        if not sep:
            raise ValueError(f"class spec {token!r} must look like name:count")
        if name.startswith("@"):
            pat = parse_pattern(Path(name[1:]).read_text())
        elif name in TEMPLATES:
            pat = TEMPLATES[name]
        else:
            raise ValueError(f"unknown template {name!r}")
        pats[pat.name] = pat
        targets.append((pat.name, int(count)))
    candidates = [(p, match_pattern(graph, p)) for p in pats.values()]
    return select_cover(candidates, targets, exact=True)


def _make_stimuli(graph: DataflowGraph, kind: str, samples: int, seed: int, fmt: FixedPointFormat) -> Stimuli:
    if kind == "impulse":
        return Stimuli.impulse(graph, samples, fmt)
    if kind == "step":
        return Stimuli.step(graph, samples, fmt)
    if kind == "random":
        return Stimuli.random(graph, samples, seed)
    raise ValueError(f"unknown stimulus kind {kind!r}")


def _cmd_gen(args) -> int:
    fmt = FixedPointFormat(args.frac_bits)
    if args.bench not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {args.bench!r} (have: {', '.join(BENCHMARKS)})")
    if args.bench == "fir16":
        graph = gen_fir(args.taps, fmt=fmt)
    else:
        graph = BENCHMARKS[args.bench](fmt=fmt)
    _write_text(serialize(graph), args.out)
    return 0


def _cmd_match(args) -> int:
    graph = _load(args.graph)
    if args.template:
        if args.template not in TEMPLATES:
            raise ValueError(f"unknown template {args.template!r}")
        pattern = TEMPLATES[args.template]
    elif args.pattern:
        pattern = parse_pattern(Path(args.pattern).read_text())
    else:
        raise ValueError("need --template or --pattern")
    instances = match_pattern(graph, pattern)
    print(f"{len(instances)} instance(s) of {pattern.name} {pattern.multiset_label()}")
    shown = instances if args.limit is None else instances[: args.limit]
    for inst in shown:
        print(f"  {inst.describe()}")
    return 0


def _core_of(graph: DataflowGraph, config):
    problems = check_config(graph, config)
    if problems:
        raise ValueError("config rejected: " + "; ".join(problems[:5]))
    protected = {
        nid for nid in config.covered_nodes() if graph.node_map[nid].kind == "delay"
    }
    return build_core_graph(canonicalize(graph, protected), config)


def _cmd_schedule(args) -> int:
    graph = _load(args.graph)
    config = _resolve_config(graph, args)
    core = _core_of(graph, config)
    sched = list_schedule(core, n_hint=args.n)
    print(f"N={sched.n} config={config.notation()}")
    for vid in sorted(sched.slots, key=lambda v: (sched.slots[v], v)):
        print(f"  slot {sched.slots[vid]:3d}  {vid}")
    return 0


def _cmd_fold(args) -> int:
    graph = _load(args.graph)
    config = _resolve_config(graph, args)
    design = fold(graph, config, n=args.n, name=args.name)
    _write_text(serialize(design.graph), args.out)
    if args.meta:
        Path(args.meta).write_text(json.dumps(design.meta_dict(), indent=2) + "\n")
    if args.out and args.out != "-":
        print(
            f"folded {graph.name}: N={design.n} latency_offset={design.latency_offset} "
            f"config={design.config.notation()} nodes={len(design.graph.nodes)}"
        )
    return 0


def _cmd_simulate(args) -> int:
    fmt = FixedPointFormat(args.frac_bits)
    graph = _load(args.graph)
    if args.stimuli:
        stim = Stimuli.from_csv(args.stimuli)
    else:
        stim = _make_stimuli(graph, args.stim, args.samples, args.seed, fmt)
    trace = simulate(graph, stim, fmt, cycles=args.cycles)
    out = sys.stdout if not args.out or args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["cycle", *trace.names])
        for t in range(trace.cycles):
            writer.writerow([t, *(int(v) for v in trace.data[t])])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_verify(args) -> int:
    fmt = FixedPointFormat(args.frac_bits)
    original = _load(args.original)
    folded = _load(args.folded)
    if args.meta:
        doc = json.loads(Path(args.meta).read_text())
        n, offset = int(doc["n"]), int(doc["latency_offset"])
    elif args.n is not None and args.latency_offset is not None:
        n, offset = args.n, args.latency_offset
    else:
        raise ValueError("need --meta or both --n and --latency-offset")
    kinds = ["impulse", "step", "random"] if args.stim == "all" else [args.stim]
    ok = True
    for kind in kinds:
        stim = _make_stimuli(original, kind, args.samples, args.seed, fmt)
        try:
            report = check_equivalence(
                original, folded, n=n, latency_offset=offset, stimuli=stim, fmt=fmt
            )
        except SimulationError as exc:
            print(f"{kind}: simulation failed: {exc}")
            ok = False
            continue
        print(f"{kind}: {report}")
        ok = ok and report.passed
    return 0 if ok else 2


def _cmd_explore(args) -> int:
    fmt = FixedPointFormat(args.frac_bits)
    weights = _weights(args) or WeightTable()
    delays = _delays(args) or DelayTable()
    names = [p.strip() for p in args.presets.split(",") if p.strip()] if args.presets else None
    rows = explore(
        args.bench,
        names,
        samples=args.samples,
        seed=args.seed,
        fmt=fmt,
        weights=weights,
        delays=delays,
    )
    meta = {
        "bench": args.bench,
        "samples": args.samples,
        "seed": args.seed,
        "frac_bits": fmt.frac_bits,
        "weights": dataclasses.asdict(weights),
        "delays": dataclasses.asdict(delays),
    }
    paths = write_reports(rows, args.out_dir, meta, title=args.bench)
    for key in ("csv", "json", "tradeoff", "resources"):
        print(f"wrote {paths[key]}")
    print("pareto: " + ", ".join(r.config for r in rows if r.pareto))
    bad = [r.config for r in rows if not r.equivalent]
    if bad:
        print("NOT EQUIVALENT: " + ", ".join(bad))
        return 2
    return 0


def _cmd_cost(args) -> int:
    graph = _load(args.graph)
    weights = _weights(args) or WeightTable()
    delays = _delays(args) or DelayTable()
    cost = estimate_cost(graph, weights, delays)
    if args.json:
        print(
            json.dumps(
                {
                    "mult_units": cost.mult_units,
                    "lut_units": cost.lut_units,
                    "reg_bits": cost.reg_bits,
                    "mux_inputs": cost.mux_inputs,
                    "tmin_proxy_ns": cost.tmin_proxy_ns,
                    "scalar": cost.scalar(weights),
                },
                indent=2,
            )
        )
    else:
        print(f"mult_units    {cost.mult_units}")
        print(f"lut_units     {cost.lut_units:g}")
        print(f"reg_bits      {cost.reg_bits}")
        print(f"mux_inputs    {cost.mux_inputs}")
        print(f"tmin_proxy_ns {cost.tmin_proxy_ns:g}")
        print(f"scalar        {cost.scalar(weights):g}")
    return 0


def _cmd_presets(args) -> int:
    for name, preset in PRESETS.items():
        if args.bench and preset.benchmark != args.bench:
            continue
        spec = ",".join(f"{t}:{c}" for t, c in preset.classes)
        print(f"{name:<22} {preset.benchmark:<6} n~{preset.nominal_n:<3} {spec}")
    return 0


def _add_fmt(p) -> None:
    p.add_argument("--frac-bits", type=int, default=16, help="fractional bits (default 16)")


def _add_config(p) -> None:
    p.add_argument("--preset", help="named preset configuration")
    p.add_argument(
        "--classes",
        help="comma list of template:count (use @file.json:count for a custom pattern)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="dfgfold", description="fold, simulate and explore dataflow graphs")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("gen", help="emit a benchmark graph as JSON")
    p.add_argument("bench", help=f"one of: {', '.join(BENCHMARKS)}")
    p.add_argument("-o", "--out", help="output file (default stdout)")
    p.add_argument("--taps", type=int, default=16, help="tap count for fir16")
    _add_fmt(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("match", help="find pattern instances in a graph")
    p.add_argument("graph")
    p.add_argument("--template", help=f"built-in template ({', '.join(sorted(TEMPLATES))})")
    p.add_argument("--pattern", help="pattern JSON file")
    p.add_argument("--limit", type=int, help="print at most this many instances")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("schedule", help="schedule a folding configuration")
    p.add_argument("graph")
    _add_config(p)
    p.add_argument("--n", type=int, help="slot count (default: smallest feasible)")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("fold", help="apply the folding transformation")
    p.add_argument("graph")
    _add_config(p)
    p.add_argument("--n", type=int, help="slot count (default: smallest feasible)")
    p.add_argument("-o", "--out", help="folded graph JSON (default stdout)")
    p.add_argument("--meta", help="write fold metadata JSON here")
    p.add_argument("--name", help="name for the folded graph")
    p.set_defaults(func=_cmd_fold)

    p = sub.add_parser("simulate", help="run a graph on stimuli, print the trace")
    p.add_argument("graph")
    p.add_argument("--stimuli", help="stimuli CSV (header row of input names)")
    p.add_argument("--stim", choices=["impulse", "step", "random"], default="impulse")
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--cycles", type=int, help="cycle count (default: stimulus length)")
    p.add_argument("-o", "--out", help="trace CSV (default stdout)")
    _add_fmt(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="check a folded graph against its original")
    p.add_argument("original")
    p.add_argument("folded")
    p.add_argument("--meta", help="fold metadata JSON from the fold step")
    p.add_argument("--n", type=int, help="slot count (with --latency-offset)")
    p.add_argument("--latency-offset", type=int)
    p.add_argument("--stim", choices=["impulse", "step", "random", "all"], default="all")
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--seed", type=int, default=11)
    _add_fmt(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("explore", help="cost and verify preset folds, write reports")
    p.add_argument("--bench", required=True, help=f"one of: {', '.join(BENCHMARKS)}")
    p.add_argument("--out-dir", required=True, help="directory for report files")
    p.add_argument("--presets", help="comma list of preset names (default: all for the bench)")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--weights", help="weight table JSON (inline or a file path)")
    p.add_argument("--delays", help="delay table JSON (inline or a file path)")
    _add_fmt(p)
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("cost", help="resource and timing estimate for a graph")
    p.add_argument("graph")
    p.add_argument("--weights", help="weight table JSON (inline or a file path)")
    p.add_argument("--delays", help="delay table JSON (inline or a file path)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("presets", help="list preset configurations")
    p.add_argument("--bench", help="only this benchmark")
    p.set_defaults(func=_cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
