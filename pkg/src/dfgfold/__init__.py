"""dfgfold: fold synchronous dataflow graphs onto shared hardware units.

The pipeline mirrors the CLI: build or load a graph, match core
patterns, pick a configuration, schedule, fold, then verify the folded
design bit-exactly against the original by simulation and weigh the
area/latency tradeoff.
"""

from .fxp import FixedPointFormat, fx_add, fx_apply, fx_mult, fx_negate, fx_sine, fx_sub, wrap
from .graph import (
    DataflowGraph,
    Edge,
    GraphBuilder,
    GraphError,
    Node,
    canonical_ranks,
    canonicalize,
    load_graph,
    parse_graph,
    save_graph,
    serialize,
    topo_order,
    validate,
)
from .patterns import (
    CoreInstance,
    CorePattern,
    FoldClass,
    FoldingConfig,
    PatternError,
    PatternNode,
    check_config,
    match_pattern,
    parse_pattern,
    select_cover,
    single_op_pattern,
)
from .scheduling import (
    Schedule,
    ScheduleError,
    build_core_graph,
    folding_delay,
    list_schedule,
    schedule_at,
    verify_schedule,
)
from .folding import FoldedDesign, FoldError, fold
from .simulate import (
    EquivalenceReport,
    SimulationError,
    Simulator,
    Stimuli,
    Trace,
    check_equivalence,
    simulate,
)
from .cost import (
    CostBreakdown,
    DelayTable,
    ResourceCost,
    WeightTable,
    estimate_cost,
    fold_breakdown,
    pareto_flags,
)
from .bench import BENCHMARKS, PRESETS, TEMPLATES, gen_fir, gen_iir, gen_pct, gen_pi, gen_tpid, preset_config, resolve_config
from .explore import ExplorationRow, explore
from .report import plot_resources, plot_tradeoff, write_report_csv, write_report_json, write_reports

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS",
    "CoreInstance",
    "CorePattern",
    "CostBreakdown",
    "DataflowGraph",
    "DelayTable",
    "Edge",
    "EquivalenceReport",
    "ExplorationRow",
    "FixedPointFormat",
    "FoldClass",
    "FoldError",
    "FoldedDesign",
    "FoldingConfig",
    "GraphBuilder",
    "GraphError",
    "Node",
    "PRESETS",
    "PatternError",
    "PatternNode",
    "ResourceCost",
    "Schedule",
    "ScheduleError",
    "SimulationError",
    "Simulator",
    "Stimuli",
    "TEMPLATES",
    "Trace",
    "WeightTable",
    "build_core_graph",
    "canonical_ranks",
    "canonicalize",
    "check_config",
    "check_equivalence",
    "estimate_cost",
    "explore",
    "fold",
    "fold_breakdown",
    "folding_delay",
    "fx_add",
    "fx_apply",
    "fx_mult",
    "fx_negate",
    "fx_sine",
    "fx_sub",
    "gen_fir",
    "gen_iir",
    "gen_pct",
    "gen_pi",
    "gen_tpid",
    "list_schedule",
    "load_graph",
    "match_pattern",
    "pareto_flags",
    "parse_graph",
    "parse_pattern",
    "plot_resources",
    "plot_tradeoff",
    "preset_config",
    "resolve_config",
    "save_graph",
    "schedule_at",
    "select_cover",
    "serialize",
    "simulate",
    "single_op_pattern",
    "topo_order",
    "validate",
    "verify_schedule",
    "wrap",
    "write_report_csv",
    "write_report_json",
    "write_reports",
]
