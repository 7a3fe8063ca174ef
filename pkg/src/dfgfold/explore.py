"""Design-space exploration over the preset fold catalog.

One row per configuration: the unfolded design first, then every preset
(or a chosen subset), each folded, costed and verified by simulation
against the original on a shared random stimulus.  Rows come back
sorted by area then latency with Pareto flags attached, ready for the
report writers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bench import BENCHMARKS, PRESETS, preset_config
from .cost import (
    CostBreakdown,
    DelayTable,
    ResourceCost,
    WeightTable,
    estimate_cost,
    fold_breakdown,
    pareto_flags,
)
from .folding import fold
from .fxp import FixedPointFormat
from .graph import DataflowGraph
from .scheduling import ScheduleError
from .simulate import Stimuli, check_equivalence


@dataclass
class ExplorationRow:
    config: str
    n: int
    requested_n: int
    notation: str
    cost: ResourceCost
    latency_proxy_ns: float
    equivalent: bool
    pareto: bool = False
    breakdown: CostBreakdown | None = None

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "n": self.n,
            "requested_n": self.requested_n,
            "notation": self.notation,
            "mult_units": self.cost.mult_units,
            "lut_units": self.cost.lut_units,
            "reg_bits": self.cost.reg_bits,
            "mux_inputs": self.cost.mux_inputs,
            "tmin_proxy_ns": self.cost.tmin_proxy_ns,
            "latency_proxy_ns": self.latency_proxy_ns,
            "equivalent": self.equivalent,
            "pareto": self.pareto,
            "breakdown": self.breakdown.as_dict() if self.breakdown else None,
        }


def explore(
    bench: str,
    preset_names: list[str] | None = None,
    *,
    samples: int = 200,
    seed: int = 7,
    fmt: FixedPointFormat | None = None,
    weights: WeightTable | None = None,
    delays: DelayTable | None = None,
) -> list[ExplorationRow]:
    if bench not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {bench!r}")
    fmt = fmt or FixedPointFormat()
    weights = weights or WeightTable()
    delays = delays or DelayTable()
    graph: DataflowGraph = BENCHMARKS[bench](fmt=fmt)

    if preset_names is None:
        preset_names = [p for p in PRESETS if PRESETS[p].benchmark == bench]
    for p in preset_names:
        if p not in PRESETS:
            raise ValueError(f"unknown preset {p!r}")
        if PRESETS[p].benchmark != bench:
            raise ValueError(f"preset {p!r} targets {PRESETS[p].benchmark!r}, not {bench!r}")

    stim = Stimuli.random(graph, samples, seed)
    base_cost = estimate_cost(graph, weights, delays)
    rows = [
        ExplorationRow(
            config="original",
            n=1,
            requested_n=1,
            notation="-",
            cost=base_cost,
            latency_proxy_ns=base_cost.tmin_proxy_ns,
            equivalent=True,
        )
    ]
    for name in preset_names:
        preset = PRESETS[name]
        _, config = preset_config(preset, graph)
        try:
            design = fold(graph, config, n=preset.nominal_n)
        except ScheduleError:
            design = fold(graph, config)
        cost = estimate_cost(design.graph, weights, delays)
        report = check_equivalence(
            graph,
            design.graph,
            n=design.n,
            latency_offset=design.latency_offset,
            stimuli=stim,
            fmt=fmt,
        )
        rows.append(
            ExplorationRow(
                config=name,
                n=design.n,
                requested_n=preset.nominal_n,
                notation=design.config.notation(),
                cost=cost,
                latency_proxy_ns=design.n * cost.tmin_proxy_ns,
                equivalent=report.passed,
                breakdown=fold_breakdown(graph, design, weights),
            )
        )

    rows.sort(key=lambda r: (r.cost.lut_units, r.latency_proxy_ns, r.config))
    # The front is over the folded alternatives that actually verified;
    # the unfolded row stays in the report as the reference point but is
    # not a folding choice (it would trivially win on latency).
    front = [r for r in rows if r.config != "original" and r.equivalent]
    flags = pareto_flags([(r.latency_proxy_ns, r.cost.lut_units) for r in front])
    for row, flag in zip(front, flags):
        row.pareto = flag
    return rows
