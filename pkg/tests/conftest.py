"""Shared fixtures.

Folding a preset is the expensive step most test modules need, so the
results are cached per session: one fold per preset name, shared by the
structural, cost and acceptance tests.  The fold rule mirrors explore():
ask for the preset's nominal slot count first, fall back to the search
when accumulation chains make the nominal count infeasible.
"""

from __future__ import annotations

import pytest

from dfgfold import (
    PRESETS,
    FixedPointFormat,
    FoldedDesign,
    ScheduleError,
    fold,
    preset_config,
)

FMT = FixedPointFormat(16)


@pytest.fixture(scope="session")
def fmt() -> FixedPointFormat:
    return FMT


@pytest.fixture(scope="session")
def folded_presets():
    """name -> (original graph, FoldedDesign), folding lazily on first use."""
    cache: dict[str, tuple] = {}

    def get(name: str) -> tuple:
        if name not in cache:
            preset = PRESETS[name]
            graph, config = preset_config(name)
            try:
                design: FoldedDesign = fold(graph, config, n=preset.nominal_n)
            except ScheduleError:
                design = fold(graph, config)
            cache[name] = (graph, design)
        return cache[name]

    return get
