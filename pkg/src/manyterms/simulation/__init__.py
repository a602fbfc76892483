"""Monte Carlo design: data generating processes, random streams, replication engine."""

from .dgp import (
    DEFAULT_MIXTURES,
    DgpSpec,
    MixtureSpec,
    SimSample,
    default_mixture,
    density_grid,
    draw_sample,
    standardize_mixture,
    varsigma,
)
from .mc import (
    CSV_HEADER,
    McConfig,
    McDraws,
    McSummaryRow,
    decompositions_to_csv,
    metadata,
    parse_config,
    rows_to_csv,
    run_decompositions,
    run_mc,
    simulate_draws,
    summarize,
)
from .rng import GENERATOR_NAME, rep_seed

__all__ = [
    "CSV_HEADER",
    "DEFAULT_MIXTURES",
    "DgpSpec",
    "GENERATOR_NAME",
    "McConfig",
    "McDraws",
    "McSummaryRow",
    "MixtureSpec",
    "SimSample",
    "decompositions_to_csv",
    "default_mixture",
    "density_grid",
    "draw_sample",
    "metadata",
    "parse_config",
    "rep_seed",
    "rows_to_csv",
    "run_decompositions",
    "run_mc",
    "simulate_draws",
    "standardize_mixture",
    "summarize",
    "varsigma",
]
