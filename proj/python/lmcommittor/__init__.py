"""Committor functions of overdamped Langevin dynamics on point clouds."""

from ._core import (
    ConfigError,
    InvalidParameter,
    LmcError,
    NumericalError,
    ParseError,
    Potential,
    classify,
    closed_form_1d,
    embed_with_noise,
    fem_solve_1d,
    grid_solve_2d,
    knn,
    max_fiftieth_neighbor_distance,
    mc_committor,
    sample,
    solve_diffusion_map,
    solve_local_mesh,
    trace,
)

__all__ = [
    "ConfigError",
    "InvalidParameter",
    "LmcError",
    "NumericalError",
    "ParseError",
    "Potential",
    "classify",
    "closed_form_1d",
    "embed_with_noise",
    "fem_solve_1d",
    "grid_solve_2d",
    "knn",
    "max_fiftieth_neighbor_distance",
    "mc_committor",
    "sample",
    "solve_diffusion_map",
    "solve_local_mesh",
    "trace",
]
