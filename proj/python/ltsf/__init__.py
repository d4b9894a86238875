"""Linear long-horizon time-series forecasting."""

from ._ltsf import (
    ConfigError,
    LoadError,
    LtsfError,
    Model,
    NumericError,
    ParseError,
    ShapeError,
    WindowError,
    cell_seed,
    decompose,
    gelu,
    load_csv,
    matmul,
    moving_average,
    parse_csv,
    rng_u64,
    run_grid,
    split_lengths,
    splitmix64_mix,
)

__all__ = [
    "ConfigError",
    "LoadError",
    "LtsfError",
    "Model",
    "NumericError",
    "ParseError",
    "ShapeError",
    "WindowError",
    "cell_seed",
    "decompose",
    "gelu",
    "load_csv",
    "matmul",
    "moving_average",
    "parse_csv",
    "rng_u64",
    "run_grid",
    "split_lengths",
    "splitmix64_mix",
]
