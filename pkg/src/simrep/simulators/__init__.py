from .abm import ABMParams, abm_simulate, initial_grid, step_grid
from .fba import (
    FbaInfeasible,
    FbaUnbounded,
    FluxNetwork,
    fba_knockout,
    fba_solve,
    load_toy_network,
    objective_value,
)
from .lv import LVParams, lv_simulate, lv_simulate_batch, rk4_trajectory
from .output import SimulationError, SimulationOutput
from .sampling import (
    MonteCarloResult,
    ParamRanges,
    abm_default_ranges,
    fba_default_ranges,
    gen_default_ranges,
    lv_default_ranges,
    monte_carlo,
    sample_params,
)
from .testdata import gen_testdata, lift_2d

__all__ = [
    "ABMParams", "FbaInfeasible", "FbaUnbounded", "FluxNetwork", "LVParams",
    "MonteCarloResult", "ParamRanges", "SimulationError", "SimulationOutput",
    "abm_default_ranges", "abm_simulate", "fba_default_ranges", "fba_knockout",
    "fba_solve", "gen_default_ranges", "gen_testdata", "initial_grid",
    "lift_2d", "load_toy_network", "lv_default_ranges", "lv_simulate",
    "lv_simulate_batch", "monte_carlo", "objective_value", "rk4_trajectory",
    "sample_params", "step_grid",
]
