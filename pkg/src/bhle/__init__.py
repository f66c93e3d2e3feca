"""Morawetz multiplier construction and localized-energy toolkit for
higher-dimensional spherically symmetric black hole exteriors.

Subpackages:

* geometry    -- lapse, log coordinate h, tortoise coordinate, LE weights
* multiplier  -- the piecewise-smoothed radial multiplier f and l(f)
* verifier    -- inequality scans (the four radial regions) and the budget
* hardy       -- Hardy density rho and the time-boundary coefficient
* evolution   -- mode-decomposed wave evolution with energy/LE monitors
* reporting   -- deterministic JSON/CSV report emission
* cli         -- command-line entry point
"""

__version__ = "0.1.0"

from .geometry import (
    BackgroundParams,
    DomainError,
    RadialGrid,
    grid_from_h,
    grid_uniform_h,
    grid_uniform_logr,
    h_of_r,
    lapse,
    le_coefficients,
    photon_sphere_radius,
    r_of_theta,
    sphere_eigenvalue,
    tortoise,
    tortoise_of_theta,
    y_of_r,
)
from .multiplier import (
    MultiplierParams,
    MultiplierProfile,
    a_eval,
    f_eval,
    f_prime,
    f_second_jump,
    l_f_closed,
    l_operator_oracle,
    l_operator_oracle_precise,
    lg_closed,
)
from .verifier import (
    CASE_IDS,
    CaseVerdict,
    budget_submargins,
    region_grid,
    verify_all,
    verify_budget,
    verify_case,
)
from .hardy import (
    GaussianBump,
    HardyProfile,
    hardy_ratio,
    rho,
    rho_prime,
    rho_weight,
    tabulate_hardy,
    time_boundary_check,
    time_coefficient,
)
from .evolution import (
    EnergyLeSeries,
    EvolutionConfig,
    InstabilityError,
    ModeState,
    WaveOperator,
    base_identity_residual,
    energy_of_mode,
    evolve,
    initial_state,
    le_increment,
    reduce_wave_operator,
    step,
)
