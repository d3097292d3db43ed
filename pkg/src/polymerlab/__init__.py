"""Ground states, scale decompositions, and scaling-law statistics for a
lattice interface pinned by independent columnar Brownian potentials."""

from .config import ExperimentConfig, load_config
from .constructions import CoarseField, greedy_profile, two_scale_competitor
from .counting import bound_check, count_ball, count_bins, minimal_c0
from .energy import (
    EnergyBreakdown,
    GreenFunction,
    HeightConfig,
    dirichlet,
    dirichlet_form,
    dirichlet_p,
    field_term,
    green_function,
    mass,
    total_energy,
)
from .minimize import (
    BandExhaustedError,
    FrontierEstimate,
    GroundState,
    MinimizeOptions,
    envelope_minimizers,
    lagrangian_frontier,
    minimize,
    minimize_pair,
)
from .multiscale import ScaleDecomposition, coarsen, component, decompose, per_scale_energy
from .potential import PotentialField, ZeroField, mix_seed
from .stats import (
    OrliczEstimate,
    SampleSet,
    bootstrap_norm,
    comparison_suite,
    linearization_gap,
    ols,
    orlicz_norm,
    trend_not_positive,
)
from .sweep import SweepRecord, SweepResult, mc_sweep, modulus_table, scaling_report

__version__ = "0.1.0"
