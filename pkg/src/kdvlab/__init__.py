"""kdvlab: a pseudospectral laboratory for small-data KdV dispersive decay.

Numerically exercises, at desk scale, the dispersive behavior of
u_t + u_xxx - 6 u u_x = 0 on a large periodic box: exact linear propagation
with Airy-kernel oracles, region-weighted decay envelopes, a fourth-order
exponential integrator with conservation monitors, Besov / vector-field norm
diagnostics, the linearized flow with its modified energy, the negative
spectrum of -d^2 + u with soliton forecasts, and Painleve II self-similar
profiles.
"""

from .airy import AiryEvaluator, airy, airy_derivative
from .analysis import (
    LinearizedResult,
    LinearizedState,
    apply_LNL,
    besov_norm,
    evolve_linearized,
    hneg_half_norm,
    modified_energy,
)
from .errors import (
    BandEmptyError,
    BlowupError,
    ContaminationError,
    KdvLabError,
    MultiplierDomainError,
    NonzeroMeanError,
    ResolutionError,
    SolverError,
    ValidationError,
)
from .linear import (
    airy_kernel,
    airy_kernel_field,
    apply_L,
    boundary_mass_fraction,
    envelope_suprema,
    linear_decay_report,
    propagate_linear,
    region_masks,
    time_weight,
    window_mask,
)
from .reports import NormReport, SolitonForecast, SpectrumReport
from .schrodinger import (
    bargmann_bound,
    counting_check,
    dirac_limit_scan,
    emergence_monitor,
    multi_bump_potential,
    negative_spectrum,
    potential_from_field,
    soliton_forecast,
)
from .selfsimilar import (
    PainleveSolution,
    SelfSimilarProfile,
    miura,
    selfsimilar_field,
    selfsimilar_residual,
    solve_painleve_ii,
)
from .solver import (
    ConservedQuantities,
    EvolveResult,
    SimState,
    SolverControls,
    Trajectory,
    conserved,
    evolve,
    recommend_grid,
    soliton,
    step,
)
from .spectral import (
    Field,
    Grid,
    MultiplierSymbol,
    antiderivative,
    apply_multiplier,
    dealias,
    derivative,
    dyadic_project,
    fractional_derivative,
    hilbert_transform,
    linear_propagator,
    smooth_filter,
    snap_to_dyadic,
)

__version__ = "0.1.0"
