"""Decoherent discrete-time quantum walks on the line.

Two independent computation routes for position moments of a walker evolved
by a translation-invariant Kraus channel:

* ``simulator`` -- brute-force density-matrix evolution (the oracle),
* ``moments`` -- exact momentum-space transfer-matrix engine,

plus closed-form diffusion constants for the broken-line noise model in
``brokenline`` and channel builders / serialization in ``channels``.
"""

from .brokenline import (
    DiffusionResult,
    contraction_block_closed_form,
    critical_p,
    diffusion_closed_form,
    diffusion_integral,
    diffusion_prefactor,
    diffusion_slope_estimate,
    dispersion_matrix_closed_form,
    drift_matrix_closed_form,
    sweep,
    transfer_matrix_closed_form,
    write_sweep_csv,
)
from .channels import (
    HADAMARD,
    BrokenLineParams,
    KrausTerm,
    WalkChannel,
    build_broken_line,
    build_coherent,
    build_coin_channel,
    channel_from_dict,
    channel_to_dict,
    coin_matrix_at_k,
    coin_matrix_derivative_at_k,
    completeness_residual,
    dephasing_channel,
    is_coin_channel,
    load_channel,
    save_channel,
    validate_completeness,
)
from .errors import (
    BallisticRegimeError,
    BracketingError,
    CompletenessError,
    DomainError,
    DQWalkError,
    InvalidCoinKrausError,
    NonRealMomentError,
    NonUnitaryCoinError,
    NotACoinChannelError,
    NotContractingError,
    PhaseConstraintError,
    QuadratureTooCoarseWarning,
    SingularDenominatorError,
    UnnormalizedCoinError,
)
from .moments import (
    MomentSeries,
    TransferGrids,
    asymptotic_first_moment,
    default_node_count,
    diffusion_from_slope,
    dispersion_matrix,
    drift_matrix,
    drift_matrix_adjoint,
    first_moment,
    j_term,
    moment_series,
    moment_series_from_grids,
    momentum_grid,
    second_moment,
    second_moment_coin_specialized,
    transfer_grids,
    transfer_matrix,
)
from .pauli import COIN_PRESETS, PAULI, coin_state, from_pauli, to_pauli
from .simulator import (
    DensityState,
    evolve,
    init_state,
    moment_direct,
    position_distribution,
    purity,
    step,
    variance_direct,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
