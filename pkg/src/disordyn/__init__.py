"""disordyn: ensemble-averaged dynamics of disordered 1D lattices.

Simulates the disorder-averaged state of a tight-binding particle two
ways - numerically exact averaging over unitary disorder realizations,
and a short-time Lindblad master equation whose dissipator is built from
the disorder covariance - and quantifies their agreement (purity decay,
coherence ratios, interference visibility, validity horizon).
"""

__version__ = "0.1.0"

from .continuum import (
    GridSpec,
    HarmonicCenter,
    LinearForce,
    PuritySeries,
    coherent_state,
    gaussian_state,
    harmonic_revival_check,
    linear_dephasing_check,
    offset_ratio,
    split_step_evolve,
)
from .disorder import (
    AndersonBox,
    CorrelationProfile,
    CustomCovariance,
    DisorderSpec,
    GaussianCorrelated,
    correlation,
    correlation_profile,
    covariance_matrix,
    empirical_covariance,
    sample_realization,
)
from .ensemble import EnsembleResult, TimeGrid, ensemble_average, evolve_unitary
from .errors import (
    ConfigError,
    DimensionError,
    DisordynError,
    FactorizationError,
    InvariantViolation,
    NumericalError,
    ResolutionError,
    UndefinedVisibilityError,
    UnsupportedVariantError,
)
from .lindblad import (
    CptpReport,
    DissipatorSpec,
    LocalizationProfile,
    MasterEquationResult,
    boonpan_localization_function,
    default_q_grid,
    dephasing_closed_form,
    localization_function,
    localization_profile,
    momentum_transfer_distribution,
    propagate_master_equation,
    second_moment_dissipator,
    tmax_estimate,
)
from .model import (
    DensityMatrix,
    DisorderRealization,
    Hamiltonian,
    LatticeSpec,
    StateVector,
    build_average_hamiltonian,
    build_realization_hamiltonian,
    double_slit_state,
    gaussian_wavepacket,
    superposition_state,
)
from .observables import (
    ComparisonReport,
    RatioMap,
    bz_grid,
    coherence_ratio_map,
    edge_leakage,
    fringe_period,
    fringe_window,
    momentum_distribution,
    purity,
    purity_series,
    visibility,
)

__all__ = [name for name in dir() if not name.startswith("_")]
