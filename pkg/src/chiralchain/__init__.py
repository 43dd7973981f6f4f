"""chiralchain: excitation transport in weakly driven chiral-coupled atomic chains.

Modules
-------
model      chain geometry, direction-resolved coupling, interaction matrix
dynamics   weak-drive amplitude evolution and steady states
transport  left/right population imbalance, sweeps, disorder ensembles
lindblad   exact density-matrix oracle for small chains
config     run configuration parsing and merging
cli        command-line entry point
"""

from .model import (
    ChainGeometry,
    ChiralCoupling,
    DriveParams,
    FluctuationSpec,
    InteractionMatrix,
    build_geometry,
    build_interaction_matrix,
    chiral_kernel_1d,
    rddi_1d,
    rddi_3d,
)
from .dynamics import (
    AmplitudeState,
    IntegrationError,
    NoSteadyState,
    SaturationReport,
    SteadyStateSolution,
    evolve,
    steady_state,
    two_atom_steady,
    validity_check,
)
from .transport import (
    EnsembleStats,
    SweepGrid,
    SweepRow,
    TransportResult,
    UndefinedTransportError,
    derive_sample_seed,
    fluctuation_ensemble,
    sweep,
    transport_metric,
    transport_point,
    two_atom_transport,
)
from .lindblad import (
    ComparisonReport,
    ComparisonRow,
    DensityMatrix,
    LiouvillianSpec,
    NoUniqueSteadyState,
    build_liouvillian,
    compare_with_amplitude_model,
    evolve_dm,
    excited_populations,
    steady_state_dm,
)

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, load_config_file, parse_config  # noqa: E402

__all__ = [
    "__version__",
    # config
    "ConfigError", "RunConfig", "load_config_file", "parse_config",
    # model
    "ChainGeometry", "ChiralCoupling", "DriveParams", "FluctuationSpec",
    "InteractionMatrix", "build_geometry", "build_interaction_matrix",
    "chiral_kernel_1d", "rddi_1d", "rddi_3d",
    # dynamics
    "AmplitudeState", "IntegrationError", "NoSteadyState", "SaturationReport",
    "SteadyStateSolution", "evolve", "steady_state", "two_atom_steady",
    "validity_check",
    # transport
    "EnsembleStats", "SweepGrid", "SweepRow", "TransportResult",
    "UndefinedTransportError", "derive_sample_seed", "fluctuation_ensemble",
    "sweep", "transport_metric", "transport_point", "two_atom_transport",
    # lindblad
    "ComparisonReport", "ComparisonRow", "DensityMatrix", "LiouvillianSpec",
    "NoUniqueSteadyState", "build_liouvillian", "compare_with_amplitude_model",
    "evolve_dm", "excited_populations", "steady_state_dm",
]
