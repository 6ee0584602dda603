"""Collective light-matter response of sub-wavelength Rydberg-atom arrays.

Natural units throughout: the bare e-state linewidth Gamma, the transition
wavelength lambda and the speed of light are all 1 (see ``superatom.units``).
"""

from .errors import ConfigError, NumericalError, ResourceCapError, SuperatomError
from .lattice import (
    ArrayGeometry,
    BraggReport,
    ModeVector,
    build_disc_array,
    gaussian_mode,
    uniform_mode,
    validate_bragg,
)
from .coupling import (
    CouplingMatrix,
    collective_parameters,
    coupling_matrix,
    greens_tensor,
    load_coupling,
    save_coupling,
)
from .steady_state import (
    DriveParams,
    EffectiveParams,
    LinearSpectrum,
    SteadyState,
    at_resonances,
    blockade_radius,
    reduce_two_level,
    resonant_delta_e,
    solve_single_excitation_2level,
    solve_single_excitation_3level,
    spectrum_2level,
    spectrum_2level_mapped,
    spectrum_3level,
)
from .atomdata import RydbergState, RydbergTable, load_states
from .interferometer import (
    TwoSidedSpectrum,
    WaveguideFit,
    beta_opt,
    displacement_signal,
    effective_emitter_fit,
    recombine_displaced,
    symmetric_port_transform,
    two_sided_spectrum,
)
from .two_photon import (
    InteractionModel,
    PairAmplitudes,
    g2_equal_time,
    pair_steady_state,
    pair_steady_state_3level,
)
from .pulses import (
    PulseSpec,
    TwoPhotonGrid,
    bound_state_decay_rate,
    extract_bound_state,
    linear_transfer,
    overlap_infidelity,
    propagate_weak_pulse,
)
from .chiral import (
    EmitterChain,
    GateResult,
    SortingResult,
    chain_scatter,
    ns_gate_circuit,
    optimize_sorting,
    sorting_metrics,
    time_reversal_overlap,
)
from .protocols import (
    ControlRamp,
    RetrievalResult,
    StorageState,
    calibrate_pi_area,
    eit_retrieval,
    pi_pulse_storage,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BraggReport",
    "ConfigError",
    "ControlRamp",
    "CouplingMatrix",
    "DriveParams",
    "EffectiveParams",
    "EmitterChain",
    "GateResult",
    "InteractionModel",
    "LinearSpectrum",
    "ModeVector",
    "NumericalError",
    "PairAmplitudes",
    "PulseSpec",
    "ResourceCapError",
    "RetrievalResult",
    "RydbergState",
    "RydbergTable",
    "SortingResult",
    "SteadyState",
    "StorageState",
    "SuperatomError",
    "TwoPhotonGrid",
    "TwoSidedSpectrum",
    "WaveguideFit",
    "at_resonances",
    "beta_opt",
    "blockade_radius",
    "bound_state_decay_rate",
    "build_disc_array",
    "calibrate_pi_area",
    "chain_scatter",
    "collective_parameters",
    "coupling_matrix",
    "displacement_signal",
    "effective_emitter_fit",
    "eit_retrieval",
    "extract_bound_state",
    "g2_equal_time",
    "gaussian_mode",
    "greens_tensor",
    "linear_transfer",
    "load_coupling",
    "load_states",
    "ns_gate_circuit",
    "optimize_sorting",
    "overlap_infidelity",
    "pair_steady_state",
    "pair_steady_state_3level",
    "pi_pulse_storage",
    "propagate_weak_pulse",
    "recombine_displaced",
    "reduce_two_level",
    "resonant_delta_e",
    "save_coupling",
    "solve_single_excitation_2level",
    "solve_single_excitation_3level",
    "sorting_metrics",
    "spectrum_2level",
    "spectrum_2level_mapped",
    "spectrum_3level",
    "symmetric_port_transform",
    "time_reversal_overlap",
    "two_sided_spectrum",
    "uniform_mode",
    "validate_bragg",
    "__version__",
]
