"""Simulation and spin-1 tomography of two-photon, two-mode linear-optical circuits."""

__version__ = "0.1.0"

from .fock import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    ValidationError,
    eigenvalues_hermitian,
    purity,
    symmetrize,
    trace_norm,
)
from .optics import (
    BeamSplitter,
    MziElement,
    NoSolutionError,
    PhaseShifter,
    beamsplitter_unitary,
    compose,
    direction_to_settings,
    mzi_unitary,
    phase_unitary,
)
from .spin import (
    SpinDirection,
    direction_operator,
    five_directions,
    moments_from_probs,
    operator_basis,
    spin_matrices,
)
from .source import SourceParams, input_state, noisy_state, noon_state
from .tomography import (
    CountRecord,
    ProbabilityTable,
    consistency_check,
    diagnostics,
    linear_inversion,
    measurement_map,
    mle_reconstruct,
    predicted_probs,
)
from .harness import FringeScan, fit_fringe, simulate_fringe, synthesize_counts
