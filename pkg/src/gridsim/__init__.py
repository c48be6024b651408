"""Truncated-Fock simulation of grid (GKP-type) bosonic codes under sBs error correction."""

from .errors import (
    ConfigError,
    ConstructionQualityError,
    FitFailureError,
    GridSimError,
    InvalidDimensionError,
    LayoutMismatchError,
    MeasurementUnderflowError,
    NumericRangeError,
    TruncationWarning,
)
from .fock import (
    DensityMatrix,
    OperatorMatrix,
    QuantumState,
    SpaceLayout,
    annihilation,
    creation,
    displacement,
    embed,
    expectation,
    matrix_exponential,
    number,
    partial_trace,
    quadratures,
)
from .codes import (
    LATTICE_CONSTANT,
    CodeSpec,
    CodeWords,
    PhaseSpaceVector,
    code_by_name,
    construct_codewords,
    dress_finite_energy,
    dressed_expectation,
    gkp_square,
    symplectic_phase,
    tesseract,
)
from .gates import (
    AuxMeasureReset,
    AuxRotation,
    Circuit,
    CondDisplacement,
    Displacement,
    Ecd,
    ForcedJump,
    SbsTrace,
    Wait,
)
from .noise import ErrorInjection, KrausSet, NoiseModel, dephasing_channel, inject_error, loss_channel
from .circuits import (
    PauliFrame,
    encode_logical,
    gauge_update,
    logical_readout,
    run_circuit,
    sbs_round,
    sbs_schedule,
)
from .experiments import (
    characteristic_function_scan,
    isthmus_experiment,
    logical_lifetime,
    photon_loss_ensemble,
    photon_loss_signature,
    post_selection_analysis,
    stabilize_from_vacuum,
)
from .config import RunConfig, validate_config

__version__ = "0.1.0"
