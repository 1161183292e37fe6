"""Physical realizability and coherent feedback analysis for linear quantum systems.

The package models open quantum harmonic oscillator networks at the level of
their state-space matrices: realizability certificates (the algebraic
conditions for a model to describe an actual quantum system), frequency-domain
characterizations (all-pass and signature-unitary transfer functions), loop
composition with coherent controllers, controller noise synthesis, and the
Kalman-filter facts that make static controllers LQG-optimal and the trivial
controller H-infinity optimal for annihilation-operator plants.
"""

from .errors import (
    DesignError,
    DimensionError,
    DomainError,
    FileFormatError,
    GenerationError,
    InfiniteNormError,
    InstabilityError,
    NotAugmentableError,
    NotRealizableError,
    SingularityError,
    WellPosednessError,
)
from .linalg import (
    DoubledMatrix,
    PsdSplit,
    CareSolution,
    conj_swap,
    dagger,
    delta_build,
    doubling_permutation,
    is_doubled,
    psd_split,
    signature_matrix,
    solve_care_hermitian,
    solve_lyapunov_hermitian,
    solve_sylvester,
)
from .systems import (
    AnnihilationQSys,
    GeneralQSys,
    HamiltonianCoupling,
    PrVerdict,
    check_pr_annihilation,
    check_pr_general,
    extract_params,
    random_pr_system,
    realize_annihilation,
    realize_general,
)
from .transfer import (
    NormResult,
    StateSpaceTF,
    TransferCheck,
    default_frequency_grid,
    h2_norm,
    hinf_norm,
    jj_unitary_check,
    lossless_br_check,
    minimal_realization,
    tf_eval,
)
from .feedback import (
    AugmentedClosedLoop,
    ClosedLoop,
    ControllerModel,
    CostOutput,
    PlantAugmentation,
    PlantModel,
    SynthesisResult,
    augment_controller,
    augment_plant,
    close_augmented_loop,
    close_loop,
    complete_static_pr,
    gamma_cl,
    modified_forms,
    random_pr_plant,
    static_controller,
    synth_noise_annihilation,
    synth_noise_general,
    trivial_controller,
)
from .coherent import (
    KalmanResult,
    TheoremReport,
    kalman_design,
    lqg_cost,
    random_challengers,
    verify_static_lqg,
    verify_trivial_hinf,
    verify_zero_gain,
)
from .fileio import LoadedFile, load_system, model_to_document, save_system

__version__ = "0.1.0"

__all__ = [
    "AnnihilationQSys",
    "AugmentedClosedLoop",
    "CareSolution",
    "ClosedLoop",
    "ControllerModel",
    "CostOutput",
    "DesignError",
    "DimensionError",
    "DomainError",
    "DoubledMatrix",
    "FileFormatError",
    "GeneralQSys",
    "GenerationError",
    "HamiltonianCoupling",
    "InfiniteNormError",
    "InstabilityError",
    "KalmanResult",
    "LoadedFile",
    "NormResult",
    "NotAugmentableError",
    "NotRealizableError",
    "PlantAugmentation",
    "PlantModel",
    "PrVerdict",
    "PsdSplit",
    "SingularityError",
    "StateSpaceTF",
    "SynthesisResult",
    "TheoremReport",
    "TransferCheck",
    "WellPosednessError",
    "augment_controller",
    "augment_plant",
    "check_pr_annihilation",
    "check_pr_general",
    "close_augmented_loop",
    "close_loop",
    "complete_static_pr",
    "conj_swap",
    "dagger",
    "default_frequency_grid",
    "delta_build",
    "doubling_permutation",
    "extract_params",
    "gamma_cl",
    "h2_norm",
    "hinf_norm",
    "is_doubled",
    "jj_unitary_check",
    "kalman_design",
    "load_system",
    "lossless_br_check",
    "lqg_cost",
    "minimal_realization",
    "model_to_document",
    "modified_forms",
    "psd_split",
    "random_challengers",
    "random_pr_plant",
    "random_pr_system",
    "realize_annihilation",
    "realize_general",
    "save_system",
    "signature_matrix",
    "solve_care_hermitian",
    "solve_lyapunov_hermitian",
    "solve_sylvester",
    "static_controller",
    "synth_noise_annihilation",
    "synth_noise_general",
    "tf_eval",
    "trivial_controller",
    "verify_static_lqg",
    "verify_trivial_hinf",
    "verify_zero_gain",
]
