"""qfep: quantum systems as Bayesian agents.

Seedable desk-scale simulator of bipartite qubit systems exchanging bits
across a holographic screen, with quantum reference frames as classifier
programs, Markov-kernel learning driven by prediction-error
minimization, and nonclassicality diagnostics (joint-distribution
feasibility, CHSH, Leggett-Garg).
"""

from .agent import (
    Agent,
    AlignmentScenario,
    CompositeEnvironment,
    GroupoidClock,
    LearningConfig,
    MemoryRecord,
    NoiseDecomposition,
    ScriptedEnvironment,
    Trajectory,
    Transition,
    coarse_grain,
    compose_transitions,
    cycle_environment,
    cycle_kernel,
    fep_minimize,
    flip_kernel,
    asymmetric_kernel,
    hybrid_alignment_environment,
    kl_bits,
    make_agent,
    max_records,
    memory_capacity,
    noise_decomposition,
    prediction_error,
    read_compare_write,
    sector_relation,
    surprisal_bits,
    vfe,
)
from .channel import (
    BayesNet,
    Classifier,
    Context,
    ContextFamily,
    DiagramCCD,
    FeasibilityResult,
    Infomorphism,
    ProbClassifier,
    bayes_posterior,
    ccd_commutes,
    chain_joint,
    check_infomorphism,
    classifier_to_kernel,
    compose_infomorphisms,
    export_context_family,
    family_from_joint,
    joint_feasible,
    kernel_to_classifier,
    marginal,
    parse_context_family,
)
from .errors import (
    ConditioningOnNullError,
    IdentificationFailureWarning,
    InsufficientDataError,
    InvalidPartitionError,
    InvalidWeightsError,
    LandauerViolationError,
    MemoryFullError,
    QfepError,
    ResourceLimitError,
    ThermodynamicStarvationError,
    UnsupportedObservableError,
)
from .harness import RunConfig, SCENARIOS, ingest_contexts, run
from .inequalities import (
    AsymptoticConfig,
    AsymptoticReport,
    CHSHConfig,
    LGConfig,
    asymptotic_experiment,
    chsh,
    chsh_correlators,
    leggett_garg_correlators,
    leggett_garg_k3,
    measurement_context_family,
    pr_box_family,
    precession_config,
    singlet,
    standard_chsh_axes,
)
from .kernels import (
    MarkovKernel,
    bit_alphabet,
    estimate_kernel,
    kernel_distance,
    learn_sequence,
    learn_update,
    simulate_chain,
)
from .qrf import (
    QRF,
    ClassifierProgram,
    ContextPair,
    ProgramNode,
    codeployable,
    context_switch,
    implements_check,
    make_qrf,
    observable_of,
    permutation_dynamics,
    qrf_from_config,
    qrfs_commute,
)
from .rng import stream
from .screen import (
    HBAR,
    K_B,
    LN2,
    BasisAxis,
    InteractionSpec,
    QubitScreen,
    SectorMap,
    TranscriptEntry,
    build_interaction,
    decompose_sectors,
    dissipation_time,
    export_transcript,
    landauer_cost,
    min_bit_time,
    prepare_bit,
    read_bit,
    sector_energy,
    validate_transcript,
)
from .states import (
    DensityMatrix,
    HermitianOperator,
    SchmidtDecomposition,
    StateVector,
    axis_observable,
    born_measure,
    embed_operator,
    entanglement_entropy,
    evolve,
    partial_trace,
    schmidt,
    tensor,
)

__version__ = "0.1.0"
