"""Limited gradient descent: learning with noisy labels without a clean
validation set, by monitoring an artificial reverse pattern."""

from .data import (
    ASYMMETRIC,
    SYMMETRIC,
    Dataset,
    NoiseSpec,
    ReverseSplit,
    SynthSpec,
    default_flip_map,
    inject_noise,
    label_shift,
    load_idx,
    make_reverse_split,
    synth_gaussian,
)
from .errors import (
    CensusInvalidError,
    ConfigurationError,
    DegenerateRunError,
    IdxFormatError,
    InfeasibleConfigError,
    LGDError,
    OracleUnavailableError,
)
from .estimator import LGDClassifier
from .harness import (
    ExperimentConfig,
    IdxSource,
    RunSummary,
    ScaleExpResult,
    ScaleExpSpec,
    SynthSource,
    emit_results,
    run_noise_experiment,
    run_scale_experiment,
)
from .lgd import (
    Checkpoint,
    EpochRecord,
    LGDConfig,
    LoRTrace,
    NoiseDeclaration,
    RelabelConfig,
    compute_lor,
    lgd_relabel_train,
    lgd_train,
    read_trace_csv,
    relabel,
    write_trace_csv,
)
from .nn import (
    LossSpec,
    MixupSpec,
    TrainHyper,
    accuracy,
    backward,
    dropout_mask,
    forward,
    init_params,
    load_params,
    loss,
    mixup_batch,
    predict,
    save_params,
    sgd_step,
)
from .theory import (
    BoundsQuery,
    FeasibilityReport,
    PatternCensus,
    asymmetric_beta_bound_delta,
    asymmetric_feasible,
    check_config,
    expected_true_after_shift,
    pattern_census_asymmetric,
    pattern_census_symmetric,
    simulate_census_asymmetric,
    simulate_census_symmetric,
    symmetric_beta_bound,
    symmetric_beta_bound_delta,
    symmetric_eta_bound,
)

__version__ = "0.1.0"
