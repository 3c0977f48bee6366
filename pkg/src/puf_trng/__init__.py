"""Desk-scale model of a PUF-fed shift-register true random number
generator, with the statistical batteries used to validate it."""

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    InsufficientLengthError,
    ParameterError,
    PufTrngError,
    StarvationError,
)
from .puf import (
    DualArbiterOutcome,
    PufInstance,
    PufParameters,
    StageDelays,
    arbiter,
    dual_arbiter_eval,
    feature_transform,
    load_instance,
    model_weights,
    propagate,
    sample_puf,
    save_instance,
)
from .generator import (
    DEFAULT_TAPS,
    BitStream,
    GaussianNoiseSource,
    GenerationStats,
    GeneratorConfig,
    RegisterState,
    TapSet,
    config_from_dict,
    config_to_dict,
    generate,
    lfsr_feedback,
    lfsr_period,
    lfsr_step,
    nfsr_step,
    register_state_from_seed,
)
from .bitio import load_bitstream, pack_bits, save_bitstream, unpack_bits
from .nist import (
    TestOutcome,
    approximate_entropy,
    as_bit_array,
    berlekamp_massey,
    binary_matrix_rank,
    block_frequency,
    cumulative_sums,
    dft_spectral,
    frequency_monobit,
    gf2_rank,
    linear_complexity,
    longest_run_of_ones,
    runs,
    serial,
)
from .pvalues import erfc, igamc, normal_cdf
from .battery import (
    BatteryConfig,
    BatteryReport,
    ProportionResult,
    SkippedTest,
    proportion_lower_bound,
    run_battery,
    split_sequences,
)
from .ent import EntReport, ent_metrics, ent_verdict
from .selftest import run_selftest

__all__ = [
    "__version__",
    "PufTrngError", "ParameterError", "DimensionError", "StarvationError",
    "InsufficientLengthError",
    "PufParameters", "StageDelays", "PufInstance", "DualArbiterOutcome",
    "sample_puf", "propagate", "feature_transform", "model_weights",
    "arbiter", "dual_arbiter_eval", "save_instance", "load_instance",
    "TapSet", "DEFAULT_TAPS", "RegisterState", "GeneratorConfig",
    "GenerationStats", "BitStream", "GaussianNoiseSource",
    "register_state_from_seed", "lfsr_feedback", "lfsr_step", "nfsr_step",
    "generate", "lfsr_period", "config_to_dict", "config_from_dict",
    "pack_bits", "unpack_bits", "save_bitstream", "load_bitstream",
    "TestOutcome", "as_bit_array", "berlekamp_massey", "gf2_rank",
    "frequency_monobit", "block_frequency", "cumulative_sums", "runs",
    "longest_run_of_ones", "binary_matrix_rank", "dft_spectral",
    "approximate_entropy", "serial", "linear_complexity",
    "erfc", "igamc", "normal_cdf",
    "BatteryConfig", "BatteryReport", "ProportionResult", "SkippedTest",
    "proportion_lower_bound", "run_battery", "split_sequences",
    "EntReport", "ent_metrics", "ent_verdict",
    "run_selftest",
]
