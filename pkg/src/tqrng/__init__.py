"""tqrng: timing-based random bit generation, simulated end to end.

Simulates Poissonian detection-pulse trains with detector dead time and
afterpulsing, extracts random bits from the pulse timing by exact interval
comparison or by digitizing intervals with a continuous or restartable
clock, and quantifies the randomness (bias, serial autocorrelation,
entropy, Monte-Carlo pi) together with the closed-form laws the restartable
method obeys.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, ConstantSequenceError, DataFormatError,
                     InsufficientDataError, UnderpoweredRunError,
                     UnsupportedModeError)
from .events import (EventStream, HistogramBinning, IntervalHistogram,
                     SourceConfig, apply_afterpulsing, apply_dead_time,
                     coherence_time, gen_poisson_stream, interval_histogram,
                     iter_poisson_times, ks_exponential, simulate_pulses)
from .extraction import (CONTINUOUS, RESTARTABLE, BasicBitStream, BitBuffer,
                         ClockConfig, ClockedBitStream, ExtractionStats,
                         extract_basic, extract_clocked, extract_updown_counter,
                         pair_intervals)
from .analysis import (AnalysisReport, BitStats, LagCorrelation, OracleResult,
                       a_asymptotic, analyze_sharded, autocorr, bias,
                       bias_model, ent_battery, eta_asymptotic,
                       oracle_restartable, pair_probs)
from .experiments import (SweepPoint, SweepResult, SweepSpec,
                          reproduce_prototype, run_extraction_pipeline, sweep,
                          validate_bias_model, validate_dead_time_cancellation)

__all__ = [
    "__version__",
    "ConfigurationError", "ConstantSequenceError", "DataFormatError",
    "InsufficientDataError", "UnderpoweredRunError", "UnsupportedModeError",
    "EventStream", "HistogramBinning", "IntervalHistogram", "SourceConfig",
    "apply_afterpulsing", "apply_dead_time", "coherence_time",
    "gen_poisson_stream", "interval_histogram", "iter_poisson_times",
    "ks_exponential", "simulate_pulses",
    "CONTINUOUS", "RESTARTABLE", "BasicBitStream", "BitBuffer", "ClockConfig",
    "ClockedBitStream", "ExtractionStats", "extract_basic", "extract_clocked",
    "extract_updown_counter", "pair_intervals",
    "AnalysisReport", "BitStats", "LagCorrelation", "OracleResult",
    "a_asymptotic", "analyze_sharded", "autocorr", "bias", "bias_model",
    "ent_battery", "eta_asymptotic", "oracle_restartable", "pair_probs",
    "SweepPoint", "SweepResult", "SweepSpec", "reproduce_prototype",
    "run_extraction_pipeline", "sweep", "validate_bias_model",
    "validate_dead_time_cancellation",
]
