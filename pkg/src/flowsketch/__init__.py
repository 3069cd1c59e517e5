"""Two-tier streaming flow sketch with a pluggable flow classifier.

Large flows live exactly in a bucketized key-value heavy part protected by
probabilistic lock flags; small flows live approximately in a Count-Min light
part (or an unbiased key-value structure in hierarchical mode). Supports flow
size queries, heavy hitters, and hierarchical heavy hitters, plus a
trace-replay CLI with analytic verifiers.
"""

from .analysis import (
    AnalysisInputs,
    MetricReport,
    OvercountBound,
    cms_full_accuracy_prob,
    compute_metrics,
    lock_flag_mc,
    overcount_bound,
    tiered_full_accuracy_prob,
)
from .classifier import (
    ClassificationError,
    NoisyOracle,
    OracleBackend,
    PredictionFileBackend,
    RemoteBackend,
    StaticBackend,
    binarize,
    soft_label,
    tokenize_header,
)
from .cms import CountMinSketch
from .slots import SlotSketch, Hierarchy, hhh_from_table, merge_tables
from .harness import ExperimentSpec, exact_counts, run_experiment, write_report
from .heavy import HeavyCell, HeavyTable, lock_rule, lock_update
from .model import (
    ConfigError,
    FlowKey,
    InputError,
    PacketRecord,
    SketchConfig,
    cell_cost_bytes,
    make_fingerprint,
    memory_budget_split,
    pad_to_even,
)
from .sketch import TieredSketch
from .traces import ZipfParams, generate_zipf, ingest_packet_dump, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "AnalysisInputs", "MetricReport", "OvercountBound", "cms_full_accuracy_prob",
    "compute_metrics", "lock_flag_mc", "overcount_bound", "tiered_full_accuracy_prob",
    "ClassificationError", "NoisyOracle", "OracleBackend", "PredictionFileBackend",
    "RemoteBackend", "StaticBackend", "binarize", "soft_label", "tokenize_header",
    "CountMinSketch", "SlotSketch", "Hierarchy", "hhh_from_table", "merge_tables",
    "ExperimentSpec", "exact_counts", "run_experiment", "write_report",
    "HeavyCell", "HeavyTable", "lock_rule", "lock_update",
    "ConfigError", "FlowKey", "InputError", "PacketRecord", "SketchConfig",
    "cell_cost_bytes", "make_fingerprint", "memory_budget_split", "pad_to_even",
    "TieredSketch", "ZipfParams", "generate_zipf", "ingest_packet_dump",
    "read_trace", "write_trace",
]
