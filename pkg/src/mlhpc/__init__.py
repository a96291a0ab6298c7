"""Tooling for HPC deep-learning training benchmark submissions.

Parses structured training logs, checks submission trees for compliance,
computes official scores, decomposes time to solution and renders scaling
analyses.
"""

from .errors import MlhpcError
from .mllog import EventType, LogEvent, RunLog, parse_log_line, emit_log_line, read_run_log
from .submission import COSMOFLOW, DEEPCAM, BenchmarkSpec, load_submission
from .compliance import check_tree
from .scoring import official_score, score_tree

__all__ = [
    "MlhpcError", "EventType", "LogEvent", "RunLog", "parse_log_line", "emit_log_line", "read_run_log",
    "COSMOFLOW", "DEEPCAM", "BenchmarkSpec", "load_submission", "check_tree", "official_score", "score_tree",
]
__version__ = "0.1.0"
