"""Retrieval-based evaluation of query segmentation strategies."""
from .corpus import (Document, DocumentPool, FormatError, JudgmentSet, Query, QuerySet,
                     Segmentation, ValidationError)
from .engine import EngineParams, LocalEngine, PositionalIndex, build_index
from .irmetrics import MetricSpec
from .oracle import OracleResult, QvrsReport, bqv_brute_force, oracle_score, qvrs
from .quotegen import QuotedVersion, enumerate_all_partitions, generate_versions

__version__ = "0.1.0"
