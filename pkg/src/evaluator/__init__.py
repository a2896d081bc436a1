"""Batch comparison and trace analysis for wpansim."""

from .batch_evaluator import BatchEvaluator, ComparisonSummary, MetricStats, RunRecord
from .trace_analyzer import analyze_trace, print_trace_analysis

__all__ = [
    "BatchEvaluator",
    "ComparisonSummary",
    "MetricStats",
    "RunRecord",
    "analyze_trace",
    "print_trace_analysis",
]
