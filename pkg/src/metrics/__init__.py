from .collector import Bucket, FrameLedger, MetricsCollector, MetricSet, MetricsReport

__all__ = ["Bucket", "FrameLedger", "MetricsCollector", "MetricSet", "MetricsReport"]
