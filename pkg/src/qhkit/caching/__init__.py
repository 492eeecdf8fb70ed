from .metric import MetricCache
