from .domain import DomainSpace, boundary_distance
from .mesh import MeshGraph, build_mesh, length_distance, space_graph
from .metric import (FiniteMetricSpace, MetricValidation, MetricViolation,
                     validate_metric)
