"""Metric jets, curvature tensors and covariant derivatives at a point."""

from .charts import BUILTIN_METRICS, Chart, finite_difference_jet
from .curvature import christoffel, covariant_derivatives, curvature, orthonormal_frame
from .jets import CurvaturePack, MetricJet, OneFormJet
from .taylor import Taylor

__all__ = [
    "BUILTIN_METRICS", "Chart", "CurvaturePack", "MetricJet", "OneFormJet", "Taylor",
    "christoffel", "covariant_derivatives", "curvature", "finite_difference_jet", "orthonormal_frame",
]
