"""Analytic symplectic embeddings built from exactly-symplectic primitive factors."""

from shadowlab.embeddings.composition import (
    EmbeddingComposition,
    certify_domain_radius,
    sample_ball,
)
from shadowlab.embeddings.path import (
    AnalyticPath,
    PathFactor,
    RescaledFamily,
    path_at,
    rescaled_family,
)
from shadowlab.embeddings.polynomials import Polynomial
from shadowlab.embeddings.primitives import PrimitiveKind, PrimitiveMap

__all__ = [
    "AnalyticPath",
    "EmbeddingComposition",
    "PathFactor",
    "Polynomial",
    "PrimitiveKind",
    "PrimitiveMap",
    "RescaledFamily",
    "certify_domain_radius",
    "path_at",
    "rescaled_family",
    "sample_ball",
]
