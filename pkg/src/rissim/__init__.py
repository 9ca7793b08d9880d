"""Deterministic channel simulation for multi-type reconfigurable intelligent surfaces."""

__version__ = "0.1.0"

from rissim.errors import (  # noqa: F401
    ConfigError,
    DegenerateGeometry,
    HalfSpaceMismatch,
    IllConditioned,
    NonCardinalAzimuth,
    NonTransversal,
    NumericSingularity,
    RisSimError,
    SchemaError,
    SingularAngle,
    SingularSynthesis,
    UnnormalizedWeights,
)
