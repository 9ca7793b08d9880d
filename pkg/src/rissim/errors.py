"""Exception hierarchy.

Numeric singularities (poles of the impedance model, ill-conditioned boundary
systems) derive from :class:`NumericSingularity` so the command line can map
them to a dedicated exit code.
"""


class RisSimError(Exception):
    """Base class for all package errors."""


class NumericSingularity(RisSimError, ArithmeticError):
    """A formula was evaluated at (or numerically next to) a pole.

    ``index`` optionally carries the flat element/sample index of the first
    offending entry when the evaluation was vectorised.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularSynthesis(NumericSingularity):
    """Desired coefficients sit on a pole of the impedance synthesis."""


class SingularAngle(NumericSingularity):
    """Closed-form actual coefficient denominator vanishes at this angle."""


class IllConditioned(NumericSingularity):
    """Boundary-condition system is numerically singular."""


class NonCardinalAzimuth(RisSimError, ValueError):
    """The Type 2 closed form only holds at azimuths 0, pi/2, pi, 3pi/2."""


class NonTransversal(RisSimError, ValueError):
    """Plane wave whose field is not perpendicular to its wave vector."""


class HalfSpaceMismatch(RisSimError, ValueError):
    """Observation direction lies on the wrong side of the radiating currents."""


class DegenerateGeometry(RisSimError, ValueError):
    """Coincident endpoints or an endpoint lying on a wall."""


class SchemaError(RisSimError, ValueError):
    """Malformed path-record file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnnormalizedWeights(RisSimError, ValueError):
    """Transmit weights do not have unit total power."""


class ConfigError(RisSimError, ValueError):
    """Invalid scenario configuration."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = str(path)
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line
