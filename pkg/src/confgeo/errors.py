"""Exception types shared across the toolkit.

Every error raised on a user-facing code path derives from ConfgeoError so
callers (and the check runner, which must distinguish "check errored" from
"check failed") can catch one base class.
"""


class ConfgeoError(Exception):
    pass


# --- expression language ---

class ExprSyntaxError(ConfgeoError):
    """Positioned parse error. Line/column are 1-based."""

    def __init__(self, message, line, column, expected=()):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.expected = tuple(expected)


class UnknownIdentifier(ConfgeoError):
    pass


class DomainError(ConfgeoError):
    """Evaluation left the domain of a primitive (log of nonpositive real,
    division by zero, sqrt of a negative real in real mode, ...)."""


# --- charts, frames, tensors ---

class DegenerateMetric(ConfgeoError):
    pass


class SignatureMismatch(ConfgeoError):
    pass


class VarianceMismatch(ConfgeoError):
    pass


class NullSeed(ConfgeoError):
    pass


class DegenerateFlag(ConfgeoError):
    pass


class FrameNotOrthonormal(ConfgeoError):
    pass


class DimensionTooLow(ConfgeoError):
    pass


class DomainTooSmall(ConfgeoError):
    pass


class LorentzianUnsupported(ConfgeoError):
    pass


# --- planes and cones ---

class NotAPlane(ConfgeoError):
    pass


class NotIsotropic(ConfgeoError):
    pass


class NoNullVectors(ConfgeoError):
    pass


# --- geodesics ---

class LeftDomain(ConfgeoError):
    def __init__(self, message, s=None, state=None):
        super().__init__(message)
        self.s = s
        self.state = state


class StepFailure(ConfgeoError):
    pass


class HypothesisViolated(ConfgeoError):
    pass


# --- hypersurfaces ---

class RankDeficient(ConfgeoError):
    pass


class DegenerateInducedMetric(ConfgeoError):
    pass


class NullNormal(ConfgeoError):
    pass


class NotUmbilic(ConfgeoError):
    pass


class GaugeUnsupported(ConfgeoError):
    """The totally-geodesic gauge needs a signed-distance expression and a
    constant umbilic factor; anything else is out of scope."""


class AmbientNotSelfDual(ConfgeoError):
    pass


# --- manifests ---

class ManifestError(ConfgeoError):
    """Carries the full list of problems, not just the first one."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors) or "invalid manifest")


class ParseError(ManifestError):
    pass


class SchemaError(ManifestError):
    pass


class UnresolvedReference(ManifestError):
    pass
