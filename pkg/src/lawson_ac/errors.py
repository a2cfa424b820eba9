"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical nonconvergence exits 3 and geometry/validity problems exit 4.
"""


class ArtifactError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1

    def to_dict(self):
        return {"type": type(self).__name__, "message": str(self)}


class ConfigError(ArtifactError, ValueError):
    """A run configuration failed validation.

    ``errors`` holds one entry per problem found, not only the first.
    """

    exit_code = 2

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

    def to_dict(self):
        return {"type": type(self).__name__, "errors": self.errors}


class NonconvergenceError(ArtifactError):
    """An iterative or linear solve did not reach its tolerance."""

    exit_code = 3

    def __init__(self, message, report=None, residual=None):
        super().__init__(message)
        self.report = report
        self.residual = residual

    def to_dict(self):
        out = super().to_dict()
        if self.residual is not None:
            out["residual"] = float(self.residual)
        return out


class GeometryError(ArtifactError):
    """Invalid geometry: bad dimensions, charts used outside their band, etc."""

    exit_code = 4


class InvalidConeError(GeometryError, ValueError):
    pass


class DomainError(GeometryError, ValueError):
    """Argument outside the mathematical domain of an operation (e.g. l <= 0)."""


class LeafIntegrationError(GeometryError):
    pass


class FermiValidityError(GeometryError):
    pass


class FitError(GeometryError):
    """Asymptotic fit was ill-conditioned or had too little data."""


class NodalError(GeometryError):
    """Zero level set missing, disconnected or not a monotone graph."""
