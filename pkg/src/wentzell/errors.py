"""Exception hierarchy shared by every module of the package."""


class WentzellError(Exception):
    """Base class for all package errors."""


class ConfigurationError(WentzellError, ValueError):
    """Invalid geometry or run configuration; ``field`` names the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConstraintError(ConfigurationError):
    """A cross-field constraint of the configuration is violated."""


class DimensionError(WentzellError, ValueError):
    pass


class ParameterError(WentzellError, ValueError):
    pass


class PreconditionError(WentzellError, ValueError):
    pass


class AssemblyError(WentzellError):
    pass


class NumericError(WentzellError, ArithmeticError):
    pass


class BlowUpError(NumericError):
    """Modal amplitude left the representable range during a run."""

    def __init__(self, amplitude, message=None):
        self.amplitude = float(amplitude)
        super().__init__(message or f"modal amplitude {self.amplitude:.3e} exceeds blow-up guard")


class StepError(NumericError):
    """Newton iteration of one time step failed to converge."""


class IntegrationError(NumericError):
    def __init__(self, time, message):
        self.time = float(time)
        super().__init__(f"t={self.time:.6g}: {message}")
