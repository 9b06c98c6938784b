"""Exception hierarchy shared by all modules."""


class FocusFocusError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FocusFocusError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SingularityError(DomainError):
    """Evaluation at the singular point of the Ooguri-Vafa potential."""


class DegenerateLatticeError(DomainError):
    """S1 - ln|c| <= 0: the period lattice (and everything built on it) degenerates."""


class FrameMismatchError(FocusFocusError, ValueError):
    pass


class StencilError(DomainError):
    """A finite-difference stencil leaves the domain of the field."""


class PositivityError(FocusFocusError):
    """A metric or potential that must be positive is not."""


class NotHyperkahlerError(FocusFocusError):
    """Three 2-forms fail the quaternionic relations at a point."""


class ModelViolationError(FocusFocusError):
    """Samples of the twistor family do not fit the Laurent model."""


class NumericalFailure(FocusFocusError, ArithmeticError):
    """Quadrature or series evaluation did not reach its target accuracy."""


class ContourError(DomainError):
    """A twistor parameter sits on (or too close to) an integration contour."""


class ConfigError(FocusFocusError, ValueError):
    """Invalid run configuration; the message names the field and, when known, the line."""
