"""Exception and warning types shared across the package."""


class HeavenlyError(Exception):
    """Base class for all errors raised by :mod:`heavenly`."""


class ExpOverflow(HeavenlyError, OverflowError):
    """An exponent evaluated at a point exceeds the configured real-part bound."""


class DegenerateTerm(HeavenlyError):
    """A solution term is (numerically) constant, e.g. ``chi = 0`` in the dilatational family."""


class DivisionByZero(HeavenlyError, ZeroDivisionError):
    """A parameter law hits the zero of its denominator."""


class Incompatible(HeavenlyError):
    """Parameters do not satisfy a required compatibility constraint."""


class FrameMismatch(HeavenlyError):
    """Jets or potentials live in a coordinate frame the operation does not accept."""


class InsufficientJetOrder(HeavenlyError):
    """A jet does not carry derivatives of the order an equation consumes."""


class DegenerateMetric(HeavenlyError):
    """A denominator of a metric formula vanishes at the sample point."""

    def __init__(self, quantity, value=None):
        self.quantity = quantity
        self.value = value
        msg = f"degenerate metric: {quantity} vanishes"
        if value is not None:
            msg += f" (value {value:.3e})"
        super().__init__(msg)


class NonPositiveLeadingEntry(HeavenlyError):
    """The tetrad needs ``sqrt(u_{1 1bar})`` but ``u_{1 1bar} <= 0``."""


class ResidualImaginaryPart(HeavenlyError):
    """A realified metric still carries an imaginary part above tolerance."""


class IllConditioned(HeavenlyError):
    """A finite-difference error estimate exceeds the quantity it estimates."""


class FieldEquationViolated(UserWarning):
    """The supplied potential does not satisfy its field equation at the point."""
