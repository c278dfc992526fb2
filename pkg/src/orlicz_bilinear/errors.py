"""Exception types raised across the package."""


class OrliczError(Exception):
    """Base class for all package errors."""


class ParameterError(OrliczError, ValueError):
    """A family or operation parameter is outside its admissible range."""

    def __init__(self, name, value, constraint):
        self.name = name
        self.value = value
        self.constraint = constraint
        super().__init__(f"{name}={value!r} violates {constraint}")


class DomainLimitError(OrliczError, ArithmeticError):
    """Root bracketing ran out of floating-point range."""

    def __init__(self, target, reachable):
        self.target = target
        self.reachable = reachable
        lo, hi = reachable
        super().__init__(
            f"cannot invert at {target!r}: reachable derivative range is [{lo:.3e}, {hi:.3e}]"
        )


class InvalidYoungPairError(OrliczError, ValueError):
    """Scanned ratios violate the standing assumptions on the Young pair."""


class QuadratureError(OrliczError, ArithmeticError):
    def __init__(self, message, interval=None, achieved=None):
        self.interval = interval
        self.achieved = achieved
        if interval is not None:
            message = f"{message} on [{interval[0]:.6g}, {interval[1]:.6g}]"
        if achieved is not None:
            message = f"{message} (achieved tolerance {achieved:.3e})"
        super().__init__(message)


class NonEllipticError(OrliczError, ValueError):
    """A matrix field fails (p-)ellipticity."""

    def __init__(self, which, constant, value, p=None):
        self.which = which
        self.constant = constant
        self.value = value
        self.p = p
        at = f" at p={p:g}" if p is not None else ""
        super().__init__(f"matrix {which} is not elliptic{at}: {constant}={value:.6g} <= 0")


class InapplicableError(OrliczError, ValueError):
    """The requested check does not apply to the given input."""


class PoleError(OrliczError, ZeroDivisionError):
    """Evaluation requested on a coordinate plane u=0 or v=0."""


class UndefinedHessianError(OrliczError, ValueError):
    """Second derivatives are not defined at the requested point."""


class ConfigError(OrliczError, ValueError):
    """Malformed configuration record."""
