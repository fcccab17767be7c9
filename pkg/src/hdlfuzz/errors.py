"""Exception types shared across the package."""


class HdlError(Exception):
    """Base class for all errors raised by this package."""


class DesignError(HdlError):
    """A design violates a structural invariant (caller bug)."""


class HdlSyntaxError(HdlError):
    """Source text is not valid in the supported subset."""

    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class UnsupportedConstructError(HdlSyntaxError):
    """Valid Verilog, but outside the supported subset."""

    def __init__(self, construct, line, col):
        super().__init__(f"unsupported construct: {construct}", line, col)
        self.construct = construct


class WidthMismatchError(HdlError):
    """An expression cannot be width-resolved (AST construction bug)."""


class CombLoopError(HdlError):
    """A combinational cycle where none is allowed."""


class BudgetInfeasibleError(HdlError):
    """The generator cannot meet the configured line budget."""


class NoEligibleVariableError(HdlError):
    """No in-scope variable satisfies the guard-variable constraint."""


class UnextractableRegionError(HdlError):
    """A guarded region cannot be moved into a submodule soundly."""


class ProfiledGuardError(HdlError):
    """SMT export rejected a variant whose guards are only profile-true."""


class FlakyPredicateError(HdlError):
    """The reduction predicate did not hold on its own starting input."""


class AdapterConfigError(HdlError):
    """An external-tool adapter definition is invalid."""


class SimulatedCrash(HdlError):
    """Raised by the mock synthesizer's crash fault class."""

    def __init__(self, message, backtrace):
        super().__init__(message)
        self.backtrace = backtrace
