"""Exception types raised across the package."""


class BQCError(Exception):
    """Base class for all errors raised by :mod:`bqc`."""


class SingularForm(BQCError, ValueError):
    pass


class NotOnHypersurface(BQCError, ValueError):
    pass


class BudgetExceeded(BQCError, RuntimeError):
    """The requested computation needs more work than the configured budget."""

    def __init__(self, needed, budget, what=""):
        self.needed = needed
        self.budget = budget
        msg = f"{what}: needs {needed:.3g} units of work, budget is {budget:.3g}"
        super().__init__(msg.lstrip(": "))


class NotStabilized(BQCError, RuntimeError):
    pass


class NonConvergent(BQCError, RuntimeError):
    pass


class SchemaError(BQCError, ValueError):
    """Invalid form or config file; the message names the offending field."""


class ConfigError(SchemaError):
    pass
