"""Exception types shared across the package."""


class HJSRError(Exception):
    """Base class for all errors raised by hjsr."""


class DimensionError(HJSRError, ValueError):
    """Operands have incompatible dimensions."""


class DomainError(HJSRError, ValueError):
    """An argument lies outside the domain of an operation."""


class BudgetError(HJSRError):
    """An enumeration would exceed its product budget."""

    def __init__(self, message, needed=None, cap=None):
        super().__init__(message)
        self.needed = needed
        self.cap = cap


class InputError(HJSRError, ValueError):
    """A structured input document could not be parsed or validated."""

    def __init__(self, message, path=None, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        if path:
            where.append(path)
        prefix = ": ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.reason = message
        self.path = path
        self.line = line
        self.column = column
