"""Exception hierarchy shared across the package."""


class QDPError(Exception):
    """Base class for all package errors."""


class ParseError(QDPError):
    """A record in an input file could not be parsed.

    Carries the file name and 1-based line number so that callers can
    point users at the offending row.
    """

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        super().__init__(f"{self.path}:{line}: {message}")


class DataError(QDPError):
    """Input data violate a documented invariant."""


class HorizonError(DataError):
    """A series is missing a quarter needed by a k-period transform."""

    def __init__(self, quarter, what="series"):
        self.quarter = quarter
        super().__init__(f"{what} has no observation for {quarter}")


class ParameterError(QDPError, ValueError):
    """An argument is outside its admissible range."""


class SingularDesignError(QDPError):
    """Regressor matrix is rank deficient."""

    def __init__(self, columns, message=None):
        self.columns = list(columns)
        msg = message or "design matrix is singular"
        super().__init__(f"{msg}; offending columns: {', '.join(self.columns)}")


class CollinearityError(SingularDesignError):
    """An added control is collinear with what the model already absorbs."""


class GeometryError(QDPError):
    """Invalid polygon input."""

    def __init__(self, message, ring_index=None):
        self.ring_index = ring_index
        if ring_index is not None:
            message = f"ring {ring_index}: {message}"
        super().__init__(message)


class DivergenceError(QDPError, ValueError):
    """A geometric sum that must converge does not."""
