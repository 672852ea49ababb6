"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input (dimensions, singular matrices, ...)."""


class InvalidBodyError(InputError):
    """A body description that does not define a convex body with the origin inside."""


class PreconditionError(ValueError):
    """An operation was called outside its domain of validity."""


class UnsupportedError(NotImplementedError):
    """The request is well formed but outside what the library handles."""


class UnsupportedBodyError(UnsupportedError):
    pass


class UnsupportedScenarioError(UnsupportedError):
    pass


class SingularPointError(ArithmeticError):
    """A potential was differentiated at a point where it has no gradient."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points


class EmptyRegionError(ValueError):
    """An integration region has zero measure."""


class DecayFitError(RuntimeError):
    """Sampled certification of a linear decay bound found a violation."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ScenarioError(InputError):
    """Scenario file could not be parsed or validated."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.field = field
        self.line = line
