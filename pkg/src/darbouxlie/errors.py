"""Exception hierarchy shared by all modules."""


class DarbouxError(Exception):
    """Base class for every error raised by this package."""


class OutOfBranch(DarbouxError, ValueError):
    """Matrix logarithm requested outside the principal branch."""


class ProjectionResidual(DarbouxError, ValueError):
    """An ambient matrix is too far from the Lie algebra."""


class NotMember(DarbouxError, ValueError):
    """A matrix fails the group membership check."""


class LeftDomain(DarbouxError, ArithmeticError):
    """A flow left the guarded chart."""


class DifferentFibers(DarbouxError, ValueError):
    """Two points that must share a fiber lie over different base points."""


class NotTangent(DarbouxError, ValueError):
    """A tangent representative is too far from the tangent space."""


class TargetNotModule(DarbouxError, TypeError):
    pass


class KindMismatch(DarbouxError, TypeError):
    pass


class NotEquivariant(DarbouxError, ValueError):
    pass


class ParseError(DarbouxError, ValueError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class ExpressionError(DarbouxError, ArithmeticError):
    """Runtime failure while evaluating a scalar expression."""


class ScenarioError(DarbouxError):
    """Base class for configuration problems; maps to CLI exit code 2."""


class SchemaError(ScenarioError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ResolveError(ScenarioError, KeyError):
    def __init__(self, name, context=""):
        self.name = name
        super().__init__(name if not context else f"{name} ({context})")

    def __str__(self):
        return str(self.name)


class DimensionError(ScenarioError, ValueError):
    pass


class UnknownSuite(ScenarioError, KeyError):
    def __str__(self):
        return f"unknown suite: {self.args[0]}"
