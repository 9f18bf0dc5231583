"""Exception hierarchy shared by all fraciga modules."""


class FracIGAError(Exception):
    """Base class for all library errors."""


class DomainError(FracIGAError, ValueError):
    """An argument lies outside the domain of an operation."""


class UnsupportedDegreeError(DomainError):
    pass


class InsertionError(FracIGAError, ValueError):
    pass


class NotInDomain(FracIGAError):
    """A physical point could not be located inside the mapped domain."""

    def __init__(self, point, reason="outside domain"):
        self.point = tuple(float(c) for c in point)
        self.reason = reason
        super().__init__(f"point {self.point} not in domain: {reason}")


class AssemblyError(FracIGAError):
    """Operator assembly failed for a point the membership test accepted."""

    def __init__(self, point, detail=""):
        self.point = tuple(float(c) for c in point)
        msg = f"assembly failed at physical point {self.point}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SingularMatrixError(FracIGAError, ArithmeticError):
    pass


class StabilityError(FracIGAError, ArithmeticError):
    """Time stepping produced values beyond the divergence threshold."""


class ResourceError(FracIGAError):
    pass


class ConfigError(FracIGAError, ValueError):
    pass
