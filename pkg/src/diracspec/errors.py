"""Exception hierarchy. Every error contract raised by the package derives from DiracError."""


class DiracError(Exception):
    """Base class for all package errors."""


class DomainError(DiracError, ValueError):
    """Evaluation point or parameter outside its admissible range."""


class StructureError(DiracError, ValueError):
    """A matrix field is not symmetric and trace-free."""


class ShapeError(DiracError, ValueError):
    """Grid functions defined on incompatible grids."""


class IntegrationOverflow(DiracError, ArithmeticError):
    def __init__(self, x):
        super().__init__(f"non-finite state during integration at x={x!r}")
        self.x = x


class EnumerationError(DiracError):
    """Root count or spacing incompatible with the requested index range."""


class RootError(DiracError):
    """Bracketed refinement did not converge."""


class PreconditionError(DiracError, ValueError):
    pass


class TrackingError(DiracError):
    """An eigenvalue could not be matched across a perturbation."""


class FitError(DiracError):
    def __init__(self, msg, last_potential=None, history=None):
        super().__init__(msg)
        self.last_potential = last_potential
        self.history = history or []


class SingularityError(DiracError):
    """theta dropped below the admissible floor."""

    def __init__(self, x, value, floor):
        super().__init__(f"theta={value:.3e} below floor {floor:.1e} at x={x:.6g}")
        self.x = x
        self.value = value
        self.floor = floor
