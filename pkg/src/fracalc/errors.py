"""Exception types raised by fracalc."""


class FracalcError(Exception):
    """Base class for all fracalc errors."""


class DomainError(FracalcError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class IntegerOrderError(DomainError):
    """The operation needs a non-integer fractional order."""


class MeshMismatchError(FracalcError, ValueError):
    """Grid functions live on different meshes."""


class ConventionError(FracalcError, TypeError):
    """Grid functions use incompatible reconstruction conventions."""


class AsymmetricMeshError(FracalcError, ValueError):
    """The mesh is not symmetric under t -> T - t."""


class HypothesisError(FracalcError, ValueError):
    """Input data violates a structural hypothesis (e.g. u(0) = 0)."""


class ExponentGateError(FracalcError, ValueError):
    """Integrability exponents fall outside the regime where existence is proven."""


class PairingUndefinedError(FracalcError, ValueError):
    """A Dirac impulse cannot be paired with the test space at this exponent."""


class SingularDiagonalError(FracalcError, ArithmeticError):
    """The triangular system has a (numerically) vanishing pivot."""


class NonConvergenceError(FracalcError, ArithmeticError):
    """An iteration failed to reach its tolerance."""


class PrecisionLossError(FracalcError, ArithmeticError):
    """Cancellation destroyed the accuracy a series evaluation must certify."""


class OracleMissingError(FracalcError, KeyError):
    """No reference solution is registered for a convergence target."""


class SchemaError(FracalcError, ValueError):
    """A problem file does not match the schema its verb requires."""
