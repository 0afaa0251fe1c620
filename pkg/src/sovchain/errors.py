"""Exception types shared across the library."""


class SovChainError(Exception):
    """Base class for all library errors."""


class SimpleSpectrumViolation(SovChainError):
    """Twist matrix is proportional to the identity."""


class SingularTwistWarning(UserWarning):
    """Twist matrix has a zero eigenvalue; some constructions are gated off."""


class GenericityViolation(SovChainError):
    """Inhomogeneities collide modulo eta inside the protected window."""


class DegenerateBasis(SovChainError):
    """A constructed covector family fails the full-rank test."""


class NearDegenerateSpectrum(SovChainError):
    """Brute-force diagonalization found an eigenvalue gap below tolerance."""


class NonConvergence(SovChainError):
    """Newton refinement of a spectrum candidate did not converge."""


class CountMismatch(SovChainError):
    """Number of distinct discrete-system solutions differs from dim(H)."""


class SingularCZeta(SovChainError):
    """Interpolation system matrix is singular for the chosen auxiliary point."""


class RootOnForbiddenNode(SovChainError):
    """A Q-polynomial root collides with a lowest grid node."""


class ResidualTooLarge(SovChainError):
    """A reconstructed object fails its verification residual."""


class NonInvertibleQ(SovChainError):
    """Q-operator is numerically singular at a point where it must be invertible."""
